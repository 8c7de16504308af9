"""Divided-power monomials ``x^(r) = prod x_i^(r_i)`` and their linear combinations.

Variables are 0-based in code (``x[0]`` .. ``x[n-1]``) and 1-based in the
text syntax (``x1`` .. ``xn``).  The first ``m = n/2`` variables pair with
the last ``m`` through the symplectic form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from hamcoh.gfp import binomial_mod_p


def exponent_bits(p: int) -> int:
    """Bits per exponent in the packed encoding (exponents range over ``0..p``)."""
    return p.bit_length()


def pack(exponents: Iterable[int], p: int) -> int:
    """Packed integer key, ``x1`` in the most significant field.

    Ascending keys coincide with lexicographic order on exponent vectors.
    """
    bits = exponent_bits(p)
    key = 0
    for r in exponents:
        key = (key << bits) | r
    return key


def unpack(key: int, n: int, p: int) -> tuple[int, ...]:
    bits = exponent_bits(p)
    mask = (1 << bits) - 1
    out = []
    for _ in range(n):
        out.append(key & mask)
        key >>= bits
    return tuple(reversed(out))


@dataclass(frozen=True, order=True)
class Monomial:
    """Exponent vector of a divided-power monomial."""

    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(r < 0 for r in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")

    @classmethod
    def constant(cls, n: int) -> Monomial:
        return cls((0,) * n)

    @classmethod
    def var(cls, i: int, n: int, power: int = 1) -> Monomial:
        e = [0] * n
        e[i] = power
        return cls(tuple(e))

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)

    def key(self, p: int) -> int:
        return pack(self.exponents, p)

    def __str__(self) -> str:
        return format_monomial(self)


def multiply(a: Monomial, b: Monomial, p: int) -> tuple[int, Monomial] | None:
    """Product ``x^(r) x^(s) = C(r+s, r) x^(r+s)`` in the truncated algebra.

    Returns ``None`` when the coefficient vanishes mod p, which happens exactly
    when some ``r_i + s_i >= p``.
    """
    if a.n != b.n:
        raise ValueError("monomials live in different numbers of variables")
    coeff = 1
    out = []
    for r, s in zip(a.exponents, b.exponents):
        if r >= p or s >= p:
            raise ValueError(
                f"multiply() got exponent >= p={p} in {a} * {b}; "
                "exponent-p generators must be differentiated first"
            )
        coeff = coeff * binomial_mod_p(r + s, r, p) % p
        if coeff == 0:
            return None
        out.append(r + s)
    # binomial vanishing keeps nonzero products inside the truncated range
    assert all(r < p for r in out), (a, b)
    return coeff, Monomial(tuple(out))


def derivative(a: Monomial, i: int) -> Monomial | None:
    """``d/dx_i x_i^(r) = x_i^(r-1)``; ``None`` if ``x_i`` does not occur."""
    if not 0 <= i < a.n:
        raise IndexError(f"variable index {i} out of range for n={a.n}")
    e = a.exponents
    if e[i] == 0:
        return None
    return Monomial(e[:i] + (e[i] - 1,) + e[i + 1:])


def standard_grade(a: Monomial) -> int:
    """deg x_i = 1 for every variable, shifted so constants sit in grade -2."""
    return sum(a.exponents) - 2


def symmetric_grade(a: Monomial) -> int:
    """deg x_i = -1 for i < m and +1 for i >= m."""
    m = a.n // 2
    return sum(a.exponents[m:]) - sum(a.exponents[:m])


# --- text syntax -----------------------------------------------------------

_FACTOR = re.compile(r"^x(\d+)(?:\^\((\d+)\)|\^(\d+))?$")


def format_monomial(a: Monomial) -> str:
    parts = [f"x{i + 1}^({r})" for i, r in enumerate(a.exponents) if r]
    return "*".join(parts) if parts else "1"


def parse_monomial(text: str, n: int) -> Monomial:
    """Parse ``x1^(2)*x2^(1)``; a bare ``x2`` means exponent 1, ``1`` the constant."""
    text = text.strip().replace(" ", "")
    e = [0] * n
    if text == "1":
        return Monomial(tuple(e))
    for factor in text.split("*"):
        match = _FACTOR.match(factor)
        if not match:
            raise ValueError(f"cannot parse monomial factor {factor!r} in {text!r}")
        i = int(match.group(1))
        if not 1 <= i <= n:
            raise ValueError(f"variable x{i} out of range for n={n}")
        power = match.group(2) or match.group(3)
        e[i - 1] += int(power) if power is not None else 1
    return Monomial(tuple(e))


class AlgebraElement:
    """Sparse GF(p)-linear combination of monomials (a generating function)."""

    __slots__ = ("p", "n", "terms")

    def __init__(self, terms: Mapping[Monomial, int] | None = None, *, p: int, n: int) -> None:
        self.p = p
        self.n = n
        self.terms: dict[Monomial, int] = {}
        for mono, c in (terms or {}).items():
            if mono.n != n:
                raise ValueError(f"{mono} does not have {n} variables")
            c %= p
            if c:
                self.terms[mono] = c

    @classmethod
    def monomial(cls, mono: Monomial, p: int, coeff: int = 1) -> AlgebraElement:
        return cls({mono: coeff}, p=p, n=mono.n)

    @classmethod
    def zero(cls, p: int, n: int) -> AlgebraElement:
        return cls(p=p, n=n)

    def _like(self, terms: Mapping[Monomial, int]) -> AlgebraElement:
        return AlgebraElement(terms, p=self.p, n=self.n)

    def items(self) -> Iterator[tuple[Monomial, int]]:
        """Terms in canonical (ascending packed key) order."""
        for mono in sorted(self.terms):
            yield mono, self.terms[mono]

    def __iter__(self) -> Iterator[tuple[Monomial, int]]:
        return self.items()

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __getitem__(self, mono: Monomial) -> int:
        return self.terms.get(mono, 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.p == other.p and self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.p, tuple(self.items())))

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = (out.get(mono, 0) + c) % self.p
        return self._like(out)

    def __neg__(self) -> AlgebraElement:
        return self._like({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        return self + (-other)

    def scale(self, c: int) -> AlgebraElement:
        return self._like({m: c * v for m, v in self.terms.items()})

    def __rmul__(self, c: int) -> AlgebraElement:
        return self.scale(c)

    def __mul__(self, other: AlgebraElement | int) -> AlgebraElement:
        if isinstance(other, int):
            return self.scale(other)
        out: dict[Monomial, int] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                prod = multiply(ma, mb, self.p)
                if prod is None:
                    continue
                c, mono = prod
                out[mono] = (out.get(mono, 0) + c * ca * cb) % self.p
        return self._like(out)

    def derivative(self, i: int) -> AlgebraElement:
        out: dict[Monomial, int] = {}
        for mono, c in self.terms.items():
            d = derivative(mono, i)
            if d is not None:
                out[d] = (out.get(d, 0) + c) % self.p
        return self._like(out)

    def without_constant(self) -> AlgebraElement:
        const = Monomial.constant(self.n)
        return self._like({m: c for m, c in self.terms.items() if m != const})

    def __repr__(self) -> str:
        return f"AlgebraElement({self}, p={self.p})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.items():
            parts.append(str(mono) if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)
