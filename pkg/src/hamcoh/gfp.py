"""Arithmetic in the prime field GF(p).

Field elements are plain Python ints in ``[0, p)``.  The modulus travels
with a :class:`PrimeField` context object that is validated once; the
arithmetic helpers below trust their inputs.
"""

from __future__ import annotations

from functools import lru_cache


class FieldError(ValueError):
    """Invalid modulus or a non-invertible operand."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def check_modulus(p: int) -> int:
    """Return ``p`` if it is an odd prime, raise :class:`FieldError` otherwise."""
    if not isinstance(p, int) or isinstance(p, bool):
        raise FieldError(f"modulus must be an int, got {type(p).__name__}")
    if p == 2:
        raise FieldError("p = 2 is not supported; use an odd prime")
    if not is_prime(p):
        raise FieldError(f"modulus {p} is not a prime")
    return p


def add(a: int, b: int, p: int) -> int:
    return (a + b) % p


def sub(a: int, b: int, p: int) -> int:
    return (a - b) % p


def mul(a: int, b: int, p: int) -> int:
    return (a * b) % p


def neg(a: int, p: int) -> int:
    return -a % p


def inv(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise FieldError(f"0 has no inverse mod {p}")
    return pow(a, p - 2, p)


def lucas_binomial(a: int, b: int, p: int) -> int:
    """C(a, b) mod p via Lucas' theorem on base-p digits."""
    if b < 0 or b > a:
        raise ValueError(f"binomial({a}, {b}) requires 0 <= b <= a")
    result = 1
    while a or b:
        ad, bd = a % p, b % p
        if bd > ad:
            return 0
        c = 1
        for i in range(bd):
            c = c * (ad - i) // (i + 1)
        result = result * c % p
        a //= p
        b //= p
    return result


@lru_cache(maxsize=None)
def pascal_table(p: int, rows: int) -> tuple[tuple[int, ...], ...]:
    """Pascal's triangle mod p, rows ``0..rows`` inclusive."""
    table = [(1,)]
    for a in range(1, rows + 1):
        prev = table[-1]
        row = [1] * (a + 1)
        for b in range(1, a):
            row[b] = (prev[b - 1] + prev[b]) % p
        table.append(tuple(row))
    return tuple(table)


def binomial_mod_p(a: int, b: int, p: int) -> int:
    """C(a, b) mod p for ``0 <= b <= a <= 2p`` by table lookup."""
    if b < 0 or b > a:
        raise ValueError(f"binomial({a}, {b}) requires 0 <= b <= a")
    if a > 2 * p:
        return lucas_binomial(a, b, p)
    return pascal_table(p, 2 * p)[a][b]


class PrimeField:
    """Validated GF(p) context with precomputed inverse and binomial tables."""

    __slots__ = ("p", "inverses", "binomials")

    def __init__(self, p: int) -> None:
        self.p = check_modulus(p)
        self.inverses = (0,) + tuple(pow(a, p - 2, p) for a in range(1, p))
        self.binomials = pascal_table(p, 2 * p)

    def __repr__(self) -> str:
        return f"PrimeField({self.p})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF", self.p))

    def __call__(self, value: int) -> int:
        return value % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise FieldError(f"0 has no inverse mod {self.p}")
        return self.inverses[a]

    def binomial(self, a: int, b: int) -> int:
        return self.binomials[a][b]
