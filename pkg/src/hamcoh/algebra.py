"""The truncated Poisson and Hamiltonian Lie algebras po, h, h1, h2.

Elements are generating functions in divided powers; the bracket is the
Poisson bracket of the symplectic form ``sum dx_i ^ dx_{i+m}``::

    {f, g} = sum_i  df/dx_i * dg/dx_{i+m}  -  df/dx_{i+m} * dg/dx_i

For every family except ``po`` the constant term of a bracket is dropped
(those algebras are taken modulo constants).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from hamcoh.gfp import check_modulus
from hamcoh.monomials import (
    AlgebraElement,
    Monomial,
    format_monomial,
    parse_monomial,
    standard_grade,
    symmetric_grade,
)

FAMILIES = ("po", "h", "h1", "h2")
GRADINGS = ("standard", "symmetric")


class ClosureError(ValueError):
    """A bracket left the span of the algebra's basis."""


@dataclass(frozen=True)
class AlgebraSpec:
    family: str
    n: int
    p: int
    grading: str = "symmetric"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.grading not in GRADINGS:
            raise ValueError(f"unknown grading {self.grading!r}; expected one of {GRADINGS}")
        if not isinstance(self.n, int) or self.n < 2 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 2, got {self.n}")
        check_modulus(self.p)

    @property
    def m(self) -> int:
        return self.n // 2

    def expected_dim(self) -> int:
        base = self.p**self.n
        return {"po": base + self.n, "h": base + self.n - 1, "h1": base - 1, "h2": base - 2}[self.family]

    def with_grading(self, grading: str) -> AlgebraSpec:
        return AlgebraSpec(self.family, self.n, self.p, grading)

    def label(self) -> str:
        return f"{self.family}({self.n})_{self.p}"

    def as_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "p": self.p, "grading": self.grading}


def build_basis(spec: AlgebraSpec) -> list[Monomial]:
    """Ordered basis: truncated monomials by packed key, then ``x_i^(p)``."""
    n, p = spec.n, spec.p
    top = n * (p - 1)
    basis = []
    for exps in itertools.product(range(p), repeat=n):
        total = sum(exps)
        if spec.family != "po" and total == 0:
            continue
        if spec.family == "h2" and total == top:
            continue
        basis.append(Monomial(exps))
    if spec.family in ("po", "h"):
        basis.extend(Monomial.var(i, n, p) for i in range(n))
    return basis


def poisson_bracket(f: AlgebraElement, g: AlgebraElement, spec: AlgebraSpec,
                    basis: Iterable[Monomial] | None = None) -> AlgebraElement:
    span = set(build_basis(spec) if basis is None else basis)
    for operand in (f, g):
        outside = [m for m in operand.terms if m not in span]
        if outside:
            raise ClosureError(f"{format_monomial(outside[0])} is not in {spec.label()}")
    return _bracket(f, g, spec)


def _bracket(f: AlgebraElement, g: AlgebraElement, spec: AlgebraSpec) -> AlgebraElement:
    m = spec.m
    out = AlgebraElement.zero(spec.p, spec.n)
    for i in range(m):
        out = out + f.derivative(i) * g.derivative(i + m) - f.derivative(i + m) * g.derivative(i)
    if spec.family != "po":
        out = out.without_constant()
    return out


Terms = tuple[tuple[int, int], ...]


@dataclass
class LiePAlgebra:
    """A finite-dimensional algebra with a sparse structure-constant table.

    ``brackets`` holds ``(i, j) -> ((k, c), ...)`` for ``i < j`` only and
    nonzero values only, ``k`` ascending.
    """

    spec: AlgebraSpec
    basis: list[Monomial]
    brackets: dict[tuple[int, int], Terms]
    grades_standard: list[int]
    grades_symmetric: list[int]
    index: dict[Monomial, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {mono: i for i, mono in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def grades(self) -> list[int]:
        if self.spec.grading == "standard":
            return self.grades_standard
        return self.grades_symmetric

    @property
    def grade_range(self) -> int:
        return max(abs(g) for g in self.grades)

    def bracket(self, i: int, j: int) -> Terms:
        if i < j:
            return self.brackets.get((i, j), ())
        if i > j:
            p = self.p
            return tuple((k, -c % p) for k, c in self.brackets.get((j, i), ()))
        return ()

    def bracket_vectors(self, u: dict[int, int], v: dict[int, int]) -> dict[int, int]:
        """Bilinear extension of the table to sparse coordinate vectors."""
        p = self.p
        out: dict[int, int] = {}
        for i, a in u.items():
            for j, b in v.items():
                for k, c in self.bracket(i, j):
                    out[k] = (out.get(k, 0) + a * b * c) % p
        return {k: c for k, c in out.items() if c}

    def element(self, vector: dict[int, int]) -> AlgebraElement:
        return AlgebraElement({self.basis[k]: c for k, c in vector.items()},
                              p=self.p, n=self.spec.n)

    def coordinates(self, f: AlgebraElement) -> dict[int, int]:
        try:
            return {self.index[mono]: c for mono, c in f.terms.items()}
        except KeyError as exc:
            raise ClosureError(f"{exc.args[0]} is not in {self.spec.label()}") from None

    def with_grading(self, grading: str) -> LiePAlgebra:
        return LiePAlgebra(self.spec.with_grading(grading), self.basis, self.brackets,
                           self.grades_standard, self.grades_symmetric)

    def with_bracket(self, i: int, j: int, terms: Iterable[tuple[int, int]]) -> LiePAlgebra:
        """Copy with one table slot overwritten (used for negative controls)."""
        if i > j:
            i, j = j, i
            terms = [(k, -c) for k, c in terms]
        table = dict(self.brackets)
        cleaned = tuple(sorted((k, c % self.p) for k, c in terms if c % self.p))
        if cleaned:
            table[(i, j)] = cleaned
        else:
            table.pop((i, j), None)
        return LiePAlgebra(self.spec, self.basis, table, self.grades_standard, self.grades_symmetric)

    def subalgebra(self, indices: Sequence[int], family: str | None = None) -> LiePAlgebra:
        """Restrict to a bracket-closed subset of basis indices."""
        indices = sorted(indices)
        remap = {old: new for new, old in enumerate(indices)}
        table = {}
        for a, i in enumerate(indices):
            for j in indices[a + 1:]:
                terms = self.bracket(i, j)
                if not terms:
                    continue
                try:
                    table[(remap[i], remap[j])] = tuple((remap[k], c) for k, c in terms)
                except KeyError:
                    raise ClosureError(
                        f"[{self.basis[i]}, {self.basis[j]}] leaves the chosen subspace") from None
        spec = self.spec if family is None else AlgebraSpec(family, self.spec.n, self.p, self.spec.grading)
        return LiePAlgebra(spec, [self.basis[i] for i in indices], table,
                           [self.grades_standard[i] for i in indices],
                           [self.grades_symmetric[i] for i in indices])

    # --- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "spec": self.spec.as_dict(),
            "basis": [format_monomial(m) for m in self.basis],
            "grades": {"standard": list(self.grades_standard),
                       "symmetric": list(self.grades_symmetric)},
            "brackets": [
                {"i": i, "j": j, "terms": [{"k": k, "c": c} for k, c in terms]}
                for (i, j), terms in sorted(self.brackets.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: dict) -> LiePAlgebra:
        spec = AlgebraSpec(**data["spec"])
        basis = [parse_monomial(s, spec.n) for s in data["basis"]]
        table = {}
        for entry in data["brackets"]:
            i, j = entry["i"], entry["j"]
            terms = tuple(sorted((t["k"], t["c"] % spec.p) for t in entry["terms"] if t["c"] % spec.p))
            if i > j:
                i, j = j, i
                terms = tuple((k, -c % spec.p) for k, c in terms)
            if i != j and terms:
                table[(i, j)] = terms
        grades = data.get("grades") or {}
        return cls(spec, basis, table,
                   grades.get("standard") or [standard_grade(m) for m in basis],
                   grades.get("symmetric") or [symmetric_grade(m) for m in basis])


def structure_constants(spec: AlgebraSpec) -> LiePAlgebra:
    """Tabulate the bracket over all basis pairs of ``spec``'s algebra."""
    basis = build_basis(spec)
    index = {mono: i for i, mono in enumerate(basis)}
    p = spec.p
    elements = [AlgebraElement.monomial(mono, p) for mono in basis]
    table: dict[tuple[int, int], Terms] = {}
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            value = _bracket(elements[i], elements[j], spec)
            if not value:
                continue
            terms = []
            for mono, c in value.items():
                k = index.get(mono)
                if k is None:
                    raise ClosureError(
                        f"[{basis[i]}, {basis[j]}] = {value} has component {mono} "
                        f"outside {spec.label()} (pair {i}, {j})")
                terms.append((k, c))
            table[(i, j)] = tuple(sorted(terms))
    if len(basis) != spec.expected_dim():
        raise AssertionError(f"{spec.label()}: built {len(basis)} basis elements, "
                             f"expected {spec.expected_dim()}")
    return LiePAlgebra(spec, basis, table,
                       [standard_grade(m) for m in basis],
                       [symmetric_grade(m) for m in basis])


def derived_ideal(L: LiePAlgebra) -> list[int]:
    """Basis indices spanning ``[L, L]``.

    The span of all bracket values is computed by elimination; for the
    families here it is always a coordinate subspace, which is checked.
    """
    from hamcoh.linalg import row_echelon

    rows = [dict(terms) for terms in L.brackets.values()]
    reduced, pivots = row_echelon(rows, L.dim, L.p)
    if any(len(row) != 1 for row in reduced):
        raise ValueError(f"[L, L] of {L.spec.label()} is not spanned by basis monomials")
    return sorted(pivots)


def grading_element(L: LiePAlgebra) -> dict[int, int]:
    """Coordinates of ``z = sum_i x_i x_{i+m}``."""
    m, n = L.spec.m, L.spec.n
    z = {}
    for i in range(m):
        e = [0] * n
        e[i] = e[i + m] = 1
        z[L.index[Monomial(tuple(e))]] = 1
    return z


def grading_element_sign(L: LiePAlgebra) -> int:
    """+1 if ad_z acts as +grade on every basis vector, -1 if as -grade, else 0."""
    z = grading_element(L)
    p = L.p
    signs = []
    for sign in (1, -1):
        ok = True
        for e, g in enumerate(L.grades_symmetric):
            expected = {e: sign * g % p} if sign * g % p else {}
            if L.bracket_vectors(z, {e: 1}) != expected:
                ok = False
                break
        if ok:
            signs.append(sign)
    if 1 in signs:
        return 1
    return signs[0] if signs else 0


def grading_element_check(L: LiePAlgebra) -> bool:
    """True iff ``{z, e} = (symmetric grade of e mod p) * e`` for every basis vector."""
    z = grading_element(L)
    p = L.p
    for e, g in enumerate(L.grades_symmetric):
        expected = {e: g % p} if g % p else {}
        if L.bracket_vectors(z, {e: 1}) != expected:
            return False
    return True


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    count: int = 0
    skipped: bool = False

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        extra = f" ({self.count} checked)" if self.count else ""
        detail = f": {self.detail}" if self.detail else ""
        return f"[{status}] {self.name}{extra}{detail}"


@dataclass
class Report:
    subject: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def get(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def render(self) -> str:
        lines = [f"{self.subject}: {'PASS' if self.passed else 'FAIL'}"]
        lines.extend("  " + c.line() for c in self.checks)
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"subject": self.subject, "passed": self.passed,
                "checks": [vars(c) for c in self.checks]}


def jacobi_violation(L: LiePAlgebra, a: int, b: int, c: int) -> dict[int, int]:
    jac: dict[int, int] = {}
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        inner = dict(L.bracket(x, y))
        for k, v in L.bracket_vectors(inner, {z: 1}).items():
            jac[k] = (jac.get(k, 0) + v) % L.p
    return {k: v for k, v in jac.items() if v}


def verify_algebra(L: LiePAlgebra, *, raw: bool = True) -> Report:
    """Check dimension, closure, antisymmetry, Jacobi, grading and z-diagonality.

    With ``raw`` the antisymmetry check recomputes every bracket from
    generating functions instead of trusting the table's i<j storage.
    """
    spec, N, p = L.spec, L.dim, L.p
    report = Report(f"{spec.label()} [{spec.grading}]")

    expected = spec.expected_dim()
    report.add(Check("dimension", N == expected, f"dim={N}, expected {expected}"))

    bad = [(i, j) for (i, j), terms in L.brackets.items()
           if not (0 <= i < j < N) or any(not 0 <= k < N or not 0 < c < p for k, c in terms)]
    report.add(Check("closure", not bad, f"bad slots {bad[:3]}" if bad else "", len(L.brackets)))

    if raw:
        elements = [AlgebraElement.monomial(mono, p) for mono in L.basis]
        failures = []
        for i in range(N):
            for j in range(N):
                got = L.coordinates(_bracket(elements[j], elements[i], spec)) if i != j else {}
                want = {k: -c % p for k, c in L.bracket(i, j)}
                if got != want:
                    failures.append((i, j))
        report.add(Check("antisymmetry", not failures,
                         f"first failing pair {failures[0]}" if failures else "", N * N))

    violation = None
    triples = 0
    for a, b, c in itertools.combinations(range(N), 3):
        triples += 1
        if violation is None and jacobi_violation(L, a, b, c):
            violation = (a, b, c)
    detail = ""
    if violation:
        detail = "violated on triple " + ", ".join(str(L.basis[t]) for t in violation) + f" {violation}"
    report.add(Check("jacobi", violation is None, detail, triples))

    for name, grades in (("grade additivity (standard)", L.grades_standard),
                         ("grade additivity (symmetric)", L.grades_symmetric)):
        bad = [(i, j) for (i, j), terms in L.brackets.items()
               if any(grades[k] != grades[i] + grades[j] for k, _ in terms)]
        report.add(Check(name, not bad, f"first failing pair {bad[0]}" if bad else "", len(L.brackets)))

    total = sum(L.grades_symmetric)
    report.add(Check("symmetric grades sum to zero", total == 0, f"sum={total}"))

    sign = grading_element_sign(L)
    report.add(Check("grading element diagonal", sign != 0,
                     f"ad_z = {'+' if sign > 0 else '-'}grade (mod p)" if sign else "ad_z is not grade-diagonal",
                     N))
    return report
