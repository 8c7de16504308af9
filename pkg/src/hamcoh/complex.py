"""Graded Chevalley-Eilenberg chain complex ``C_{k,g} = (Lambda^k L)_g``.

Chains are wedges ``e_{i1} ^ ... ^ e_{ik}`` of basis vectors, written as
strictly increasing index tuples.  The boundary for trivial coefficients is

    d(e_1 ^ ... ^ e_k) = sum_{a<b} (-1)^(a+b) [e_a, e_b] ^ e_1 ^ .. ^e_a^ .. ^e_b^ .. ^ e_k

and preserves the grade, so every ``(k, g)`` box is an independent
matrix.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from hamcoh.algebra import LiePAlgebra
from hamcoh.linalg import SparseMatrixFp


class GradeError(ValueError):
    """A bracket term fell outside the box's grade."""


@dataclass
class GradedChainBasis:
    k: int
    g: int
    subsets: list[tuple[int, ...]]
    index_of: dict[tuple[int, ...], int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index_of = {t: i for i, t in enumerate(self.subsets)}

    def __len__(self) -> int:
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)


def chain_dimensions(L: LiePAlgebra | Sequence[int]) -> dict[tuple[int, int], int]:
    """``{(k, g): dim C_{k,g}}`` for every non-empty box, k = 0..N.

    Accepts an algebra or just its list of grades.  Computed from the
    generating function ``prod_i (1 + t q^{grade_i})``.
    """
    grades = L.grades if isinstance(L, LiePAlgebra) else L
    poly: dict[tuple[int, int], int] = {(0, 0): 1}
    for gi in grades:
        new = defaultdict(int, poly)
        for (k, g), c in poly.items():
            new[(k + 1, g + gi)] += c
        poly = dict(new)
    return poly


def count_boxes(L: LiePAlgebra | Sequence[int], include_k0: bool = False) -> int:
    lo = 0 if include_k0 else 1
    return sum(1 for (k, _), c in chain_dimensions(L).items() if c and k >= lo)


def _suffix_bounds(grades: list[int]) -> tuple[list[list[int]], list[list[int]]]:
    """lo[i][j] / hi[i][j]: min / max grade sum of j elements among grades[i:]."""
    N = len(grades)
    lo, hi = [], []
    for i in range(N + 1):
        tail = sorted(grades[i:])
        lo_i, hi_i = [0], [0]
        for j in range(1, len(tail) + 1):
            lo_i.append(lo_i[-1] + tail[j - 1])
            hi_i.append(hi_i[-1] + tail[-j])
        lo.append(lo_i)
        hi.append(hi_i)
    return lo, hi


def enumerate_chain_basis(L: LiePAlgebra, k: int, g: int) -> GradedChainBasis:
    """All k-subsets of basis indices with grade sum ``g``, in lexicographic order.

    Depth-first over indices with the residual grade bounded by the
    smallest / largest attainable sums of the remaining picks.
    """
    grades = L.grades
    N = len(grades)
    if not 0 <= k <= N:
        raise ValueError(f"degree {k} outside 0..{N}")
    lo, hi = _suffix_bounds(grades)
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def walk(start: int, need: int, rest: int) -> None:
        if need == 0:
            if rest == 0:
                out.append(tuple(prefix))
            return
        for i in range(start, N - need + 1):
            r = rest - grades[i]
            if lo[i + 1][need - 1] <= r <= hi[i + 1][need - 1]:
                prefix.append(i)
                walk(i + 1, need - 1, r)
                prefix.pop()

    if lo[0][k] <= g <= hi[0][k]:
        walk(0, k, g)
    return GradedChainBasis(k, g, out)


def boundary_matrix(L: LiePAlgebra, k: int, g: int,
                    source: GradedChainBasis | None = None,
                    target: GradedChainBasis | None = None) -> SparseMatrixFp:
    """Matrix of ``d: C_{k,g} -> C_{k-1,g}``, columns in ``source`` order."""
    if k < 1:
        raise ValueError("the boundary is defined for k >= 1")
    source = source if source is not None else enumerate_chain_basis(L, k, g)
    target = target if target is not None else enumerate_chain_basis(L, k - 1, g)
    p = L.p
    N = L.dim
    table: list[list[tuple]] = [[()] * N for _ in range(N)]
    for (i, j), terms in L.brackets.items():
        table[i][j] = terms
    lookup = target.index_of
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    pairs = [(a, b, 1 if (a + b) % 2 == 0 else -1) for a in range(k) for b in range(a + 1, k)]
    for col, t in enumerate(source.subsets):
        for a, b, sign0 in pairs:
            terms = table[t[a]][t[b]]
            if not terms:
                continue
            rest = t[:a] + t[a + 1:b] + t[b + 1:]
            for c, coeff in terms:
                pos = bisect_left(rest, c)
                if pos < len(rest) and rest[pos] == c:
                    continue
                row = lookup.get(rest[:pos] + (c,) + rest[pos:])
                if row is None:
                    raise GradeError(
                        f"[{L.basis[t[a]]}, {L.basis[t[b]]}] has a term of grade "
                        f"{L.grades[c]} != {L.grades[t[a]]} + {L.grades[t[b]]}")
                rows.append(row)
                cols.append(col)
                vals.append(coeff if (sign0 > 0) == (pos % 2 == 0) else -coeff)
    return SparseMatrixFp.from_coo(len(target), len(source), rows, cols, vals, p)


def export_matrix(M: SparseMatrixFp) -> str:
    """Coordinate text rendering (``rows cols nnz modulus`` header, 0-based triplets)."""
    return M.to_text()
