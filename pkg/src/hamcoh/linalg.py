"""Exact sparse linear algebra over GF(p).

The entry point is :func:`rank_mod_p`.  A matrix is first split into the
connected components of its row/column incidence graph (a block-diagonal
decomposition, which boundary matrices of bigraded complexes have in
abundance).  Each component is then eliminated sparsely with Markowitz
pivoting until the active submatrix gets dense, and the dense remainder is
finished by blocked elimination whose trailing updates are float32 BLAS
products with delayed modular reduction.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)

STRATEGIES = ("hybrid", "sparse", "dense")

# |entries| stay below this between reductions; float32 holds integers
# exactly up to 2**24 and float32 remainder stays exact well inside it
_GROWTH_LIMIT = 1 << 22

# rough bytes per stored entry of the dict-of-dicts active matrix
_DICT_ENTRY_BYTES = 100


class ResourceExceeded(MemoryError):
    """Elimination would exceed the configured memory budget."""

    def __init__(self, needed_mb: float, budget_mb: float, what: str = "elimination") -> None:
        super().__init__(f"{what} needs ~{needed_mb:.0f} MB, budget is {budget_mb:.0f} MB")
        self.needed_mb = needed_mb
        self.budget_mb = budget_mb


@dataclass(eq=False)
class SparseMatrixFp:
    """Compressed sparse column matrix over GF(p), entries in ``1..p-1``."""

    rows: int
    cols: int
    p: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_coo(cls, rows: int, cols: int, r: Sequence[int], c: Sequence[int],
                 v: Sequence[int], p: int) -> SparseMatrixFp:
        """Build from triplets; duplicates are summed mod p and zeros dropped."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64) % p
        m = sps.coo_matrix((v, (r, c)), shape=(rows, cols)).tocsc()
        m.sum_duplicates()
        m.data %= p
        m.eliminate_zeros()
        m.sort_indices()
        return cls(rows, cols, p, m.indptr.astype(np.int64), m.indices.astype(np.int64),
                   m.data.astype(np.int64))

    @classmethod
    def from_dense(cls, a, p: int) -> SparseMatrixFp:
        a = np.asarray(a, dtype=np.int64) % p
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c], p)

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> SparseMatrixFp:
        return cls.from_coo(rows, cols, [], [], [], p)

    @classmethod
    def identity(cls, n: int, p: int) -> SparseMatrixFp:
        return cls.from_coo(n, n, range(n), range(n), [1] * n, p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def to_scipy(self) -> sps.csc_matrix:
        return sps.csc_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray().astype(np.int64)

    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cols = np.repeat(np.arange(self.cols, dtype=np.int64), np.diff(self.indptr))
        return self.indices.copy(), cols, self.data.copy()

    def column(self, j: int) -> dict[int, int]:
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return dict(zip(self.indices[lo:hi].tolist(), self.data[lo:hi].tolist()))

    def row_dicts(self) -> list[dict[int, int]]:
        out: list[dict[int, int]] = [{} for _ in range(self.rows)]
        r, c, v = self.coo()
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            out[i][j] = x
        return out

    def transpose(self) -> SparseMatrixFp:
        r, c, v = self.coo()
        return SparseMatrixFp.from_coo(self.cols, self.rows, c, r, v, self.p)

    @property
    def T(self) -> SparseMatrixFp:
        return self.transpose()

    def permute(self, row_perm: Sequence[int], col_perm: Sequence[int]) -> SparseMatrixFp:
        """Row ``i`` moves to ``row_perm[i]``, column ``j`` to ``col_perm[j]``."""
        r, c, v = self.coo()
        return SparseMatrixFp.from_coo(self.rows, self.cols, np.asarray(row_perm)[r],
                                       np.asarray(col_perm)[c], v, self.p)

    def __matmul__(self, other):
        if isinstance(other, SparseMatrixFp):
            if self.cols != other.rows or self.p != other.p:
                raise ValueError("shape or modulus mismatch")
            prod = (self.to_scipy() @ other.to_scipy()).tocoo()
            return SparseMatrixFp.from_coo(self.rows, other.cols, prod.row, prod.col,
                                           prod.data, self.p)
        vec = np.asarray(other, dtype=np.int64)
        return (self.to_scipy() @ vec) % self.p

    def apply(self, vector: dict[int, int]) -> dict[int, int]:
        """Multiply by a sparse vector given as ``{column: value}``."""
        out: dict[int, int] = {}
        for j, x in vector.items():
            for i, a in self.column(j).items():
                out[i] = (out.get(i, 0) + a * x) % self.p
        return {i: a for i, a in out.items() if a}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrixFp):
            return NotImplemented
        return (self.shape == other.shape and self.p == other.p
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"SparseMatrixFp({self.rows}x{self.cols}, nnz={self.nnz}, p={self.p})"

    # --- coordinate text format ---------------------------------------------

    def to_text(self) -> str:
        """``rows cols nnz modulus`` header, then 0-based ``row col value`` lines."""
        r, c, v = self.coo()
        lines = [f"{self.rows} {self.cols} {self.nnz} {self.p}"]
        lines.extend(f"{i} {j} {x}" for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SparseMatrixFp:
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        rows, cols, nnz, p = (int(x) for x in lines[0].split())
        body = np.array([[int(x) for x in ln.split()] for ln in lines[1:]],
                        dtype=np.int64).reshape(-1, 3)
        if len(body) != nnz:
            raise ValueError(f"header announces {nnz} entries, found {len(body)}")
        return cls.from_coo(rows, cols, body[:, 0], body[:, 1], body[:, 2], p)


# --- sparse dictionary elimination (small problems, kernels, spans) -----------

def row_echelon(rows: Iterable[dict[int, int]], ncols: int, p: int
                ) -> tuple[list[dict[int, int]], list[int]]:
    """Reduced row echelon form of sparse rows; returns (nonzero rows, pivot columns)."""
    pivots: dict[int, dict[int, int]] = {}
    for row in rows:
        row = {j: v % p for j, v in row.items() if v % p}
        # reduce against existing pivots until the leading column is new
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                break
            f = row[lead]
            for j, v in piv.items():
                x = (row.get(j, 0) - f * v) % p
                if x:
                    row[j] = x
                else:
                    row.pop(j, None)
        if not row:
            continue
        lead = min(row)
        scale = pow(row[lead], p - 2, p)
        row = {j: v * scale % p for j, v in row.items()}
        pivots[lead] = row
    # back substitution, highest pivot first
    order = sorted(pivots)
    for a in reversed(order):
        piv = pivots[a]
        for b in order:
            if b >= a:
                break
            other = pivots[b]
            f = other.get(a)
            if f:
                for j, v in piv.items():
                    x = (other.get(j, 0) - f * v) % p
                    if x:
                        other[j] = x
                    else:
                        other.pop(j, None)
    return [pivots[a] for a in order], order


def kernel_basis(M: SparseMatrixFp, p: int | None = None) -> list[dict[int, int]]:
    """Sparse vectors ``{column: value}`` spanning the null space of ``M``."""
    p = M.p if p is None else p
    reduced, pivots = row_echelon(M.row_dicts(), M.cols, p)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pivot_set:
            continue
        vec = {free: 1}
        for lead, row in zip(pivots, reduced):
            c = row.get(free)
            if c:
                vec[lead] = -c % p
        basis.append(vec)
    return basis


# --- numba kernels -------------------------------------------------------------

@numba.njit(cache=True)
def _reduce_rows(a, p):
    """In-place ``a %= p`` on a 2-D float32 array, result in [0, p)."""
    m, n = a.shape
    for i in range(m):
        for j in range(n):
            x = np.int64(a[i, j]) % p
            a[i, j] = x


@numba.njit(cache=True)
def _panel_pivots(panel, p, inverses):
    """Gaussian elimination on an int64 panel (destroyed).

    Returns (pivot rows, pivot columns) in elimination order.
    """
    m, b = panel.shape
    used = np.zeros(m, dtype=np.bool_)
    prow = np.empty(b, dtype=np.int64)
    pcol = np.empty(b, dtype=np.int64)
    t = 0
    for c in range(b):
        piv = -1
        for i in range(m):
            if not used[i] and panel[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        used[piv] = True
        prow[t] = piv
        pcol[t] = c
        t += 1
        inv = inverses[panel[piv, c]]
        for i in range(m):
            if used[i]:
                continue
            f = panel[i, c]
            if f == 0:
                continue
            f = f * inv % p
            for k in range(c, b):
                if panel[piv, k] != 0:
                    panel[i, k] = (panel[i, k] - f * panel[piv, k]) % p
    return prow[:t], pcol[:t]


@numba.njit(cache=True)
def _inverse_mod(s, p, inverses):
    """Inverse of an invertible int64 square matrix mod p (Gauss-Jordan)."""
    t = s.shape[0]
    a = np.zeros((t, 2 * t), dtype=np.int64)
    for i in range(t):
        for j in range(t):
            a[i, j] = s[i, j] % p
        a[i, t + i] = 1
    for c in range(t):
        piv = -1
        for i in range(c, t):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            raise ValueError("singular pivot block")
        if piv != c:
            for k in range(2 * t):
                tmp = a[c, k]
                a[c, k] = a[piv, k]
                a[piv, k] = tmp
        inv = inverses[a[c, c]]
        for k in range(2 * t):
            a[c, k] = a[c, k] * inv % p
        for i in range(t):
            if i != c and a[i, c] != 0:
                f = a[i, c]
                for k in range(2 * t):
                    a[i, k] = (a[i, k] - f * a[c, k]) % p
    return a[:, t:].copy()


def _inverse_table(p: int) -> np.ndarray:
    return np.array([0] + [pow(a, p - 2, p) for a in range(1, p)], dtype=np.int64)


def dense_rank(a: np.ndarray, p: int, block: int = 128, chunk_rows: int = 4096) -> int:
    """Rank of a dense matrix over GF(p) by blocked elimination.

    ``a`` is consumed (converted to float32 and overwritten).  Each column
    panel is factored exactly in int64; the Schur-complement update of the
    trailing block is a float32 matrix product, reduced only when the
    accumulated growth approaches the float32 exactness bound.
    """
    if (p - 1) ** 2 * block + p >= _GROWTH_LIMIT:
        raise ValueError(f"block {block} too large for exact float32 updates with p={p}")
    a = np.ascontiguousarray(a, dtype=np.float32)
    m, n = a.shape
    if m == 0 or n == 0:
        return 0
    inverses = _inverse_table(p)
    _reduce_rows(a, p)
    bound = p  # max |entry| of the unreduced trailing block
    r = 0
    j = 0
    while j < n and r < m:
        jb = min(block, n - j)
        panel_view = a[r:, j:j + jb]
        _reduce_rows(panel_view, p)
        prow, pcol = _panel_pivots(panel_view.astype(np.int64), p, inverses)
        t = len(prow)
        if t == 0:
            j += jb
            continue
        # move pivot rows to positions r .. r+t-1
        target = list(prow)
        for idx in range(t):
            src = target[idx]
            if src != idx:
                a[[r + idx, r + src], j:] = a[[r + src, r + idx], j:]
                for later in range(idx + 1, t):
                    if target[later] == idx:
                        target[later] = src
        cols = j + pcol
        s = a[r:r + t][:, cols].astype(np.int64)
        s_inv = _inverse_mod(s, p, inverses).astype(np.float32)
        if j + jb < n:
            top = a[r:r + t, j + jb:]
            _reduce_rows(top, p)
            for lo in range(r + t, m, chunk_rows):
                hi = min(lo + chunk_rows, m)
                w = a[lo:hi][:, cols] @ s_inv
                _reduce_rows(w, p)
                a[lo:hi, j + jb:] -= w @ top
            bound += t * (p - 1) ** 2
            if bound >= _GROWTH_LIMIT - block * (p - 1) ** 2:
                _reduce_rows(a[r + t:, j + jb:], p)
                bound = p
        r += t
        j += jb
    return r


# --- Markowitz sparse elimination --------------------------------------------

@dataclass
class _Active:
    """Active submatrix during sparse elimination."""

    p: int
    rows: dict[int, dict[int, int]]
    cols: dict[int, set[int]]
    nnz: int = 0
    rank: int = 0
    pivots: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def from_matrix(cls, M: SparseMatrixFp) -> _Active:
        rows: dict[int, dict[int, int]] = {}
        cols: dict[int, set[int]] = {}
        r, c, v = M.coo()
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            rows.setdefault(i, {})[j] = x
            cols.setdefault(j, set()).add(i)
        return cls(M.p, rows, cols, nnz=M.nnz)

    def density(self) -> float:
        if not self.rows or not self.cols:
            return 0.0
        return self.nnz / (len(self.rows) * len(self.cols))

    def pivot(self, r: int, c: int) -> tuple[set[int], list[int]]:
        """Eliminate column ``c`` using row ``r``; returns (touched rows, touched cols)."""
        p = self.p
        prow = self.rows.pop(r)
        inv = pow(prow[c], p - 2, p)
        for j in prow:
            self.cols[j].discard(r)
        self.nnz -= len(prow)
        targets = self.cols.pop(c)
        for i in targets:
            row = self.rows[i]
            f = row.pop(c) * inv % p
            self.nnz -= 1
            for j, x in prow.items():
                if j == c:
                    continue
                y = row.get(j)
                if y is None:
                    row[j] = -f * x % p
                    self.cols[j].add(i)
                    self.nnz += 1
                else:
                    y = (y - f * x) % p
                    if y:
                        row[j] = y
                    else:
                        del row[j]
                        self.cols[j].discard(i)
                        self.nnz -= 1
            if not row:
                del self.rows[i]
        touched_cols = [j for j in prow if j != c]
        for j in touched_cols:
            if not self.cols[j]:
                del self.cols[j]
        self.rank += 1
        self.pivots.append((r, c))
        return targets, touched_cols

    def to_dense(self) -> np.ndarray:
        ri = {r: k for k, r in enumerate(sorted(self.rows))}
        ci = {c: k for k, c in enumerate(sorted(self.cols))}
        a = np.zeros((len(ri), len(ci)), dtype=np.float32)
        for r, row in self.rows.items():
            k = ri[r]
            for c, x in row.items():
                a[k, ci[c]] = x
        return a


def _top_valid(heap: list, current: dict, k: int) -> list[tuple[int, int]]:
    """Peek at up to ``k`` non-stale ``(count, key)`` heap entries."""
    out: list[tuple[int, int]] = []
    while heap and len(out) < k:
        cnt, key = heapq.heappop(heap)
        entry = current.get(key)
        if entry is None or len(entry) != cnt or (out and out[-1] == (cnt, key)):
            continue
        out.append((cnt, key))
    for item in out:
        heapq.heappush(heap, item)
    return out


def _markowitz(active: _Active, dense_threshold: float | None, min_dense: int,
               budget_bytes: float | None, candidates: int = 4) -> None:
    """Eliminate sparsely until the active part is dense (or exhausted).

    Pivot choice: among the few sparsest columns and rows, the entry
    minimizing ``(row_count - 1) * (col_count - 1)``; ties go to the lowest
    ``(row, col)``.  Count heaps are invalidated lazily.
    """
    col_heap = [(len(s), c) for c, s in active.cols.items()]
    row_heap = [(len(d), r) for r, d in active.rows.items()]
    heapq.heapify(col_heap)
    heapq.heapify(row_heap)
    rows, cols = active.rows, active.cols
    while rows and cols:
        if dense_threshold is not None:
            cells = len(rows) * len(cols)
            if (active.density() > dense_threshold or cells <= min_dense
                    or active.nnz * _DICT_ENTRY_BYTES > 4 * cells):
                return
        if budget_bytes is not None and active.nnz * _DICT_ENTRY_BYTES > budget_bytes:
            raise ResourceExceeded(active.nnz * _DICT_ENTRY_BYTES / 2**20, budget_bytes / 2**20,
                                   "sparse fill-in")
        best = None
        for cnt, c in _top_valid(col_heap, cols, candidates):
            r = min(cols[c], key=lambda i: (len(rows[i]), i))
            cost = ((len(rows[r]) - 1) * (cnt - 1), r, c)
            if best is None or cost < best:
                best = cost
        if best[0] > 0:
            for cnt, r in _top_valid(row_heap, rows, candidates):
                c = min(rows[r], key=lambda j: (len(cols[j]), j))
                cost = ((cnt - 1) * (len(cols[c]) - 1), r, c)
                if cost < best:
                    best = cost
        _, r, c = best
        touched_rows, touched_cols = active.pivot(r, c)
        for i in touched_rows:
            d = rows.get(i)
            if d:
                heapq.heappush(row_heap, (len(d), i))
        for j in touched_cols:
            s = cols.get(j)
            if s:
                heapq.heappush(col_heap, (len(s), j))


def _components(M: SparseMatrixFp) -> list[SparseMatrixFp]:
    """Split into the connected components of the row/column incidence graph."""
    r, c, v = M.coo()
    if len(r) == 0:
        return []
    graph = sps.coo_matrix((np.ones(len(r), dtype=np.int8), (r, c + M.rows)),
                           shape=(M.rows + M.cols,) * 2)
    ncomp, labels = connected_components(graph, directed=False)
    if ncomp == 1:
        return [M]
    row_lab, col_lab = labels[:M.rows], labels[M.rows:]
    # local index of each row/column inside its component
    row_local = np.empty(M.rows, dtype=np.int64)
    col_local = np.empty(M.cols, dtype=np.int64)
    for lab, local in ((row_lab, row_local), (col_lab, col_local)):
        order = np.argsort(lab, kind="stable")
        counts = np.bincount(lab, minlength=ncomp)
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        local[order] = np.arange(len(lab)) - np.repeat(starts, counts)
    nrows = np.bincount(row_lab, minlength=ncomp)
    ncols = np.bincount(col_lab, minlength=ncomp)
    ent_lab = row_lab[r]
    order = np.argsort(ent_lab, kind="stable")
    bounds = np.searchsorted(ent_lab[order], np.arange(ncomp + 1))
    out = []
    for k in range(ncomp):
        sel = order[bounds[k]:bounds[k + 1]]
        if len(sel) == 0:
            continue
        out.append(SparseMatrixFp.from_coo(int(nrows[k]), int(ncols[k]), row_local[r[sel]],
                                           col_local[c[sel]], v[sel], M.p))
    return out


def rank_mod_p(M: SparseMatrixFp, p: int | None = None, strategy: str = "hybrid", *,
               dense_threshold: float = 0.2, min_dense: int = 4096,
               memory_budget_mb: float | None = None, seed: int | None = None,
               stats: dict | None = None) -> int:
    """Exact rank of ``M`` over GF(p).

    strategy
        ``"hybrid"`` (Markowitz, then dense once the active block's density
        exceeds ``dense_threshold``, it has at most ``min_dense`` cells, or
        its sparse storage outweighs a dense float32 copy),
        ``"sparse"`` (Markowitz throughout) or ``"dense"``.
    seed
        If given, rows and columns are shuffled first; the rank is unchanged.
    stats
        Optional dict that receives counters (components, sparse pivots,
        largest dense block).
    """
    if p is not None and p != M.p:
        raise ValueError(f"matrix is over GF({M.p}), asked for rank over GF({p})")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    budget = None if memory_budget_mb is None else memory_budget_mb * 2**20
    if seed is not None:
        rng = np.random.default_rng(seed)
        M = M.permute(rng.permutation(M.rows), rng.permutation(M.cols))
    stats = {} if stats is None else stats
    stats.setdefault("components", 0)
    stats.setdefault("sparse_pivots", 0)
    stats.setdefault("dense_pivots", 0)
    stats.setdefault("max_dense", (0, 0))
    total = 0
    for comp in _components(M):
        stats["components"] += 1
        if comp.rows == 1 or comp.cols == 1:
            total += 1
            stats["sparse_pivots"] += 1
            continue
        if strategy == "dense":
            total += _dense_component(comp.to_dense(), comp.p, budget, stats)
            continue
        active = _Active.from_matrix(comp)
        _markowitz(active, dense_threshold if strategy == "hybrid" else None, min_dense, budget)
        total += active.rank
        stats["sparse_pivots"] += active.rank
        if active.rows and active.cols:
            total += _dense_component(active.to_dense(), comp.p, budget, stats)
    return total


def _dense_component(a: np.ndarray, p: int, budget: float | None, stats: dict) -> int:
    m, n = a.shape
    if budget is not None:
        need = 4.0 * m * n + 4.0 * min(m, 4096) * n
        if need > budget:
            raise ResourceExceeded(need / 2**20, budget / 2**20, f"dense {m}x{n} block")
    if m * n > stats["max_dense"][0] * stats["max_dense"][1]:
        stats["max_dense"] = (m, n)
    r = dense_rank(a, p)
    stats["dense_pivots"] += r
    return r
