"""Cohomology tables ``dim H^k_g`` assembled box by box.

Dimensions are computed on the chain side: ``dim H_{k,g} = dim C_{k,g} -
rank d_k - rank d_{k+1}`` restricted to grade ``g``.  Over a field this is
the dimension of the cohomology of the dual cochain box, and it is what the
tables report.

In the symmetric grading three symmetries let most boxes be inferred:

* opposite grades agree, ``H^k_g = H^k_{-g}`` (swap of conjugate variables);
* degrees ``k`` and ``N - k`` agree at fixed ``g`` (Poincare duality, the
  top wedge has grade 0);
* only grades divisible by ``p`` carry cohomology (the inner grading
  element ``sum x_i x_{i+m}`` acts on grade ``g`` by ``g mod p``).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from hamcoh.algebra import Check, LiePAlgebra, Report
from hamcoh.complex import boundary_matrix, chain_dimensions, enumerate_chain_basis
from hamcoh.linalg import ResourceExceeded, kernel_basis, rank_mod_p, row_echelon

log = logging.getLogger(__name__)

PROVENANCES = ("computed", "by_prop1", "by_prop2", "by_prop3")
ORIENTATION_NOTE = ("dim H^k_g is reported as dim H_{k,g} of the chain complex "
                    "(boundary ranks); equal over a field")


class ConfigError(ValueError):
    """An invalid combination of options."""


class BoxAborted(RuntimeError):
    """A box could not be finished within the resource limits."""

    def __init__(self, g: int, k: int, cause: Exception) -> None:
        super().__init__(f"box (g={g}, k={k}) aborted: {cause}")
        self.g, self.k, self.cause = g, k, cause


class PropositionError(RuntimeError):
    """Symmetry pruning was requested but the symmetries failed to verify."""


@dataclass
class BoxEntry:
    g: int
    k: int
    dim_C: int
    dim_H: int
    rank_in: int | None = None
    rank_out: int | None = None
    provenance: str = "computed"
    source: tuple[int, int] | None = None
    wall_time_ms: float | None = None

    @property
    def is_dot(self) -> bool:
        return self.dim_C > 0 and self.dim_H == 0

    def to_json(self, with_time: bool = False) -> dict:
        out = {"g": self.g, "k": self.k, "dim_C": self.dim_C, "rank_in": self.rank_in,
               "rank_out": self.rank_out, "dim_H": self.dim_H, "provenance": self.provenance,
               "source": list(self.source) if self.source else None}
        if with_time:
            out["wall_time_ms"] = self.wall_time_ms
        return out


@dataclass
class CohomologyTable:
    """``(g, k) -> BoxEntry`` for every non-empty box, including ``k = 0``."""

    spec: object
    N: int
    entries: dict[tuple[int, int], BoxEntry] = field(default_factory=dict)

    def __getitem__(self, gk: tuple[int, int]) -> BoxEntry:
        return self.entries[gk]

    def __contains__(self, gk: tuple[int, int]) -> bool:
        return gk in self.entries

    def dim_H(self, g: int, k: int) -> int:
        entry = self.entries.get((g, k))
        return entry.dim_H if entry else 0

    def boxes(self, include_k0: bool = False) -> Iterator[BoxEntry]:
        lo = 0 if include_k0 else 1
        for key in sorted(self.entries, key=lambda gk: (gk[0], gk[1])):
            if key[1] >= lo:
                yield self.entries[key]

    def computed(self, include_k0: bool = False) -> list[BoxEntry]:
        return [e for e in self.boxes(include_k0) if e.provenance == "computed"]

    @property
    def grades(self) -> list[int]:
        return sorted({g for g, _ in self.entries})

    def to_json(self) -> dict:
        h00 = self.entries.get((0, 0))
        return {
            "spec": self.spec.as_dict(),
            "N": self.N,
            "orientation": ORIENTATION_NOTE,
            "footnote": {"H^0_0": h00.dim_H if h00 else None},
            "entries": [e.to_json() for e in self.boxes()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["g", "k", "dim_C", "rank_in", "rank_out", "dim_H", "provenance", "source"])
        for e in self.boxes():
            src = f"{e.source[0]}:{e.source[1]}" if e.source else ""
            writer.writerow([e.g, e.k, e.dim_C, "" if e.rank_in is None else e.rank_in,
                             "" if e.rank_out is None else e.rank_out, e.dim_H, e.provenance, src])
        return buf.getvalue()


# --- journal ---------------------------------------------------------------------

class Journal:
    """Append-only JSON-lines log of finished boxes, used to resume runs."""

    FIELDS = ("family", "n", "p", "grading", "g", "k", "dim_C", "rank_in", "rank_out",
              "dim_H", "provenance", "wall_time_ms")

    def __init__(self, path: str | os.PathLike) -> None:
        self.path = Path(path)

    def load(self, spec) -> dict[tuple[int, int], BoxEntry]:
        found: dict[tuple[int, int], BoxEntry] = {}
        if not self.path.exists():
            return found
        with self.path.open() as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn final line from an interrupted run
                if (rec.get("family"), rec.get("n"), rec.get("p"), rec.get("grading")) != (
                        spec.family, spec.n, spec.p, spec.grading):
                    continue
                if rec.get("provenance") != "computed":
                    continue
                found[(rec["g"], rec["k"])] = BoxEntry(
                    rec["g"], rec["k"], rec["dim_C"], rec["dim_H"], rec["rank_in"],
                    rec["rank_out"], "computed", None, rec.get("wall_time_ms"))
        return found

    def append(self, spec, entry: BoxEntry) -> None:
        rec = {"family": spec.family, "n": spec.n, "p": spec.p, "grading": spec.grading,
               "g": entry.g, "k": entry.k, "dim_C": entry.dim_C, "rank_in": entry.rank_in,
               "rank_out": entry.rank_out, "dim_H": entry.dim_H, "provenance": entry.provenance,
               "wall_time_ms": entry.wall_time_ms}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        # newline first so a torn previous line cannot swallow this record
        with self.path.open("a") as fh:
            if fh.tell() and not self._ends_with_newline():
                fh.write("\n")
            fh.write(json.dumps(rec) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _ends_with_newline(self) -> bool:
        with self.path.open("rb") as fh:
            fh.seek(-1, os.SEEK_END)
            return fh.read(1) == b"\n"


# --- per-box computation -----------------------------------------------------------

@dataclass
class RankOptions:
    strategy: str = "hybrid"
    memory_budget_mb: float | None = None
    seed: int | None = None


def boundary_rank(L: LiePAlgebra, k: int, g: int, options: RankOptions | None = None,
                  dims: dict | None = None) -> tuple[int, float]:
    """Rank of ``d_k`` on grade ``g`` and the elapsed milliseconds."""
    options = options or RankOptions()
    dims = dims if dims is not None else chain_dimensions(L)
    if k <= 1 or k > L.dim or not dims.get((k, g)) or not dims.get((k - 1, g)):
        return 0, 0.0
    start = time.perf_counter()
    M = boundary_matrix(L, k, g)
    r = rank_mod_p(M, strategy=options.strategy, memory_budget_mb=options.memory_budget_mb,
                   seed=options.seed)
    return r, (time.perf_counter() - start) * 1000.0


def _rank_job(args):
    L, k, g, options, dims = args
    try:
        return (k, g), boundary_rank(L, k, g, options, dims), None
    except ResourceExceeded as exc:
        return (k, g), None, exc


def compute_box(L: LiePAlgebra, k: int, g: int, options: RankOptions | None = None) -> BoxEntry:
    """``dim H_{k,g}`` from the two adjacent boundary ranks."""
    if not 0 <= k <= L.dim:
        raise ValueError(f"degree {k} outside 0..{L.dim}")
    dims = chain_dimensions(L)
    dim_c = dims.get((k, g), 0)
    try:
        r_in, t_in = boundary_rank(L, k, g, options, dims)
        r_out, t_out = boundary_rank(L, k + 1, g, options, dims)
    except ResourceExceeded as exc:
        raise BoxAborted(g, k, exc) from exc
    return BoxEntry(g, k, dim_c, dim_c - r_in - r_out, r_in, r_out, "computed", None, t_in + t_out)


def _inference(L: LiePAlgebra, g: int, k: int, props: tuple[bool, bool, bool]
               ) -> tuple[str, tuple[int, int] | None]:
    use1, use2, use3 = props
    N, p = L.dim, L.p
    if use3 and g % p:
        return "by_prop3", None
    if use1 and g < 0:
        return "by_prop1", (-g, k)
    if use2 and k > N // 2:
        return "by_prop2", (g, N - k)
    return "computed", None


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("HAMCOH_WORKERS", "1")))
    except ValueError:
        return 1


def full_table(L: LiePAlgebra, use_prop1: bool = False, use_prop2: bool = False,
               use_prop3: bool = False, *, options: RankOptions | None = None,
               journal: Journal | str | os.PathLike | None = None, workers: int | None = None,
               grades: Iterable[int] | None = None, degrees: Iterable[int] | None = None,
               verification: Report | None = None) -> CohomologyTable:
    """All non-empty boxes of ``L``, optionally pruned by the three symmetries.

    ``grades`` / ``degrees`` restrict which boxes are filled in (inferred
    boxes pull in their sources regardless).  ``journal`` makes the run
    resumable.  For the Poisson family, pruning requires a passing
    :func:`verify_propositions` report; if none is given an unpruned table
    is computed and verified first.
    """
    props = (use_prop1, use_prop2, use_prop3)
    options = options or RankOptions()
    workers = default_workers() if workers is None else workers
    if any(props) and L.spec.grading != "symmetric":
        raise ConfigError("symmetry pruning needs the symmetric grading "
                          f"(got {L.spec.grading!r}); drop the prop flags or use --grading symmetric")
    if any(props) and L.spec.family == "po":
        if verification is None:
            log.info("verifying symmetries on an unpruned %s table first", L.spec.label())
            verification = verify_propositions(L, full_table(L, options=options, workers=workers))
        if not verification.passed:
            raise PropositionError(f"symmetries fail for {L.spec.label()}:\n{verification.render()}")
    if isinstance(journal, (str, os.PathLike)):
        journal = Journal(journal)

    dims = chain_dimensions(L)
    N = L.dim
    grade_set = set(grades) if grades is not None else None
    degree_set = set(degrees) if degrees is not None else None
    wanted = [(g, k) for (k, g), c in dims.items() if c
              and (grade_set is None or g in grade_set)
              and (degree_set is None or k in degree_set or k == 0)]

    # resolve inference chains down to computed boxes
    plan: dict[tuple[int, int], tuple[str, tuple[int, int] | None]] = {}
    stack = list(wanted)
    while stack:
        gk = stack.pop()
        if gk in plan:
            continue
        how, src = _inference(L, gk[0], gk[1], props)
        plan[gk] = (how, src)
        if src is not None:
            stack.append(src)

    table = CohomologyTable(L.spec, N)
    done = journal.load(L.spec) if journal else {}
    to_compute = sorted(gk for gk, (how, _) in plan.items() if how == "computed")
    for gk in to_compute:
        if gk in done and done[gk].dim_C == dims.get((gk[1], gk[0]), 0):
            table.entries[gk] = done[gk]

    ranks: dict[tuple[int, int], tuple[int, float]] = {}
    for entry in table.entries.values():
        ranks[(entry.k, entry.g)] = (entry.rank_in, 0.0)
        ranks[(entry.k + 1, entry.g)] = (entry.rank_out, 0.0)
    pending = [gk for gk in to_compute if gk not in table.entries]
    needed = sorted({(k + d, g) for g, k in pending for d in (0, 1)} - set(ranks),
                    key=lambda kg: (kg[1], kg[0]))

    def finish_ready() -> None:
        for gk in list(pending):
            g, k = gk
            if (k, g) in ranks and (k + 1, g) in ranks:
                (r_in, t_in), (r_out, t_out) = ranks[(k, g)], ranks[(k + 1, g)]
                dim_c = dims.get((k, g), 0)
                entry = BoxEntry(g, k, dim_c, dim_c - r_in - r_out, r_in, r_out,
                                 "computed", None, t_in + t_out)
                table.entries[gk] = entry
                pending.remove(gk)
                if journal:
                    journal.append(L.spec, entry)
                log.info("box g=%d k=%d: dim C=%d dim H=%d (%.0f ms)", g, k, dim_c, entry.dim_H,
                         t_in + t_out)

    jobs = [(L, k, g, options, dims) for k, g in needed]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_rank_job, jobs)
            for key, value, exc in results:
                if exc is not None:
                    raise BoxAborted(key[1], key[0], exc)
                ranks[key] = value
                finish_ready()
    else:
        for job in jobs:
            key, value, exc = _rank_job(job)
            if exc is not None:
                raise BoxAborted(key[1], key[0], exc)
            ranks[key] = value
            finish_ready()
    finish_ready()

    # fill inferred boxes
    def resolve(gk: tuple[int, int]) -> int:
        if gk in table.entries:
            return table.entries[gk].dim_H
        how, src = plan[gk]
        if how == "by_prop3":
            value = 0
        else:
            value = resolve(src)
        g, k = gk
        table.entries[gk] = BoxEntry(g, k, dims.get((k, g), 0), value, None, None, how, src)
        return value

    for gk in plan:
        resolve(gk)
    # sources pulled in from outside the requested window are dropped again
    if grade_set is not None or degree_set is not None:
        keep = set(wanted)
        table.entries = {gk: e for gk, e in table.entries.items() if gk in keep}
    return table


# --- symmetry verification ----------------------------------------------------------

def verify_propositions(L: LiePAlgebra, full: CohomologyTable) -> Report:
    """Check the three symmetries and the graded Euler characteristic on ``full``."""
    report = Report(f"{L.spec.label()} [{L.spec.grading}] cohomology symmetries")
    N, p = L.dim, L.p
    dims = chain_dimensions(L)
    inferred = [e for e in full.boxes(include_k0=True) if e.provenance != "computed"]
    if inferred:
        report.add(Check("unpruned input", False, f"{len(inferred)} boxes were inferred"))
    boxes = [(g, k) for (k, g), c in dims.items() if c]
    missing = [gk for gk in boxes if gk not in full]
    if missing:
        report.add(Check("complete input", False, f"missing boxes, e.g. {missing[:3]}"))
    symmetric = L.spec.grading == "symmetric"

    def compare(name: str, pairs: list[tuple[tuple[int, int], tuple[int, int]]]) -> None:
        bad = [(a, b) for a, b in pairs if full.dim_H(*a) != full.dim_H(*b)]
        detail = ""
        if bad:
            (a, b) = bad[0]
            detail = (f"{len(bad)} mismatches, e.g. dim H at (g={a[0]}, k={a[1]}) = {full.dim_H(*a)}"
                      f" vs (g={b[0]}, k={b[1]}) = {full.dim_H(*b)}")
        report.add(Check(name, not bad, detail, len(pairs)))

    if symmetric:
        compare("prop1 opposite grades", [((g, k), (-g, k)) for g, k in boxes])
        compare("prop2 degree duality", [((g, k), (g, N - k)) for g, k in boxes])
        bad = [(g, k) for g, k in boxes if g % p and full.dim_H(g, k)]
        report.add(Check("prop3 grades divisible by p", not bad,
                         f"nonzero dim H at (g, k) = {bad[0]}" if bad else "", len(boxes)))
    else:
        for name in ("prop1 opposite grades", "prop2 degree duality", "prop3 grades divisible by p"):
            report.add(Check(name, True, "not applicable to the standard grading", skipped=True))

    bad_euler = []
    for g in sorted({g for g, _ in boxes}):
        chi_c = sum((-1) ** k * dims.get((k, g), 0) for k in range(N + 1))
        chi_h = sum((-1) ** k * full.dim_H(g, k) for k in range(N + 1))
        if chi_c != chi_h:
            bad_euler.append((g, chi_c, chi_h))
    report.add(Check("euler characteristic per grade", not bad_euler,
                     f"grade {bad_euler[0][0]}: chi(C)={bad_euler[0][1]} chi(H)={bad_euler[0][2]}"
                     if bad_euler else "", len({g for g, _ in boxes})))
    if symmetric:
        top = full.dim_H(0, N)
        report.add(Check("top class dim H_{N,0} = 1", top == 1, f"dim H_(N,0) = {top}"))
    return report


# --- representatives ----------------------------------------------------------------

def cocycle_representatives(L: LiePAlgebra, k: int, g: int) -> list[dict[tuple[int, ...], int]]:
    """Cycles of ``C_{k,g}`` whose classes form a basis of ``H_{k,g}``.

    Each is returned as ``{wedge index tuple: coefficient}``.
    """
    p = L.p
    basis = enumerate_chain_basis(L, k, g)
    if not len(basis):
        return []
    if k >= 1:
        cycles = kernel_basis(boundary_matrix(L, k, g, source=basis), p)
    else:
        cycles = [{i: 1} for i in range(len(basis))]
    if k < L.dim and len(enumerate_chain_basis(L, k + 1, g)):
        image = boundary_matrix(L, k + 1, g, target=basis)
        span, _ = row_echelon((image.column(j) for j in range(image.cols)), len(basis), p)
    else:
        span = []
    reps = []
    for z in cycles:
        extended, _ = row_echelon(span + [z], len(basis), p)
        if len(extended) > len(span):
            reps.append(z)
            span = extended
    return [{basis.subsets[i]: c for i, c in sorted(z.items())} for z in reps]


def format_chain(L: LiePAlgebra, chain: dict[tuple[int, ...], int]) -> str:
    parts = []
    for wedge, c in sorted(chain.items()):
        word = " ^ ".join(str(L.basis[i]) for i in wedge) if wedge else "1"
        parts.append(word if c == 1 else f"{c}*({word})" if len(wedge) > 1 else f"{c}*{word}")
    return " + ".join(parts) if parts else "0"


# --- rendering -----------------------------------------------------------------------

MIDDLE_DOT = "·"


def render_table(table: CohomologyTable, *, ascii_only: bool = False, merged_rows: bool = False,
                 k_max: int | None = None, hide_acyclic_rows: bool = False,
                 include_k0: bool = False) -> str:
    """Text grid: blank if dim C = 0, a dot if dim C > 0 and dim H = 0, else dim H."""
    dot = "." if ascii_only else MIDDLE_DOT
    entries = {gk: e for gk, e in table.entries.items() if e.dim_C > 0}
    k_lo = 0 if include_k0 else 1
    k_hi = table.N if k_max is None else k_max
    degrees = list(range(k_lo, k_hi + 1))
    grades = sorted({g for g, k in entries if k_lo <= k <= k_hi})
    if merged_rows:
        for g in grades:
            for k in degrees:
                a, b = entries.get((g, k)), entries.get((-g, k))
                if (a is None) != (b is None) or (a and a.dim_H != b.dim_H):
                    raise ValueError(f"rows {g} and {-g} differ at k={k}; cannot merge")
        grades = [g for g in grades if g >= 0]
    if hide_acyclic_rows:
        grades = [g for g in grades if any(entries.get((g, k)) and entries[(g, k)].dim_H
                                           for k in degrees)]

    def cell(g: int, k: int) -> str:
        e = entries.get((g, k))
        if e is None:
            return ""
        return dot if e.dim_H == 0 else str(e.dim_H)

    def label(g: int) -> str:
        if merged_rows and g:
            return ("+-" if ascii_only else "±") + str(g)
        return str(g)

    corner = "g\\k"
    labels = [label(g) for g in grades]
    w0 = max([len(corner)] + [len(s) for s in labels])
    cells = [[cell(g, k) for k in degrees] for g in grades]
    w = max([len(str(k)) for k in degrees] + [len(c) for row in cells for c in row] + [1])
    lines = [(corner.ljust(w0) + " |" + "".join(f" {k:>{w}}" for k in degrees)).rstrip()]
    lines.append("-" * (w0 + 1) + "+" + "-" * ((w + 1) * len(degrees)))
    for lab, row in zip(labels, cells):
        lines.append((lab.rjust(w0) + " |" + "".join(f" {c:>{w}}" for c in row)).rstrip())
    return "\n".join(lines) + "\n"
