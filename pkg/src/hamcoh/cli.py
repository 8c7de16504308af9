"""Command line interface: ``hamcoh <subcommand> --family h --n 2 --p 3 ...``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 resource abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from hamcoh.algebra import (
    AlgebraSpec,
    Check,
    LiePAlgebra,
    build_basis,
    grading_element_check,
    structure_constants,
    verify_algebra,
)
from hamcoh.cohomology import (
    BoxAborted,
    ConfigError,
    Journal,
    PropositionError,
    RankOptions,
    cocycle_representatives,
    compute_box,
    default_workers,
    format_chain,
    full_table,
    render_table,
    verify_propositions,
)
from hamcoh.complex import boundary_matrix, chain_dimensions, enumerate_chain_basis
from hamcoh.gfp import FieldError
from hamcoh.linalg import STRATEGIES, ResourceExceeded
from hamcoh.monomials import standard_grade, symmetric_grade

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3

log = logging.getLogger("hamcoh")


@dataclass
class RunConfig:
    command: str
    family: str = "h"
    n: int = 2
    p: int = 3
    grading: str = "symmetric"
    k_range: tuple[int, int] | None = None
    g_range: tuple[int, int] | None = None
    props: tuple[bool, bool, bool] = (False, False, False)
    workers: int = 1
    memory_budget_mb: float | None = None
    output_format: str = "text"
    journal: Path | None = None
    seed: int | None = None
    strategy: str = "hybrid"
    extra: dict = field(default_factory=dict)

    @property
    def spec(self) -> AlgebraSpec:
        return AlgebraSpec(self.family, self.n, self.p, self.grading)

    def validate(self) -> None:
        self.spec  # raises on bad family / n / p / grading
        if any(self.props) and self.grading != "symmetric":
            raise ConfigError("--props needs --grading symmetric; the symmetries are "
                              "stated for the symmetric grading")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if self.memory_budget_mb is not None and self.memory_budget_mb <= 0:
            raise ConfigError("--memory-budget-mb must be positive")
        for name, rng in (("--k-range", self.k_range), ("--g-range", self.g_range)):
            if rng and rng[0] > rng[1]:
                raise ConfigError(f"{name} is empty: {rng[0]} > {rng[1]}")


def _range(text: str) -> tuple[int, int]:
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            return int(lo), int(hi)
        v = int(text)
        return v, v
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo:hi' or an integer, got {text!r}") from None


def _props(text: str) -> tuple[bool, bool, bool]:
    text = text.strip().lower()
    if text in ("none", ""):
        return (False, False, False)
    if text == "all":
        return (True, True, True)
    chosen = {part.strip() for part in text.split(",")}
    if not chosen <= {"1", "2", "3"}:
        raise argparse.ArgumentTypeError("--props takes 'all', 'none' or a list like '1,3'")
    return ("1" in chosen, "2" in chosen, "3" in chosen)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", default="h", help="po, h, h1 or h2 (default h)")
    common.add_argument("--n", type=int, default=2, help="number of variables, even (default 2)")
    common.add_argument("--p", type=int, default=3, help="odd prime characteristic (default 3)")
    common.add_argument("--grading", default="symmetric", choices=["standard", "symmetric"])
    common.add_argument("--format", dest="output_format", default="text",
                        choices=["text", "json", "csv"])
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default $HAMCOH_WORKERS or 1)")
    common.add_argument("--memory-budget-mb", type=float, default=None)
    common.add_argument("--strategy", default="hybrid", choices=STRATEGIES)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="hamcoh", description="Cohomology of truncated Hamiltonian and Poisson Lie p-algebras")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("info", parents=[common], help="dimensions and box counts")

    p = sub.add_parser("verify", parents=[common], help="check algebra and complex identities")
    p.add_argument("--algebra-json", type=Path, default=None,
                   help="verify a structure-constant table from dump-algebra instead")
    p.add_argument("--boundary-k-max", type=int, default=None,
                   help="check d∘d = 0 for k up to this (default: all boxes when 2^N <= 2^16)")
    p.add_argument("--props", action="store_true",
                   help="also compute the unpruned table and verify the symmetries")

    p = sub.add_parser("table", parents=[common], help="compute and render dim H^k_g")
    p.add_argument("--props", type=_props, default=(False, False, False),
                   help="symmetries used for pruning: all, none, or e.g. 1,3")
    p.add_argument("--journal", type=Path, default=None, help="JSON-lines checkpoint file")
    p.add_argument("--k-range", type=_range, default=None)
    p.add_argument("--g-range", type=_range, default=None)
    p.add_argument("--merged-rows", action="store_true", help="render +g and -g as one row")
    p.add_argument("--hide-acyclic-rows", action="store_true")
    p.add_argument("--include-k0", action="store_true")
    p.add_argument("--ascii", action="store_true", help="'.' instead of the middle dot")

    for name, helptext in (("box", "one (g, k) box"), ("cocycles", "class representatives"),
                           ("export-matrix", "boundary matrix of a box as coordinate text")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--g", type=int, required=True)
        p.add_argument("--k", type=int, required=True)
        if name == "export-matrix":
            p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("dump-algebra", parents=[common], help="basis, grades and brackets as JSON")
    p.add_argument("--output", type=Path, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    props = getattr(args, "props", (False, False, False))
    if isinstance(props, bool):  # verify --props is a flag, not a pruning choice
        props = (False, False, False)
    cfg = RunConfig(
        command=args.command, family=args.family, n=args.n, p=args.p, grading=args.grading,
        k_range=getattr(args, "k_range", None), g_range=getattr(args, "g_range", None),
        props=props, workers=args.workers if args.workers is not None else default_workers(),
        memory_budget_mb=args.memory_budget_mb, output_format=args.output_format,
        journal=getattr(args, "journal", None), seed=args.seed, strategy=args.strategy,
    )
    cfg.validate()
    return cfg


def _emit(text: str, output: Path | None = None) -> None:
    if output is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        output.write_text(text if text.endswith("\n") else text + "\n")


# --- subcommands ----------------------------------------------------------------------

def cmd_info(cfg: RunConfig) -> int:
    spec = cfg.spec
    basis = build_basis(spec)
    N = len(basis)
    sym = [symmetric_grade(m) for m in basis]
    std = [standard_grade(m) for m in basis]
    grades = sym if spec.grading == "symmetric" else std

    def boxes(gr: list[int]) -> int:
        return sum(1 for (k, _), c in chain_dimensions(gr).items() if c and k >= 1)

    pruned = sum(1 for (k, g), c in chain_dimensions(sym).items()
                 if c and 1 <= k <= N // 2 and g >= 0 and g % spec.p == 0)
    info = {
        "family": spec.family, "n": spec.n, "p": spec.p, "grading": spec.grading,
        "label": spec.label(), "N": N, "expected_N": spec.expected_dim(),
        "grade_range": max(abs(g) for g in grades),
        "grade_min": min(grades), "grade_max": max(grades),
        "total_chain_dim": 2**N,
        "boxes": {"symmetric": boxes(sym), "standard": boxes(std),
                  "computed_with_all_props": pruned},
    }
    if cfg.output_format == "json":
        _emit(json.dumps(info, indent=1))
    elif cfg.output_format == "csv":
        _emit("key,value\n" + "\n".join(f"{k},{v}" for k, v in info.items() if k != "boxes")
              + "".join(f"\nboxes_{k},{v}" for k, v in info["boxes"].items()))
    else:
        _emit("\n".join([
            f"algebra            {info['label']}",
            f"N = dim            {N}",
            f"grading            {spec.grading} (grades {info['grade_min']}..{info['grade_max']}, "
            f"r = {info['grade_range']})",
            f"total chain dim    {2**N}",
            f"non-empty boxes    symmetric {info['boxes']['symmetric']}, "
            f"standard {info['boxes']['standard']} (k = 1..N)",
            f"computed with all symmetries   {pruned}",
        ]))
    return EXIT_OK


def _boundary_check(L: LiePAlgebra, k_max: int | None) -> Check:
    dims = chain_dimensions(L)
    if k_max is None:
        if L.dim > 16:
            return Check("d∘d = 0", True, f"skipped for N={L.dim}; pass --boundary-k-max",
                         skipped=True)
        k_max = L.dim
    count = 0
    for (k, g), c in sorted(dims.items()):
        if k < 2 or k > k_max or not c or not dims.get((k - 2, g)):
            continue
        d_hi = boundary_matrix(L, k, g)
        d_lo = boundary_matrix(L, k - 1, g)
        count += 1
        if (d_lo @ d_hi).nnz:
            return Check("d∘d = 0", False, f"nonzero at (g={g}, k={k})", count)
    return Check("d∘d = 0", True, f"k <= {k_max}", count)


def cmd_verify(cfg: RunConfig, algebra_json: Path | None, k_max: int | None, props: bool) -> int:
    if algebra_json is not None:
        L = LiePAlgebra.from_json(json.loads(algebra_json.read_text()))
        L = L.with_grading(cfg.grading)
    else:
        L = structure_constants(cfg.spec)
    report = verify_algebra(L)
    if cfg.grading == "symmetric":
        report.add(Check("grading element check", grading_element_check(L)))
    report.add(_boundary_check(L, k_max))
    reports = [report]
    if props:
        table = full_table(L, options=RankOptions(cfg.strategy, cfg.memory_budget_mb, cfg.seed),
                           workers=cfg.workers)
        reports.append(verify_propositions(L, table))
    ok = all(r.passed for r in reports)
    if cfg.output_format == "json":
        _emit(json.dumps({"passed": ok, "reports": [r.to_json() for r in reports]}, indent=1))
    else:
        _emit("\n".join(r.render() for r in reports))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_table(cfg: RunConfig, args: argparse.Namespace) -> int:
    L = structure_constants(cfg.spec)
    grades = range(cfg.g_range[0], cfg.g_range[1] + 1) if cfg.g_range else None
    degrees = range(cfg.k_range[0], cfg.k_range[1] + 1) if cfg.k_range else None
    table = full_table(L, *cfg.props, options=RankOptions(cfg.strategy, cfg.memory_budget_mb, cfg.seed),
                       journal=Journal(cfg.journal) if cfg.journal else None,
                       workers=cfg.workers, grades=grades, degrees=degrees)
    if cfg.output_format == "json":
        _emit(table.dumps())
    elif cfg.output_format == "csv":
        _emit(table.to_csv())
    else:
        k_max = cfg.k_range[1] if cfg.k_range else None
        _emit(render_table(table, ascii_only=args.ascii, merged_rows=args.merged_rows,
                           k_max=k_max, hide_acyclic_rows=args.hide_acyclic_rows,
                           include_k0=args.include_k0))
    return EXIT_OK


def cmd_box(cfg: RunConfig, g: int, k: int) -> int:
    L = structure_constants(cfg.spec)
    entry = compute_box(L, k, g, RankOptions(cfg.strategy, cfg.memory_budget_mb, cfg.seed))
    if cfg.output_format == "json":
        _emit(json.dumps(entry.to_json(with_time=True), indent=1))
    elif cfg.output_format == "csv":
        _emit("g,k,dim_C,rank_in,rank_out,dim_H\n"
              f"{g},{k},{entry.dim_C},{entry.rank_in},{entry.rank_out},{entry.dim_H}")
    else:
        _emit(f"{cfg.spec.label()} [{cfg.grading}] g={g} k={k}: dim C={entry.dim_C} "
              f"rank d_k={entry.rank_in} rank d_k+1={entry.rank_out} dim H={entry.dim_H}")
    return EXIT_OK


def cmd_cocycles(cfg: RunConfig, g: int, k: int) -> int:
    L = structure_constants(cfg.spec)
    reps = cocycle_representatives(L, k, g)
    if cfg.output_format == "json":
        _emit(json.dumps([[{"wedge": [str(L.basis[i]) for i in w], "c": c}
                           for w, c in sorted(r.items())] for r in reps], indent=1))
    else:
        for rep in reps:
            _emit(format_chain(L, rep))
    return EXIT_OK


def cmd_dump_algebra(cfg: RunConfig, output: Path | None) -> int:
    _emit(structure_constants(cfg.spec).dumps(), output)
    return EXIT_OK


def cmd_export_matrix(cfg: RunConfig, g: int, k: int, output: Path | None) -> int:
    L = structure_constants(cfg.spec)
    if k < 1:
        raise ConfigError("--k must be >= 1 for a boundary matrix")
    if not enumerate_chain_basis(L, k, g).subsets:
        raise ConfigError(f"box (g={g}, k={k}) is empty")
    _emit(boundary_matrix(L, k, g).to_text(), output)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if cfg.command == "info":
            return cmd_info(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg, args.algebra_json, args.boundary_k_max, args.props)
        if cfg.command == "table":
            return cmd_table(cfg, args)
        if cfg.command == "box":
            return cmd_box(cfg, args.g, args.k)
        if cfg.command == "cocycles":
            return cmd_cocycles(cfg, args.g, args.k)
        if cfg.command == "dump-algebra":
            return cmd_dump_algebra(cfg, args.output)
        if cfg.command == "export-matrix":
            return cmd_export_matrix(cfg, args.g, args.k, args.output)
    except (ConfigError, FieldError, ValueError) as exc:
        print(f"hamcoh: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BoxAborted, ResourceExceeded) as exc:
        print(f"hamcoh: resource abort: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except PropositionError as exc:
        print(f"hamcoh: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except KeyboardInterrupt:
        print("hamcoh: interrupted; journal is up to date", file=sys.stderr)
        return 130
    parser.error(f"unknown command {cfg.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
