"""Command-line entry point: ``qmtree {vorobev,double-slit,check,sample}``.

Exit codes: 0 pass, 1 validation failure, 2 statistical-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .context import check_consistency
from .double_slit import (
    SLIT_CONTEXTS,
    SlitPhysicsParams,
    default_grid,
    density_fields,
    interference_violation,
    write_density_csv,
)
from .metaspace import validate_metaspace
from .sampling import compare_empirical, sample_paths, total_variation
from .treespec import SpecError, load_tree_spec
from .vorobev import (
    CONTEXTS,
    VorobevParams,
    build_vorobev,
    consistent_parameters,
    format_tables,
    pair_correlation,
    pair_pmfs,
    single_space_feasible,
)

EXIT_OK, EXIT_INVALID, EXIT_STATISTICAL = 0, 1, 2


def _num(x: Any) -> Any:
    """JSON-friendly number: fractions become strings."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    return x


def _emit(report: dict, as_json: bool, text: str) -> None:
    print(json.dumps(report, indent=2) if as_json else text)


def _param(s: str, exact: bool):
    return Fraction(s) if exact else float(Fraction(s))


def cmd_vorobev(args: argparse.Namespace) -> int:
    if args.scan:
        t0 = time.perf_counter()
        found = consistent_parameters(args.step)
        elapsed = time.perf_counter() - t0
        report = {
            "step": str(Fraction(args.step)),
            "consistent": [[_num(v) for v in p.as_tuple()] for p in found],
            "seconds": round(elapsed, 4),
        }
        lines = [f"consistent parameters on step {report['step']} grid ({elapsed:.3f}s):"]
        lines += [f"  alpha={p.alpha} beta={p.beta} gamma={p.gamma}" for p in found] or ["  none"]
        _emit(report, args.json, "\n".join(lines))
        return EXIT_OK

    try:
        p = VorobevParams(*(_param(v, args.exact) for v in (args.alpha, args.beta, args.gamma)))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    mps = build_vorobev(p)
    tables = pair_pmfs(mps)
    consistency = check_consistency(mps)
    feasibility = single_space_feasible(tables)
    correlations = {c: pair_correlation(mps, c) for c in CONTEXTS}
    report = {
        "params": {"alpha": _num(p.alpha), "beta": _num(p.beta), "gamma": _num(p.gamma)},
        "tables": {c: {f"{a}{b}": _num(v) for (a, b), v in t.items()} for c, t in tables.items()},
        "correlations": {
            c: {"value": _num(r.value), "degenerate": r.degenerate} for c, r in correlations.items()
        },
        "consistent": consistency.consistent,
        "violations": [
            {
                "contexts": list(v.contexts),
                "event": list(v.event.labels()),
                "values": [_num(v.value_a), _num(v.value_b)],
            }
            for v in consistency.violations
        ],
        "single_space_feasible": feasibility.feasible,
        "witness": {k: _num(v) for k, v in feasibility.witness.items()} if feasibility.witness else None,
        "certificate": feasibility.certificate,
    }
    lines = [format_tables(tables), ""]
    for c, r in correlations.items():
        lines.append(f"corr {c}: {r.value}" + (" (degenerate)" if r.degenerate else ""))
    lines.append(f"consistent: {consistency.consistent} ({len(consistency.violations)} violations)")
    for v in consistency.violations[:6]:
        lines.append(f"  {v.contexts[0]} vs {v.contexts[1]} on {set(v.event.labels())}: {v.value_a} != {v.value_b}")
    lines.append(f"single probability space: {'feasible' if feasibility.feasible else 'infeasible'}")
    lines.append(f"  {feasibility.certificate}")
    _emit(report, args.json, "\n".join(lines))
    return EXIT_OK


def cmd_double_slit(args: argparse.Namespace) -> int:
    try:
        params = SlitPhysicsParams(args.d, args.w, args.wavelength, args.ldist)
        grid = default_grid(params, nx=args.nx, ny=args.ny)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    fields = density_fields(grid, params)
    report = interference_violation(fields)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for c in SLIT_CONTEXTS:
        write_density_csv(fields[c], out / f"{c}.csv")
    tree = {
        "schema_version": 1,
        "sample_space": {
            "grid": {
                "x_min": grid.x_min,
                "x_max": grid.x_max,
                "y_min": grid.y_min,
                "y_max": grid.y_max,
                "nx": grid.nx,
                "ny": grid.ny,
            }
        },
        "contexts": [{"name": c, "density_csv": f"{c}.csv"} for c in SLIT_CONTEXTS],
    }
    (out / "tree.json").write_text(json.dumps(tree, indent=2) + "\n", encoding="utf-8")
    body = {
        "params": {
            "slit_separation": params.slit_separation,
            "slit_width": params.slit_width,
            "wavelength": params.wavelength,
            "screen_distance": params.screen_distance,
        },
        "grid": tree["sample_space"]["grid"],
        **report.to_json(),
    }
    (out / "violation.json").write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    text = (
        f"wrote {', '.join(f'{c}.csv' for c in SLIT_CONTEXTS)}, tree.json, violation.json to {out}\n"
        f"violation cells: {len(report.violation_cells)}\n"
        f"best mixture: pi_L={report.best_fit[0]:.6g} pi_R={report.best_fit[1]:.6g}\n"
        f"relative residual: {report.relative_residual:.6g}\n"
        f"classical mixture ruled out: {report.no_classical_mixture}"
    )
    _emit(body, args.json, text)
    return EXIT_OK


def _load(path: str):
    try:
        spec = load_tree_spec(path)
        return spec, spec.build()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except SpecError as exc:
        for issue in exc.issues:
            print(f"{path}: {issue}", file=sys.stderr)
    return None, None


def cmd_check(args: argparse.Namespace) -> int:
    spec, tree = _load(args.spec)
    if tree is None:
        return EXIT_INVALID
    ms = tree.metaspace
    consistency = check_consistency(ms.source)
    axioms = validate_metaspace(ms)
    report = {
        "spec": str(args.spec),
        "contexts": list(ms.contexts),
        "points": ms.space.size,
        "q": {c: _num(v) for c, v in ms.q.items()},
        "variables": list(tree.variables),
        "consistent": consistency.consistent,
        "n_violations": len(consistency.violations),
        "metaspace_axioms": axioms.ok,
        "metaspace_detail": f"{axioms.axiom}: {axioms.detail}" if not axioms.ok else "",
    }
    text = "\n".join(
        [
            f"{args.spec}: valid ({ms.space.size} points, contexts {', '.join(ms.contexts)})",
            f"variables meta-measurable: {', '.join(tree.variables) or '(none declared)'}",
            f"consistent: {consistency.consistent} ({len(consistency.violations)} violations)",
            f"metaspace axioms: {'ok' if axioms.ok else report['metaspace_detail']}",
        ]
    )
    _emit(report, args.json, text)
    return EXIT_OK if axioms.ok else EXIT_INVALID


def cmd_sample(args: argparse.Namespace) -> int:
    spec, tree = _load(args.spec)
    if tree is None:
        return EXIT_INVALID
    ms = tree.metaspace
    try:
        run = sample_paths(ms, args.n, args.seed, workers=args.workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    cmp = compare_empirical(run, ms, z_threshold=args.z)
    tv = total_variation(run, ms)
    report = {
        "spec": str(args.spec),
        "run": run.to_json(ms),
        "context_counts": run.context_counts(),
        "total_variation": tv,
        "comparison": cmp.to_json(ms),
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    counts = ", ".join(f"{c}={k}" for c, k in run.context_counts().items())
    text = (
        f"n={run.n} seed={run.seed}: {counts}\n"
        f"max |z| = {cmp.max_abs_z:.3f} (threshold {cmp.threshold}), TV = {tv:.3g}\n"
        + ("PASS" if cmp.passed else f"FAIL: contexts {', '.join(cmp.flagged_contexts)}")
    )
    _emit(report, args.json, text)
    return EXIT_OK if cmp.passed else EXIT_STATISTICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmtree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("vorobev", help="three-sibling pair tables, consistency and feasibility")
    v.add_argument("--alpha", default="1/2")
    v.add_argument("--beta", default="1/2")
    v.add_argument("--gamma", default="1/2")
    v.add_argument("--exact", action="store_true", help="read parameters as exact fractions")
    v.add_argument("--scan", action="store_true", help="scan a parameter grid for consistency")
    v.add_argument("--step", default="0.1", help="grid step for --scan (exact)")
    v.set_defaults(func=cmd_vorobev)

    d = sub.add_parser("double-slit", help="write slit densities and the interference report")
    d.add_argument("--d", type=float, default=1.0, help="slit separation")
    d.add_argument("--w", type=float, default=0.2, help="slit width")
    d.add_argument("--lambda", dest="wavelength", type=float, default=0.5, help="wavelength")
    d.add_argument("--ldist", type=float, default=10.0, help="slit-to-screen distance")
    d.add_argument("--nx", type=int, default=401)
    d.add_argument("--ny", type=int, default=1)
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_double_slit)

    c = sub.add_parser("check", help="validate a measurement-tree file")
    c.add_argument("spec")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sample", help="Monte Carlo run and empirical comparison")
    s.add_argument("spec")
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--z", type=float, default=4.0, help="|z| threshold")
    s.add_argument("--report", help="write the JSON report here")
    s.set_defaults(func=cmd_sample)

    for p in (v, d, c, s):
        p.add_argument("--json", action="store_true", help="print the report as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
