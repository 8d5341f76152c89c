"""Command-line interface.

Subcommands: design-build, sample, corr-exp, bound-exp, boost-exp,
wick-check.  Experiment commands write a CSV (plus secondary CSVs where
noted), a .config.json provenance sidecar, and rendered figures next to the
CSV unless --no-plot is passed.  Exit codes: 0 success, 1 usage error,
2 numerical or degenerate-data failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .. import io as bio
from ..design import build_design, kron_leverage_sample
from ..errors import BfbError
from ..rng import derive_seed, make_rng
from ..sketch import (
    SKETCH_KINDS,
    SketchSpec,
    cpqr_sketch,
    gaussian_sketch,
    leverage_profile,
    leverage_sketch,
    leveraged_volume_sketch,
    save_sketch_json,
    uniform_sketch,
)
from . import experiments as ex
from . import plots
from .experiments import ExperimentConfig

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


class UsageError(Exception):
    """Usage problem detected after argparse has run."""


class _Parser(argparse.ArgumentParser):
    """argparse maps its own errors to exit code 2; we reserve 2 for
    numerical failures, so usage mistakes exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(p) -> None:
    p.add_argument("--config", help="JSON file of config fields; flags override it")
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--quiet", action="store_true", help="suppress the stdout summary")


def _add_experiment_flags(p) -> None:
    _add_common(p)
    p.add_argument("--reps", type=int, default=None, help="repetitions per cell")
    p.add_argument("--sketch", choices=SKETCH_KINDS, default=None,
                   help="restrict to one sketch kind")
    p.add_argument("--m", type=int, default=None, help="embedding dimension")
    p.add_argument("--L", type=int, default=None, dest="num_sketches",
                   help="candidate sketches per boosted selection")
    p.add_argument("--kappa", type=float, default=None, help="range-alignment dial")
    p.add_argument("--phi", type=float, default=None, help="fidelity-alignment dial")
    p.add_argument("--eps", type=float, default=None, help="pair-condition level")
    p.add_argument("--n", type=int, default=None, help="synthetic row count")
    p.add_argument("--d", type=int, default=None, help="synthetic column count")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> _Parser:
    parser = _Parser(prog="bfboost",
                     description="Sketched least squares with bi-fidelity boosting")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design-build",
                       help="assemble a tensor-product polynomial design matrix")
    p.add_argument("--q", type=int, required=True, help="number of dimensions")
    p.add_argument("--zeta", type=int, required=True, help="degree budget")
    p.add_argument("--space", choices=("total-degree", "hyperbolic-cross"),
                   default="total-degree")
    p.add_argument("--nodes", required=True,
                   help="quadrature nodes per dimension: one int or a comma list")
    p.add_argument("--out", required=True, help="output matrix path (.bfb1)")
    p.add_argument("--csv", default=None, help="also write the matrix as CSV here")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("sample", help="draw a sketch operator and save it as JSON")
    p.add_argument("--matrix", default=None, help="matrix file (BFB1 or CSV)")
    p.add_argument("--q", type=int, default=None, help="design dimensions (no --matrix)")
    p.add_argument("--zeta", type=int, default=None, help="design degree budget")
    p.add_argument("--space", choices=("total-degree", "hyperbolic-cross"),
                   default="total-degree")
    p.add_argument("--nodes", default=None, help="design nodes per dimension")
    p.add_argument("--sketch", choices=SKETCH_KINDS, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output operator path (.json)")
    p.add_argument("--quiet", action="store_true")

    for name, help_text in (
        ("corr-exp", "cross-fidelity correlation of squared optimality coefficients"),
        ("bound-exp", "selection gap against its bound over the alignment grid"),
        ("boost-exp", "boosted vs single-sketch relative errors"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_experiment_flags(p)
        if name == "boost-exp":
            p.add_argument("--data-a", default=None, help="design matrix file")
            p.add_argument("--data-b", default=None, help="high-fidelity vector file")
            p.add_argument("--data-b-low", default=None, help="low-fidelity vector file")

    p = sub.add_parser("wick-check",
                       help="Monte Carlo check of the Gaussian fourth-moment identity")
    _add_common(p)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples")
    p.add_argument("--dim", type=int, default=None, help="length of the test vectors")
    p.add_argument("--doublings", type=int, default=None,
                   help="extra rows at 2x, 4x, ... the sample count")
    p.add_argument("--no-plot", action="store_true")
    return parser


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(obj) - _CONFIG_FIELDS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return obj


def _resolve(args, experiment: str, fields: dict, defaults: dict | None = None):
    """Merge precedence: explicit flag > config file > defaults > dataclass."""
    merged = dict(defaults or {})
    merged.update(_load_config_file(args.config))
    for key, flag_value in fields.items():
        if flag_value is not None:
            merged[key] = flag_value
    merged["experiment"] = experiment
    if merged.get("sketch_kinds") is not None:
        merged["sketch_kinds"] = tuple(merged["sketch_kinds"])
    return ExperimentConfig(**merged)


def _parse_nodes(raw: str, q: int) -> list[int]:
    parts = [int(tok) for tok in str(raw).split(",")]
    if len(parts) == 1:
        return parts * q
    if len(parts) != q:
        raise UsageError(f"--nodes needs 1 or {q} values, got {len(parts)}")
    return parts


def _out_path(args, default_name: str) -> Path:
    return Path(args.out if args.out else default_name)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _cmd_design_build(args) -> int:
    space = args.space.replace("-", "_")
    design = build_design(args.q, args.zeta, space, _parse_nodes(args.nodes, args.q))
    a = design.assembled()
    out = Path(args.out)
    bio.write_bfb1(out, a)
    if args.csv:
        bio.write_csv_matrix(args.csv, a)
    meta = {
        "q": args.q, "zeta": args.zeta, "space": space,
        "nodes": [f.shape[0] for f in design.factors],
        "rows": design.n_rows, "cols": design.n_cols,
        "members": [list(mm) for mm in design.iset.members],
    }
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    ortho = float(np.max(np.abs(a.T @ a - np.eye(design.n_cols))))
    _say(args, f"design {design.n_rows} x {design.n_cols} ({space}, zeta={args.zeta})"
               f" -> {out}; max |A^T A - I| = {ortho:.3e}")
    return 0


def _generic_sketch(a: np.ndarray, kind: str, m: int, seed: int):
    n = a.shape[0]
    if kind == "gaussian":
        return gaussian_sketch(n, SketchSpec("gaussian", m, seed))
    if kind == "uniform":
        return uniform_sketch(n, SketchSpec("uniform", m, seed))
    if kind == "leverage":
        return leverage_sketch(leverage_profile(a), SketchSpec("leverage", m, seed))
    if kind == "leveraged_volume":
        return leveraged_volume_sketch(a, SketchSpec("leveraged_volume", m, seed))
    return cpqr_sketch(a, m)


def _cmd_sample(args) -> int:
    if args.matrix is None:
        if args.q is None or args.zeta is None or args.nodes is None:
            raise UsageError("sample needs either --matrix or --q/--zeta/--nodes")
        space = args.space.replace("-", "_")
        design = build_design(args.q, args.zeta, space,
                              _parse_nodes(args.nodes, args.q))
        if args.sketch == "leverage":
            # factored sampler: never assembles the full matrix
            op = kron_leverage_sample(design, args.m, args.seed)
        else:
            op = _generic_sketch(design.assembled(), args.sketch, args.m, args.seed)
    else:
        op = _generic_sketch(bio.load_array(args.matrix), args.sketch, args.m,
                             args.seed)
    save_sketch_json(args.out, op)
    head = f"; first indices {op.indices[:5].tolist()}" if op.is_row_sample else ""
    _say(args, f"{args.sketch} sketch m={args.m} over n={op.n} -> {args.out}{head}")
    return 0


def _cmd_corr(args) -> int:
    cfg = _resolve(args, "corr", dict(
        seed=args.seed, reps=args.reps, m=args.m, num_sketches=args.num_sketches,
        eps=args.eps, kappa=args.kappa, phi=args.phi, n=args.n, d=args.d,
        sketch_kinds=(args.sketch,) if args.sketch else None,
    ))
    t0 = time.perf_counter()
    summary, scatter = ex.corr_experiment(cfg)
    out = _out_path(args, "corr_exp.csv")
    ex.write_csv(out, ex.CORR_SUMMARY_HEADER, summary)
    scatter_path = out.with_name(out.stem + "_scatter.csv")
    ex.write_csv(scatter_path, ex.CORR_SCATTER_HEADER, scatter)
    ex.write_sidecar(out.with_suffix(".config.json"), cfg)
    if not args.no_plot:
        plots.render_corr_figure(scatter, summary, out.with_suffix(".png"))
    lines = [f"  {k:10s} kappa={ka:<5g} phi={ph:<5g} corr={c: .3f}"
             for k, ka, ph, c in summary]
    _say(args, "\n".join([f"correlations ({time.perf_counter() - t0:.1f}s):"]
                         + lines + [f"wrote {out}, {scatter_path}"]))
    return 0


def _cmd_bound(args) -> int:
    cfg = _resolve(args, "bound", dict(
        seed=args.seed, reps=args.reps, m=args.m, num_sketches=args.num_sketches,
        eps=args.eps, n=args.n, d=args.d,
        sketch_kinds=(args.sketch,) if args.sketch else None,
    ))
    if args.kappa is not None or args.phi is not None:
        print("bound-exp sweeps the full grid; ignoring --kappa/--phi",
              file=sys.stderr)
    t0 = time.perf_counter()
    rows = ex.bound_experiment(cfg)
    out = _out_path(args, "bound_exp.csv")
    ex.write_csv(out, ex.BOUND_HEADER, rows)
    ex.write_sidecar(out.with_suffix(".config.json"), cfg)
    if not args.no_plot:
        plots.render_bound_figure(rows, cfg.eps, out.with_suffix(".png"))
    kinds = sorted({r[0] for r in rows})
    lines = [f"  {k:10s} violations {sum(r[8] for r in rows if r[0] == k)}"
             f" / {sum(1 for r in rows if r[0] == k)}" for k in kinds]
    _say(args, "\n".join([f"selection-gap grid ({time.perf_counter() - t0:.1f}s):"]
                         + lines + [f"wrote {out}"]))
    return 0


def _cmd_boost(args) -> int:
    given = [v is not None for v in (args.data_a, args.data_b, args.data_b_low)]
    if any(given) and not all(given):
        raise UsageError("--data-a, --data-b, --data-b-low must be given together")
    cfg = _resolve(args, "boost", dict(
        seed=args.seed, reps=args.reps, m=args.m, num_sketches=args.num_sketches,
        kappa=args.kappa, phi=args.phi, n=args.n, d=args.d,
        sketch_kinds=(args.sketch,) if args.sketch else None,
        data_a=args.data_a, data_b=args.data_b, data_b_low=args.data_b_low,
    ), defaults={"d": 10})
    t0 = time.perf_counter()
    trials, summary = ex.boost_experiment(cfg)
    out = _out_path(args, "boost_exp.csv")
    ex.write_csv(out, ex.BOOST_TRIAL_HEADER, trials)
    summary_path = out.with_name(out.stem + "_summary.csv")
    ex.write_csv(summary_path, ex.BOOST_SUMMARY_HEADER, summary)
    ex.write_sidecar(out.with_suffix(".config.json"), cfg)
    if not args.no_plot:
        plots.render_boost_figure(trials, summary, out.with_suffix(".png"))
    lines = [f"  {k:18s} m={m:<4d} {meth:6s} median={med:.4g} iqr={q3 - q1:.4g}"
             for k, m, meth, _mn, q1, med, q3, *_rest in summary]
    _say(args, "\n".join([f"boost trials ({time.perf_counter() - t0:.1f}s):"]
                         + lines + [f"wrote {out}, {summary_path}"]))
    return 0


def _cmd_wick(args) -> int:
    cfg = _resolve(args, "wick", dict(
        seed=args.seed, samples=args.samples, dim=args.dim,
        doublings=args.doublings,
    ))
    rng = make_rng(derive_seed(cfg.seed, 0xA11))
    w = rng.standard_normal(cfg.dim)
    z = rng.standard_normal(cfg.dim)
    checks = ex.wick_convergence(w, z, cfg.samples, cfg.doublings,
                                 derive_seed(cfg.seed, 0xB0B))
    out = _out_path(args, "wick_check.csv")
    ex.write_csv(out, ex.WICK_HEADER,
                 [(c.samples, c.mc_estimate, c.exact, c.rel_err) for c in checks])
    ex.write_sidecar(out.with_suffix(".config.json"), cfg)
    if not args.no_plot and len(checks) > 1:
        plots.render_wick_figure(checks, out.with_suffix(".png"))
    last = checks[-1]
    _say(args, f"fourth-moment check: estimate {last.mc_estimate:.6g} vs exact "
               f"{last.exact:.6g}, rel err {last.rel_err:.2e} at {last.samples}"
               f" samples; wrote {out}")
    return 0


_COMMANDS = {
    "design-build": _cmd_design_build,
    "sample": _cmd_sample,
    "corr-exp": _cmd_corr,
    "bound-exp": _cmd_bound,
    "boost-exp": _cmd_boost,
    "wick-check": _cmd_wick,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BfbError as failure:
        print(f"bfboost: numerical failure: {failure}", file=sys.stderr)
        return 2
    except UsageError as mistake:
        print(f"bfboost: error: {mistake}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as bad_input:
        print(f"bfboost: error: {bad_input}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
