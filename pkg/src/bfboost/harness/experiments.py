"""Experiment drivers.

Each driver is a pure function of an ExperimentConfig: records come back in
a deterministic order and every random draw is keyed off the config seed, so
rerunning a config reproduces its output byte for byte.  Wall-clock timings
are kept on the in-memory records (and the printed summary) but stay out of
the CSV files for exactly that reason.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import io as bio
from ..boost import (
    FidelityPair,
    correlation_metrics,
    oracle_index,
    optimality_gap_bound,
    relative_error,
    run_bfb,
)
from ..errors import DegenerateDataError
from ..linalg import orthonormal_basis, solve_full_ls, solve_sketched_ls
from ..rng import derive_seed, make_rng
from ..sketch import (
    SKETCH_KINDS,
    SketchOperator,
    SketchSpec,
    cpqr_sketch,
    gaussian_sketch,
    leverage_profile,
    leverage_sketch,
    leveraged_volume_sketch,
    uniform_sketch,
)
from .synthetic import SyntheticFamily

DEFAULT_EPS = 0.01
CORR_CELLS = ((0.2, 0.3), (0.2, 0.95), (0.95, 0.3), (0.95, 0.95))
BOUND_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))

_KIND_TAG = {kind: 100 + i for i, kind in enumerate(SKETCH_KINDS)}


@dataclass
class ExperimentConfig:
    """Resolved settings for one experiment run.

    m, reps, kappa, phi, and sketch_kinds default per experiment when left
    as None; resolve() fills them in.
    """

    experiment: str
    seed: int = 0
    n: int = 1000
    d: int = 50
    m: int | None = None
    num_sketches: int = 10
    reps: int | None = None
    eps: float = DEFAULT_EPS
    kappa: float | None = None
    phi: float | None = None
    sketch_kinds: tuple[str, ...] | None = None
    data_a: str | None = None
    data_b: str | None = None
    data_b_low: str | None = None
    samples: int = 1_000_000
    dim: int = 5
    doublings: int = 0

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        if out["sketch_kinds"] is not None:
            out["sketch_kinds"] = list(out["sketch_kinds"])
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        if obj.get("sketch_kinds") is not None:
            obj["sketch_kinds"] = tuple(obj["sketch_kinds"])
        return cls(**obj)


@dataclass
class TrialRecord:
    """One sketch draw on one problem instance."""

    trial: int
    spec: SketchSpec
    mu2_low: float
    mu2_high: float
    resid_low: float
    resid_high: float
    timing: float


def _build_sketch(kind: str, a: np.ndarray, m: int, seed: int, *, profile=None,
                  basis=None) -> SketchOperator:
    n = a.shape[0]
    if kind == "gaussian":
        return gaussian_sketch(n, SketchSpec("gaussian", m, seed))
    if kind == "uniform":
        return uniform_sketch(n, SketchSpec("uniform", m, seed))
    if kind == "leverage":
        return leverage_sketch(profile, SketchSpec("leverage", m, seed))
    if kind == "leveraged_volume":
        return leveraged_volume_sketch(a, SketchSpec("leveraged_volume", m, seed), basis=basis)
    if kind == "cpqr":
        return cpqr_sketch(a, m)
    raise ValueError(f"unknown sketch kind {kind!r}")


def _mu2(a, b, s, r_sq, rank):
    """Squared optimality coefficient from one sketched solve, plus residual."""
    sol = solve_sketched_ls(a, b, s, a_rank=rank)
    rs_sq = sol.residual_norm ** 2
    return max(rs_sq - r_sq, 0.0) / r_sq, sol.residual_norm


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.std(x) == 0 or np.std(y) == 0:
        raise DegenerateDataError(
            "correlation undefined: one coefficient sequence is constant")
    return float(np.corrcoef(x, y)[0, 1])


def corr_experiment(cfg: ExperimentConfig):
    """Correlation of squared optimality coefficients across fidelities.

    One fixed family, the four (kappa, phi) cells (or the single cell from
    the config), and the same `reps` sketches per kind reused across cells.
    Returns (summary_rows, scatter_rows); see the header constants for the
    column order.
    """
    reps = cfg.reps if cfg.reps is not None else 100
    m = cfg.m if cfg.m is not None else 100
    kinds = cfg.sketch_kinds if cfg.sketch_kinds else ("gaussian", "leverage")
    cells = CORR_CELLS
    if cfg.kappa is not None and cfg.phi is not None:
        cells = ((cfg.kappa, cfg.phi),)

    fam = SyntheticFamily(cfg.n, cfg.d, cfg.seed)
    profile = leverage_profile(fam.a)
    rank = fam.basis.rank

    summary, scatter = [], []
    for kind in kinds:
        sketches = [
            _build_sketch(kind, fam.a, m, derive_seed(cfg.seed, _KIND_TAG[kind], i),
                          profile=profile, basis=fam.basis)
            for i in range(reps)
        ]
        for kappa, phi in cells:
            b, b_low = fam.pair(kappa, phi)
            r_b = float(np.linalg.norm(b - fam.basis.q @ (fam.basis.q.T @ b)))
            r_l = float(np.linalg.norm(b_low - fam.basis.q @ (fam.basis.q.T @ b_low)))
            if r_b <= 1e-12 * np.linalg.norm(b) or r_l <= 1e-12 * np.linalg.norm(b_low):
                raise DegenerateDataError("cell has a right-hand side inside range(a)")
            records = []
            for i, s in enumerate(sketches):
                t0 = time.perf_counter()
                mu2_l, res_l = _mu2(fam.a, b_low, s, r_l * r_l, rank)
                mu2_h, res_h = _mu2(fam.a, b, s, r_b * r_b, rank)
                records.append(TrialRecord(
                    trial=i, spec=s.spec, mu2_low=mu2_l, mu2_high=mu2_h,
                    resid_low=res_l, resid_high=res_h,
                    timing=time.perf_counter() - t0,
                ))
            corr = _pearson(np.array([r.mu2_low for r in records]),
                            np.array([r.mu2_high for r in records]))
            summary.append((kind, kappa, phi, corr))
            scatter.extend(
                (kind, kappa, phi, r.trial, r.mu2_low, r.mu2_high) for r in records
            )
    return summary, scatter


CORR_SUMMARY_HEADER = ["sketch", "kappa", "phi", "correlation"]
CORR_SCATTER_HEADER = ["sketch", "kappa", "phi", "trial", "mu2_low", "mu2_high"]


def bound_experiment(cfg: ExperimentConfig):
    """Selection-gap check over the 9x9 (phi, kappa) grid.

    Per sketch kind: draw one sequence of L sketches and reuse it for every
    grid cell, mirroring how the data directions are drawn once per family.
    Each cell selects by low-fidelity residual, compares against the
    hindsight selection on b, and records the gap next to its bound
    2 sqrt(6 (1 - nu) eps).
    """
    m = cfg.m if cfg.m is not None else 100
    L = cfg.num_sketches
    kinds = cfg.sketch_kinds if cfg.sketch_kinds else ("gaussian", "leverage")
    fam = SyntheticFamily(cfg.n, cfg.d, cfg.seed)
    profile = leverage_profile(fam.a)
    rank = fam.basis.rank
    q = fam.basis.q

    rows = []
    for kind in kinds:
        sketches = [
            _build_sketch(kind, fam.a, m, derive_seed(cfg.seed, _KIND_TAG[kind], i),
                          profile=profile, basis=fam.basis)
            for i in range(L)
        ]
        for ci, kappa in enumerate(BOUND_GRID):
            for cj, phi in enumerate(BOUND_GRID):
                b, b_low = fam.pair(kappa, phi)
                metrics = correlation_metrics(fam.a, b, b_low, basis=fam.basis)
                r_b = float(np.linalg.norm(b - q @ (q.T @ b)))
                low_resids = np.empty(L)
                mus = np.empty(L)
                for i, s in enumerate(sketches):
                    sol_low = solve_sketched_ls(fam.a, b_low, s, a_rank=rank)
                    low_resids[i] = np.linalg.norm(fam.a @ sol_low.x - b_low)
                    mu2, _ = _mu2(fam.a, b, s, r_b * r_b, rank)
                    mus[i] = math.sqrt(mu2)
                selected = int(np.argmin(low_resids))
                hindsight = int(np.argmin(mus))
                gap = float(mus[selected] - mus[hindsight])
                bound = optimality_gap_bound(metrics.nu, cfg.eps)
                rows.append((kind, kappa, phi, metrics.nu, float(mus[selected]),
                             float(mus[hindsight]), gap, bound, int(gap > bound)))
    return rows


BOUND_HEADER = ["sketch", "kappa", "phi", "nu", "mu_selected", "mu_hindsight",
                "gap", "bound", "violation"]


def _box_stats(values: np.ndarray) -> tuple[float, float, float, float, float]:
    return (float(values.min()),
            float(np.quantile(values, 0.25)),
            float(np.quantile(values, 0.5)),
            float(np.quantile(values, 0.75)),
            float(values.max()))


def boost_experiment(cfg: ExperimentConfig):
    """Boosted vs single-sketch relative errors, trial by trial.

    Synthetic data (kappa, phi dials, defaults 0.2 and 0.99) or a
    user-supplied (A, b, b_low) file triple.  For every kind and embedding
    dimension: `reps` trials, each running boosted selection over L fresh
    sketches plus one independent un-boosted sketch.  Deterministic
    references (full solve, CPQR row selection) ride along in the summary.
    """
    reps = cfg.reps if cfg.reps is not None else 1000
    L = cfg.num_sketches
    kinds = cfg.sketch_kinds if cfg.sketch_kinds else ("uniform", "leverage", "leveraged_volume")
    if cfg.data_a is not None:
        a = bio.load_array(cfg.data_a)
        b = bio.load_vector(cfg.data_b)
        b_low = bio.load_vector(cfg.data_b_low)
        basis = orthonormal_basis(a)
    else:
        n = cfg.n
        d = cfg.d if cfg.d is not None else 10
        fam = SyntheticFamily(n, d, cfg.seed)
        kappa = cfg.kappa if cfg.kappa is not None else 0.2
        phi = cfg.phi if cfg.phi is not None else 0.99
        a, (b, b_low) = fam.a, fam.pair(kappa, phi)
        basis = fam.basis
    d = a.shape[1]
    m_values = [cfg.m] if cfg.m is not None else [math.ceil(1.2 * d), 2 * d]
    profile = leverage_profile(a)
    rank = basis.rank

    full_err = relative_error(a, solve_full_ls(a, b).x, b)
    trials, summary = [], []
    for kind in kinds:
        for m in m_values:
            cp = cpqr_sketch(a, m)
            cp_err = relative_error(a, solve_sketched_ls(a, b, cp, a_rank=rank).x, b)
            e_bfb = np.empty(reps)
            e_single = np.empty(reps)
            for t in range(reps):
                sketches = [
                    _build_sketch(kind, a, m,
                                  derive_seed(cfg.seed, _KIND_TAG[kind], m, t, i),
                                  profile=profile, basis=basis)
                    for i in range(L)
                ]
                pair = FidelityPair.from_vectors(b_low, b)
                res = run_bfb(a, pair, sketches, a_rank=rank)
                e_bfb[t] = relative_error(a, res.x, b)
                lone = _build_sketch(kind, a, m,
                                     derive_seed(cfg.seed, _KIND_TAG[kind], m, t, 0xBA5E),
                                     profile=profile, basis=basis)
                sol = solve_sketched_ls(a, b, lone, a_rank=rank)
                e_single[t] = relative_error(a, sol.x, b)
                trials.append((kind, m, t, e_bfb[t], e_single[t], res.selected,
                               res.high_fid_queries))
            for method, errs in (("bfb", e_bfb), ("single", e_single)):
                summary.append((kind, m, method, *_box_stats(errs), full_err, cp_err))
    return trials, summary


BOOST_TRIAL_HEADER = ["sketch", "m", "trial", "rel_err_bfb", "rel_err_single",
                      "selected", "high_fid_queries"]
BOOST_SUMMARY_HEADER = ["sketch", "m", "method", "min", "q1", "median", "q3",
                        "max", "full_rel_err", "cpqr_rel_err"]


@dataclass(frozen=True)
class WickCheck:
    samples: int
    mc_estimate: float
    exact: float
    rel_err: float


def wick_exact(w: np.ndarray, z: np.ndarray) -> float:
    """E[<w, g>^2 <z, g>^2] for standard normal g: 2 <w,z>^2 + |w|^2 |z|^2."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if w.shape != z.shape or w.ndim != 1:
        raise ValueError("w and z must be vectors of the same length")
    return 2.0 * float(w @ z) ** 2 + float(w @ w) * float(z @ z)


def wick_mc_check(w: np.ndarray, z: np.ndarray, samples: int, seed: int) -> WickCheck:
    """Monte Carlo check of the fourth-moment identity."""
    table = wick_convergence(w, z, samples, 0, seed)
    return table[0]


def wick_convergence(w: np.ndarray, z: np.ndarray, base_samples: int,
                     doublings: int, seed: int) -> list[WickCheck]:
    """Estimates at base, 2x, 4x, ... samples, sharing one sample stream
    (each row extends the previous one, exposing the 1/sqrt(n) decay)."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    exact = wick_exact(w, z)
    if exact <= 0:
        raise DegenerateDataError("identity check needs nonzero w and z")
    if base_samples < 1 or doublings < 0:
        raise ValueError("need base_samples >= 1 and doublings >= 0")
    rng = make_rng(seed)
    checkpoints = [base_samples * 2 ** k for k in range(doublings + 1)]
    out, done, acc = [], 0, 0.0
    chunk_cap = 1 << 19
    for target in checkpoints:
        while done < target:
            take = min(chunk_cap, target - done)
            g = rng.standard_normal((take, w.size))
            acc += float(((g @ w) ** 2 @ (g @ z) ** 2))
            done += take
        est = acc / done
        out.append(WickCheck(samples=done, mc_estimate=est, exact=exact,
                             rel_err=abs(est - exact) / exact))
    return out


WICK_HEADER = ["samples", "mc_estimate", "exact", "rel_err"]


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def write_sidecar(path, cfg: ExperimentConfig, extra: dict | None = None) -> None:
    """Config provenance next to an output file (no timestamps: reruns of the
    same config must produce identical bytes)."""
    payload = {"config": cfg.to_json(), "format_version": 1}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
