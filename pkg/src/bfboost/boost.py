"""Bi-fidelity boosted sketch selection.

Given a cheap surrogate right-hand side for which full residuals are
affordable, try several sketches on the surrogate, keep the one whose
sketched solution has the smallest full surrogate residual, and spend the
expensive right-hand side only on that winner's sampled entries.  The rest
of the module quantifies when this works: alignment metrics between the two
right-hand sides, the selection-gap bound, the residual-inflation penalty,
and computable lower bounds on the alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError
from .linalg import OrthoBasis, orthonormal_basis, solve_sketched_ls
from .oracle import EntryOracle
from .sketch import SketchOperator, SketchSpec


@dataclass
class FidelityPair:
    """A cheap full vector and an expensive entry oracle for the same rows."""

    low: np.ndarray
    high: EntryOracle

    def __post_init__(self):
        self.low = np.asarray(self.low, dtype=np.float64)
        if self.low.ndim != 1:
            raise ValueError("low-fidelity data must be a vector")
        if self.low.shape[0] != self.high.n:
            raise ValueError(
                f"fidelities disagree on length: {self.low.shape[0]} vs {self.high.n}"
            )

    @classmethod
    def from_vectors(cls, low: np.ndarray, high: np.ndarray) -> "FidelityPair":
        return cls(low=low, high=EntryOracle.from_vector(high))


@dataclass(frozen=True)
class CorrelationMetrics:
    """Alignment diagnostics between two right-hand sides relative to a design.

    nu is the absolute correlation of the two residuals (components outside
    range(a)); phi the absolute cosine of the raw vectors; kappa and
    kappa_tilde the fractions of each vector inside range(a).  h is the
    normalized difference of the normalized residual directions, the
    direction along which a sketch can distort one problem but not the
    other; it is undefined (None, degenerate=True) when the two residual
    directions coincide.
    """

    nu: float
    phi: float
    kappa: float
    kappa_tilde: float
    h: np.ndarray | None
    degenerate: bool


def correlation_metrics(a: np.ndarray, b: np.ndarray, b_low: np.ndarray, *,
                        basis: OrthoBasis | None = None) -> CorrelationMetrics:
    if basis is None:
        basis = orthonormal_basis(a)
    q = basis.q
    b = np.asarray(b, dtype=np.float64)
    b_low = np.asarray(b_low, dtype=np.float64)
    nb, nbl = np.linalg.norm(b), np.linalg.norm(b_low)
    if nb == 0 or nbl == 0:
        raise DegenerateDataError("zero right-hand side")
    pb = b - q @ (q.T @ b)
    pl = b_low - q @ (q.T @ b_low)
    npb, npl = np.linalg.norm(pb), np.linalg.norm(pl)
    if npb <= 1e-12 * nb or npl <= 1e-12 * nbl:
        raise DegenerateDataError(
            "a right-hand side lies in range(a); residual alignment undefined"
        )
    nu = abs(float(pb @ pl)) / (npb * npl)
    phi = abs(float(b @ b_low)) / (nb * nbl)
    kappa = float(np.linalg.norm(q.T @ b)) / nb
    kappa_tilde = float(np.linalg.norm(q.T @ b_low)) / nbl
    diff = pb / npb - pl / npl
    dn = float(np.linalg.norm(diff))
    if dn < 1e-8:
        return CorrelationMetrics(nu=min(nu, 1.0), phi=phi, kappa=kappa,
                                  kappa_tilde=kappa_tilde, h=None, degenerate=True)
    return CorrelationMetrics(nu=min(nu, 1.0), phi=phi, kappa=kappa,
                              kappa_tilde=kappa_tilde, h=diff / dn, degenerate=False)


@dataclass
class BoostResult:
    x: np.ndarray
    selected: int
    selected_spec: SketchSpec
    low_fid_residuals: np.ndarray
    high_fid_queries: int
    solution_residual: float | None
    sketched_rank_ok: bool

    def to_json(self) -> dict:
        return {
            "selected": self.selected,
            "selected_spec": {
                "kind": self.selected_spec.kind,
                "m": self.selected_spec.m,
                "seed": self.selected_spec.seed,
            },
            "low_fid_residuals": [float(r) for r in self.low_fid_residuals],
            "high_fid_queries": self.high_fid_queries,
            "solution_residual": self.solution_residual,
            "sketched_rank_ok": self.sketched_rank_ok,
            "x": [float(v) for v in self.x],
        }


def run_bfb(a: np.ndarray, pair: FidelityPair, sketches: list[SketchOperator], *,
            a_rank: int | None = None) -> BoostResult:
    """Boosted sketch selection.

    For each candidate sketch, solve the sketched low-fidelity problem and
    score it by its residual on the full low-fidelity vector.  The smallest
    residual wins (ties to the smallest index), and only the winner touches
    the high-fidelity oracle.  For row-sampling sketches that costs at most
    m distinct entries.
    """
    if not sketches:
        raise ValueError("need at least one candidate sketch")
    b_low = pair.low
    resids = np.empty(len(sketches))
    for i, s in enumerate(sketches):
        sol = solve_sketched_ls(a, b_low, s, a_rank=a_rank)
        resids[i] = np.linalg.norm(a @ sol.x - b_low)
    selected = int(np.argmin(resids))
    winner = sketches[selected]
    before = pair.high.queries
    sol = solve_sketched_ls(a, pair.high, winner, a_rank=a_rank)
    return BoostResult(
        x=sol.x,
        selected=selected,
        selected_spec=winner.spec,
        low_fid_residuals=resids,
        high_fid_queries=pair.high.queries - before,
        solution_residual=sol.residual_norm,
        sketched_rank_ok=sol.sketched_rank_ok,
    )


def oracle_index(a: np.ndarray, b: np.ndarray, sketches: list[SketchOperator], *,
                 a_rank: int | None = None) -> int:
    """Index of the sketch whose high-fidelity sketched solution has the
    smallest full residual (the hindsight winner; needs all of b)."""
    if not sketches:
        raise ValueError("need at least one candidate sketch")
    b = np.asarray(b, dtype=np.float64)
    best, best_r = 0, math.inf
    for i, s in enumerate(sketches):
        sol = solve_sketched_ls(a, b, s, a_rank=a_rank)
        r = float(np.linalg.norm(a @ sol.x - b))
        if r < best_r:
            best, best_r = i, r
    return best


def optimality_gap_bound(nu: float, eps: float) -> float:
    """2 sqrt(6 (1 - nu) eps): how much worse the low-fidelity selection can
    be than the hindsight selection, when every candidate sketch passes the
    pair condition at level eps."""
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 2.0 * math.sqrt(6.0 * (1.0 - nu) * eps)


def boost_penalty(eps: float, delta: float, nu: float, num_sketches: int) -> float:
    """Saturation penalty tau = 24 L (1 - nu) + (delta/2)(1 + 4 sqrt(6 (1 - nu) eps)).

    Multiplies eps/L in the boosted residual guarantee; at nu = 1 it
    collapses to delta/2 and boosting recovers the full 1/L gain.
    """
    if not (0 < eps < 0.5 and 0 < delta < 0.5):
        raise ValueError("need eps and delta in (0, 1/2)")
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    if num_sketches < 1:
        raise ValueError("num_sketches must be >= 1")
    return (24.0 * num_sketches * (1.0 - nu)
            + 0.5 * delta * (1.0 + 4.0 * math.sqrt(6.0 * (1.0 - nu) * eps)))


def nu_lower_bounds(phi: float, kappa: float, kappa_tilde: float) -> tuple[float, float]:
    """Two computable lower bounds on nu for aligned data (phi >= kappa).

    The first uses the high-fidelity range fraction kappa; the second
    replaces it with phi * kappa_tilde + sqrt(1 - phi^2), which is
    computable from the cheap vector alone.
    """
    for name, v in (("phi", phi), ("kappa", kappa), ("kappa_tilde", kappa_tilde)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if phi < kappa:
        raise ValueError("these bounds need phi >= kappa")

    def bound(k: float) -> float:
        return phi - k * min(1.0, math.sqrt(max(2.0 * (1.0 - phi + k), 0.0)))

    return bound(kappa), bound(phi * kappa_tilde + math.sqrt(max(1.0 - phi * phi, 0.0)))


def gaussian_corr_lower_bounds(a: np.ndarray, b: np.ndarray, b_low: np.ndarray, *,
                               basis: OrthoBasis | None = None) -> tuple[float, float | None]:
    """Asymptotic lower bounds on the correlation of squared optimality
    coefficients under wide Gaussian sketches.

    Returns (general, aligned) where general is
    (||P b_hat||^2 - sqrt(6) min_{+,-} ||P (b_hat +/- bl_hat)||) / ||P bl_hat||^2
    with P the projector off range(a) and hats denoting normalization, and
    aligned is (1 - kappa^2) - sqrt(12 (1 - phi)) / (phi - kappa)^2, defined
    only for phi > kappa (None otherwise, -inf at phi == kappa).
    """
    if basis is None:
        basis = orthonormal_basis(a)
    q = basis.q
    b = np.asarray(b, dtype=np.float64)
    b_low = np.asarray(b_low, dtype=np.float64)
    bh = b / np.linalg.norm(b)
    lh = b_low / np.linalg.norm(b_low)

    def perp(v):
        return v - q @ (q.T @ v)

    pb, pl = perp(bh), perp(lh)
    denom = float(pl @ pl)
    if denom == 0.0:
        raise DegenerateDataError("low-fidelity vector lies in range(a)")
    cross = min(float(np.linalg.norm(perp(bh + lh))), float(np.linalg.norm(perp(bh - lh))))
    general = (float(pb @ pb) - math.sqrt(6.0) * cross) / denom

    phi = abs(float(bh @ lh))
    kappa = float(np.linalg.norm(q.T @ bh))
    if phi < kappa:
        aligned = None
    elif phi == kappa:
        aligned = -math.inf
    else:
        aligned = (1.0 - kappa * kappa) - math.sqrt(12.0 * (1.0 - phi)) / (phi - kappa) ** 2
    return general, aligned


def relative_error(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """||a x - b|| / ||b||."""
    b = np.asarray(b, dtype=np.float64)
    nb = float(np.linalg.norm(b))
    if nb == 0:
        raise DegenerateDataError("relative error undefined for zero b")
    return float(np.linalg.norm(np.asarray(a) @ np.asarray(x) - b)) / nb
