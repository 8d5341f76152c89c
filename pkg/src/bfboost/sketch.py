"""Sketch operators for tall least-squares problems.

Five constructions: dense Gaussian, uniform row sampling, leverage-score row
sampling, leveraged volume sampling (two-stage, unbiased), and a
deterministic CPQR row selection.  Row-sampling operators are stored as
(indices, weights) so they can consume an entry oracle; the Gaussian
operator stores its matrix explicitly and is regenerated from (n, spec) when
deserialized.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateDataError, SamplingFailureError
from .linalg import numerical_rank, orthonormal_basis
from .rng import derive_seed, make_rng

SKETCH_KINDS = ("gaussian", "uniform", "leverage", "leveraged_volume", "cpqr")

# Exact sub-Gaussian (psi_2) norm of a standard normal entry, for use as
# k_subgauss when sizing Gaussian embeddings: inf{K : E exp(X^2/K^2) <= 2}.
GAUSSIAN_SUBGAUSS_NORM = math.sqrt(8.0 / 3.0)


@dataclass(frozen=True)
class SketchSpec:
    """What to build: a sketch kind, an embedding dimension, and a seed."""

    kind: str
    m: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SKETCH_KINDS:
            raise ValueError(f"unknown sketch kind {self.kind!r}, expected one of {SKETCH_KINDS}")
        if self.m < 1:
            raise ValueError("embedding dimension m must be >= 1")


@dataclass(frozen=True)
class SketchOperator:
    """A realized m x n sketch, in row-sampling or dense form.

    Row-sampling form: indices (m,) int64 and weights (m,) positive floats,
    acting as x -> weights * x[indices].  Dense form: an explicit (m, n)
    matrix.  Exactly one form is populated.  Treat instances as immutable.
    """

    spec: SketchSpec
    n: int
    indices: np.ndarray | None = None
    weights: np.ndarray | None = None
    dense: np.ndarray | None = None

    def __post_init__(self):
        row = self.indices is not None
        if row != (self.weights is not None) or row == (self.dense is not None):
            raise ValueError("populate exactly one of (indices, weights) or dense")
        if row:
            if self.indices.shape != (self.spec.m,) or self.weights.shape != (self.spec.m,):
                raise ValueError("indices and weights must both have shape (m,)")
            if self.indices.min() < 0 or self.indices.max() >= self.n:
                raise ValueError("sample indices out of range")
            if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
                raise ValueError("weights must be finite and positive")
        elif self.dense.shape != (self.spec.m, self.n):
            raise ValueError(f"dense sketch must have shape ({self.spec.m}, {self.n})")

    @property
    def is_row_sample(self) -> bool:
        return self.indices is not None

    def matrix(self) -> np.ndarray:
        """Materialize the explicit m x n matrix (test and diagnostic use)."""
        if self.dense is not None:
            return np.array(self.dense)
        s = np.zeros((self.spec.m, self.n))
        s[np.arange(self.spec.m), self.indices] = self.weights
        return s


def apply_sketch(s: SketchOperator, x: np.ndarray) -> np.ndarray:
    """S x for a vector or matrix x with n rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != s.n:
        raise ValueError(f"operand has {x.shape[0]} rows, sketch expects {s.n}")
    if s.is_row_sample:
        picked = x[s.indices]
        return picked * (s.weights[:, None] if x.ndim == 2 else s.weights)
    return s.dense @ x


@dataclass(frozen=True)
class LeverageProfile:
    """Row leverage scores of a matrix: squared row norms of any orthonormal
    basis of its range.  scores sum to the rank; coherence is the max."""

    scores: np.ndarray
    rank: int
    coherence: float


def leverage_profile(a: np.ndarray) -> LeverageProfile:
    basis = orthonormal_basis(a)
    scores = np.einsum("ij,ij->i", basis.q, basis.q)
    return LeverageProfile(scores=scores, rank=basis.rank, coherence=float(scores.max()))


def gaussian_sketch(n: int, spec: SketchSpec) -> SketchOperator:
    """Dense i.i.d. N(0, 1/m) sketch, so E[S^T S] = I_n."""
    if spec.kind != "gaussian":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'gaussian'")
    rng = make_rng(spec.seed)
    dense = rng.standard_normal((spec.m, n)) / math.sqrt(spec.m)
    return SketchOperator(spec=spec, n=n, dense=dense)


def uniform_sketch(n: int, spec: SketchSpec) -> SketchOperator:
    """i.i.d. uniform row sampling with the constant weight sqrt(n/m)."""
    if spec.kind != "uniform":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'uniform'")
    rng = make_rng(spec.seed)
    idx = rng.integers(0, n, size=spec.m, dtype=np.int64)
    w = np.full(spec.m, math.sqrt(n / spec.m))
    return SketchOperator(spec=spec, n=n, indices=idx, weights=w)


def leverage_sketch(profile: LeverageProfile, spec: SketchSpec) -> SketchOperator:
    """i.i.d. row sampling from the leverage distribution p_i = score_i / rank,
    weighted by 1/sqrt(m p_i) so E[S^T S] = I_n."""
    if spec.kind != "leverage":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'leverage'")
    total = float(profile.scores.sum())
    if total <= 0:
        raise DegenerateDataError("all leverage scores are zero")
    p = profile.scores / total
    rng = make_rng(spec.seed)
    idx = rng.choice(p.size, size=spec.m, replace=True, p=p).astype(np.int64)
    w = 1.0 / np.sqrt(spec.m * p[idx])
    return SketchOperator(spec=spec, n=p.size, indices=idx, weights=w)


def cpqr_sketch(a: np.ndarray, m: int) -> SketchOperator:
    """Deterministic row selection by repeated column-pivoted QR of a^T.

    Each round runs CPQR on the transpose of the not-yet-chosen rows and
    keeps the first min(d, still_needed) pivot rows, until m rows are chosen.
    Weights are all one.
    """
    a = np.asarray(a, dtype=np.float64)
    n, d = a.shape
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    remaining = np.arange(n)
    chosen: list[np.ndarray] = []
    need = m
    while need > 0:
        k = min(d, need)
        # pivots come back in decreasing-importance order; keep the top k
        _, _, piv = scipy.linalg.qr(a[remaining].T, mode="economic", pivoting=True)
        take = piv[:k]
        chosen.append(remaining[take])
        remaining = np.delete(remaining, take)
        need -= k
    idx = np.concatenate(chosen).astype(np.int64)
    spec = SketchSpec(kind="cpqr", m=m, seed=0)
    return SketchOperator(spec=spec, n=n, indices=idx, weights=np.ones(m))


def _reverse_iterative_volume(b: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray | None:
    """Downsample the rows of b to m by volume sampling: repeatedly drop one
    row with probability proportional to (1 - its leverage within the
    survivors).  Returns surviving row positions, or None on numerical
    breakdown.  A row whose removal would drop the rank has leverage 1 and
    so removal probability 0, which keeps the survivors full rank."""
    t, d = b.shape
    gram = b.T @ b
    try:
        z = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        return None
    p = 1.0 - np.einsum("ij,jk,ik->i", b, z, b)
    alive = np.ones(t, dtype=bool)
    for _ in range(t - m):
        np.clip(p, 0.0, None, out=p)
        p[~alive] = 0.0
        total = p.sum()
        if not np.isfinite(total) or total <= 0.0:
            return None
        i = rng.choice(t, p=p / total)
        v = z @ b[i] / math.sqrt(p[i])
        p -= (b @ v) ** 2
        alive[i] = False
        z += np.outer(v, v)
    return np.flatnonzero(alive)


def leveraged_volume_sketch(a: np.ndarray, spec: SketchSpec, *,
                            pool_size: int | None = None,
                            max_retries: int = 16,
                            basis=None) -> SketchOperator:
    """Leverage-rescaled volume sampling of m rows, unbiased for the solve.

    Stage 1 draws a pool of i.i.d. leverage-distributed rows and accepts it
    with probability det of the pool's whitened second moment (a rejection
    step that corrects the i.i.d. pool toward a volume-sampled one).  Stage 2
    runs reverse-iterative volume sampling on the rescaled pool down to m
    rows.  The composition samples index sequences with probability
    proportional to det(sum_j a_ij a_ij^T / q_ij) * prod_j q_ij, q = score/rank,
    and under that law the weighted sketched solve has expectation equal to
    the full solve.

    Weights are 1/sqrt(m q_i), matching the leverage-sketch convention.
    Numerically rank-deficient pools are redrawn, at most max_retries times.
    A precomputed OrthoBasis for a may be passed to skip one SVD.
    """
    if spec.kind != "leveraged_volume":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'leveraged_volume'")
    a = np.asarray(a, dtype=np.float64)
    n, d = a.shape
    m = spec.m
    if m < d:
        raise ValueError(f"m = {m} is below the column count {d}; the volume law needs m >= d")

    if basis is None:
        basis = orthonormal_basis(a)
    u = basis.q
    r = basis.rank
    scores = np.einsum("ij,ij->i", u, u)
    q = scores / r
    t = max(4 * d * d, m) if pool_size is None else int(pool_size)
    if t < m:
        raise ValueError(f"pool_size {t} is smaller than m = {m}")

    rank_failures = 0
    for attempt in range(100_000):
        rng = make_rng(derive_seed(spec.seed, attempt))
        pool = rng.choice(n, size=t, replace=True, p=q).astype(np.int64)
        # whitened pool rows; their average outer product has trace exactly r,
        # so the determinant below is a valid acceptance probability
        g = u[pool] / np.sqrt(t * q[pool])[:, None]
        sign, logdet = np.linalg.slogdet(g.T @ g)
        if sign <= 0 or not np.isfinite(logdet):
            rank_failures += 1
            if rank_failures > max_retries:
                raise SamplingFailureError(
                    f"leveraged volume sampling drew {rank_failures} rank-deficient pools"
                )
            continue
        if rng.random() >= min(math.exp(logdet), 1.0):
            continue
        surv = _reverse_iterative_volume(u[pool] / np.sqrt(q[pool])[:, None], m, rng)
        if surv is None:
            rank_failures += 1
            if rank_failures > max_retries:
                raise SamplingFailureError(
                    f"leveraged volume sampling hit {rank_failures} numerical breakdowns"
                )
            continue
        idx = pool[surv]
        w = 1.0 / np.sqrt(m * q[idx])
        return SketchOperator(spec=spec, n=n, indices=idx, weights=w)
    raise SamplingFailureError("leveraged volume sampling failed to accept a pool")


@dataclass(frozen=True)
class PairConditionReport:
    """Outcome of the two sufficient conditions for a sketch to treat an
    (orthonormal basis, unit residual direction) pair faithfully."""

    sigma_min_sq: float
    cross_term_sq: float
    sigma_ok: bool
    cross_ok: bool

    @property
    def both(self) -> bool:
        return self.sigma_ok and self.cross_ok


def pair_condition_check(s: SketchOperator, q: np.ndarray, h: np.ndarray,
                         eps: float) -> PairConditionReport:
    """Check sigma_min(S q)^2 >= sqrt(2)/2 and ||q^T S^T S h||^2 <= eps/2.

    q must have orthonormal columns and h must be a unit vector orthogonal
    to range(q); together the two conditions force the sketched solve on
    (q, h) to preserve rank and inflate the residual by at most (1 + eps).
    """
    q = np.asarray(q, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not np.allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-8):
        raise ValueError("q must have orthonormal columns")
    if abs(np.linalg.norm(h) - 1.0) > 1e-10:
        raise ValueError("h must be a unit vector")
    if np.linalg.norm(q.T @ h) > 1e-8:
        raise ValueError("h must be orthogonal to range(q)")
    sq = apply_sketch(s, q)
    sh = apply_sketch(s, h)
    svals = np.linalg.svd(sq, compute_uv=False)
    sigma_min_sq = float(svals[-1] ** 2) if svals.size else 0.0
    cross = sq.T @ sh
    cross_sq = float(cross @ cross)
    return PairConditionReport(
        sigma_min_sq=sigma_min_sq,
        cross_term_sq=cross_sq,
        sigma_ok=sigma_min_sq >= math.sqrt(2.0) / 2.0,
        cross_ok=cross_sq <= eps / 2.0,
    )


def min_embedding_dim(kind: str, d: int, num_sketches: int, eps: float, delta: float,
                      k_subgauss: float = 1.0, c_lev: float | None = None,
                      c_abs: float = 1.0) -> int:
    """Embedding dimension sufficient for all num_sketches draws to satisfy
    the pair condition at level (eps, delta).

    kind 'gaussian' (any sub-Gaussian sketch): c_abs * K^4 * (d/eps) * log(4 d L / delta)
    with K = k_subgauss.  kind 'leverage': max{35 d log(4 d L / delta),
    2 d L / (eps delta)}; passing c_lev switches to the variant
    max{35, 4 c_lev^2 / eps} * d * log(4 d L / delta), valid when the sampled
    matrix-residual products are entrywise bounded by c_lev.
    """
    if d < 1 or num_sketches < 1:
        raise ValueError("d and num_sketches must be >= 1")
    if not (0 < eps and 0 < delta < 1):
        raise ValueError("need eps > 0 and 0 < delta < 1")
    log_term = math.log(4.0 * d * num_sketches / delta)
    if kind in ("gaussian", "subgaussian"):
        return math.ceil(c_abs * k_subgauss ** 4 * (d / eps) * log_term)
    if kind == "leverage":
        if not (eps < 0.5 and delta < 0.5):
            raise ValueError("the leverage bound needs eps and delta below 1/2")
        if c_lev is None:
            return math.ceil(max(35.0 * d * log_term, 2.0 * d * num_sketches / (eps * delta)))
        return math.ceil(max(35.0, 4.0 * c_lev ** 2 / eps) * d * log_term)
    raise ValueError(f"no embedding-dimension formula for kind {kind!r}")


def sketch_to_json(s: SketchOperator) -> dict:
    """JSON-ready description: {kind, m, seed, n, indices?, weights?}.

    Dense Gaussian operators carry no payload; they are regenerated from
    (n, spec) on load.
    """
    out = {"kind": s.spec.kind, "m": s.spec.m, "seed": s.spec.seed, "n": s.n}
    if s.is_row_sample:
        out["indices"] = [int(i) for i in s.indices]
        out["weights"] = [float(w) for w in s.weights]
    return out


def sketch_from_json(obj: dict) -> SketchOperator:
    spec = SketchSpec(kind=obj["kind"], m=int(obj["m"]), seed=int(obj["seed"]))
    n = int(obj["n"])
    if "indices" in obj:
        return SketchOperator(
            spec=spec, n=n,
            indices=np.asarray(obj["indices"], dtype=np.int64),
            weights=np.asarray(obj["weights"], dtype=np.float64),
        )
    if spec.kind != "gaussian":
        raise ValueError(f"row-sampling sketch {spec.kind!r} serialized without indices")
    return gaussian_sketch(n, spec)


def save_sketch_json(path: str | os.PathLike, s: SketchOperator) -> None:
    with open(path, "w") as fh:
        json.dump(sketch_to_json(s), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sketch_json(path: str | os.PathLike) -> SketchOperator:
    with open(path) as fh:
        return sketch_from_json(json.load(fh))
