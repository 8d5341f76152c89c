"""Least-squares substrate: orthonormal bases, full and sketched solves,
the residual decomposition, and the optimality coefficient.

All solves go through an SVD-truncated pseudoinverse with a shared relative
rank tolerance, so rank decisions are consistent across the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, FullVectorRequiredError, RankDeficiencyError
from .oracle import EntryOracle

# Relative cutoff for treating a singular value as zero.
RANK_TOL = 1e-12
# Assumption guard: the optimality coefficient is undefined when b is
# (numerically) in the range of A.
OPT_TOL = 1e-12


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal basis q (n x rank) for the range of a matrix."""

    q: np.ndarray
    rank: int


@dataclass
class LeastSquaresSolution:
    x: np.ndarray
    residual_norm: float | None
    sketched_rank_ok: bool
    sketched_rank: int | None = None
    original_rank: int | None = None


def _as_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a 2-d matrix with positive dims, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _as_vector(b: np.ndarray, n: int, name: str = "b") -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != n:
        raise ValueError(f"{name} must be a length-{n} vector, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError(f"{name} entries must be finite")
    return b


def numerical_rank(singular_values: np.ndarray, tol: float = RANK_TOL) -> int:
    """Count singular values above tol relative to the largest one."""
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def orthonormal_basis(a: np.ndarray) -> OrthoBasis:
    """Orthonormal basis for range(a) via SVD truncation.

    Raises DegenerateDataError if a is numerically zero.
    """
    a = _as_matrix(a)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = numerical_rank(s)
    if r == 0:
        raise DegenerateDataError("matrix is numerically zero, no basis to return")
    return OrthoBasis(q=u[:, :r], rank=r)


def _svd_solve(m: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares solve via truncated SVD; returns (x, rank)."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    r = numerical_rank(s)
    if r == 0:
        return np.zeros(m.shape[1]), 0
    coef = (u[:, :r].T @ rhs) / s[:r]
    return vt[:r].T @ coef, r


def solve_full_ls(a: np.ndarray, b: np.ndarray) -> LeastSquaresSolution:
    """argmin_x ||a x - b||_2 with the minimum-norm solution on rank deficiency."""
    a = _as_matrix(a)
    b = _as_vector(b, a.shape[0])
    x, r = _svd_solve(a, b)
    resid = float(np.linalg.norm(a @ x - b))
    return LeastSquaresSolution(
        x=x, residual_norm=resid, sketched_rank_ok=True,
        sketched_rank=r, original_rank=r,
    )


def _sketch_rows(s, mat: np.ndarray) -> np.ndarray:
    """Apply a sketch operator to a matrix or vector (duck-typed on fields)."""
    if mat.shape[0] != s.n:
        raise ValueError(f"operand has {mat.shape[0]} rows, sketch expects {s.n}")
    if s.indices is not None:
        picked = mat[s.indices]
        w = s.weights
        return picked * (w[:, None] if mat.ndim == 2 else w)
    return s.dense @ mat


def _sketch_rhs(s, b) -> tuple[np.ndarray, np.ndarray | None]:
    """Return (S b, full b if known).  b may be a vector or an EntryOracle."""
    if isinstance(b, EntryOracle):
        if b.n != s.n:
            raise ValueError(f"oracle length {b.n} does not match sketch width {s.n}")
        if s.indices is not None:
            uniq, inv = np.unique(np.asarray(s.indices, dtype=np.int64), return_inverse=True)
            vals = b.gather(uniq)
            return s.weights * vals[inv], b.full
        if b.full is None:
            raise FullVectorRequiredError(
                "dense sketch needs every entry of b; supply the full vector"
            )
        # A dense sketch touches all of b, so route it through the oracle to
        # keep the query count honest.
        full = b.gather(np.arange(b.n))
        return s.dense @ full, full
    b = _as_vector(b, s.n)
    return _sketch_rows(s, b), b


def solve_sketched_ls(a: np.ndarray, b, s, *, a_rank: int | None = None) -> LeastSquaresSolution:
    """argmin_x ||S a x - S b||_2 for a sketch operator S.

    Parameters
    ----------
    a : (n, d) matrix.
    b : length-n vector or EntryOracle.  Row-sampling sketches query only the
        sampled entries; a dense sketch with an oracle lacking a full vector
        raises FullVectorRequiredError.
    s : sketch operator over n rows.
    a_rank : optional precomputed rank of a, to skip one SVD.

    The returned solution carries sketched_rank_ok = (rank(S a) == rank(a)).
    Rank loss is flagged, not fatal; downstream quantities that need the
    preserved-rank identity raise instead.
    """
    a = _as_matrix(a)
    sa = _sketch_rows(s, a)
    sb, full_b = _sketch_rhs(s, b)
    x, rank_sa = _svd_solve(sa, sb)
    if a_rank is None:
        a_rank = numerical_rank(np.linalg.svd(a, compute_uv=False))
    resid = float(np.linalg.norm(a @ x - full_b)) if full_b is not None else None
    return LeastSquaresSolution(
        x=x,
        residual_norm=resid,
        sketched_rank_ok=(rank_sa == a_rank),
        sketched_rank=rank_sa,
        original_rank=a_rank,
    )


@dataclass(frozen=True)
class ResidualDecomposition:
    full_sq: float
    projection_sq: float
    sketched_sq: float


def residual_decomposition(a: np.ndarray, b: np.ndarray, s, *,
                           basis: OrthoBasis | None = None) -> ResidualDecomposition:
    """Split the sketched residual into the full residual plus a sketch term.

    Returns (r_full^2, proj^2, r_sketch^2) where proj = ||(SQ)^+ S c||_2 with
    Q an orthonormal basis of range(a) and c = b - Q Q^T b.  When the sketch
    preserves rank these satisfy r_sketch^2 = r_full^2 + proj^2; r_sketch is
    computed independently from the sketched solve so the identity is a real
    consistency check, not a tautology.

    Raises RankDeficiencyError when rank(S a) < rank(a).
    """
    a = _as_matrix(a)
    if basis is None:
        basis = orthonormal_basis(a)
    b = _as_vector(b, a.shape[0])
    c = b - basis.q @ (basis.q.T @ b)
    r_full_sq = float(c @ c)

    sol = solve_sketched_ls(a, b, s, a_rank=basis.rank)
    if not sol.sketched_rank_ok:
        raise RankDeficiencyError(sol.sketched_rank, basis.rank)
    sq = _sketch_rows(s, basis.q)
    sc = _sketch_rows(s, c)
    proj, _ = _svd_solve(sq, sc)
    proj_sq = float(proj @ proj)
    r_sketch_sq = float(sol.residual_norm) ** 2
    return ResidualDecomposition(r_full_sq, proj_sq, r_sketch_sq)


def optimality_coefficient(a: np.ndarray, b: np.ndarray, s, *,
                           basis: OrthoBasis | None = None) -> float:
    """Excess of the sketched residual over the optimum, normalized:
    sqrt((r_sketch^2 - r_full^2) / r_full^2).

    Zero means the sketched solve matched the full solve exactly.  Raises
    DegenerateDataError when b is numerically in range(a) (the ratio is
    undefined there) and RankDeficiencyError when the sketch loses rank
    (the defining identity breaks down there).
    """
    a = _as_matrix(a)
    if basis is None:
        basis = orthonormal_basis(a)
    b = _as_vector(b, a.shape[0])
    c = b - basis.q @ (basis.q.T @ b)
    r = float(np.linalg.norm(c))
    if r <= OPT_TOL * float(np.linalg.norm(b)):
        raise DegenerateDataError(
            "b lies in range(a) to working precision; optimality coefficient undefined"
        )
    sol = solve_sketched_ls(a, b, s, a_rank=basis.rank)
    if not sol.sketched_rank_ok:
        raise RankDeficiencyError(sol.sketched_rank, basis.rank)
    rs = float(sol.residual_norm)
    # rounding can push rs slightly below r when the sketch is near-exact
    return float(np.sqrt(max(rs * rs - r * r, 0.0)) / r)
