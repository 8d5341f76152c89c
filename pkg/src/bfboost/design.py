"""Tensor-product polynomial regression designs.

Rows are Gauss-Legendre tensor grid points, columns are products of
normalized Legendre polynomials restricted to a total-degree or hyperbolic
cross index set.  With enough nodes per dimension the assembled matrix has
exactly orthonormal columns.  The design is stored factored; the full matrix
is only assembled on demand (and behind a memory cap), and leverage-score
row sampling works directly on the factors, so its per-sample cost does not
grow with the assembled row count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DegenerateDataError, MemoryCapError
from .rng import make_rng
from .sketch import SketchOperator, SketchSpec

INDEX_SET_KINDS = ("total_degree", "hyperbolic_cross")

# Entries allowed in an assembled matrix before we refuse to materialize it.
DEFAULT_MAX_ENTRIES = 10 ** 8


@dataclass(frozen=True)
class QuadratureRule1D:
    """Nodes on [-1, 1] and weights normalized to the uniform probability
    measure (weights sum to one)."""

    nodes: np.ndarray
    weights: np.ndarray

    def mapped_nodes(self, lo: float, hi: float) -> np.ndarray:
        """Affine image of the nodes on [lo, hi]; weights are unchanged."""
        return lo + (self.nodes + 1.0) * 0.5 * (hi - lo)


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre_rule(n: int) -> QuadratureRule1D:
    """n-point Gauss-Legendre rule by Newton iteration on the recurrence.

    Exact for polynomials through degree 2n - 1.  Iterates to 1e-15 on the
    node update, at most 100 rounds.
    """
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1)
    x = np.cos(math.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        if n == 1:
            # single node: P_1 = x, root at 0, derivative 1
            dx = x
            x = x - dx
        else:
            dx = p / dp
            x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(n, x)
    if n == 1:
        w = np.array([1.0])
        x = np.array([0.0])
    else:
        # classical weight 2/((1-x^2) P_n'^2), halved for the probability measure
        w = 1.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule1D(nodes=x[order], weights=w[order])


def normalized_legendre(j: int, p) -> np.ndarray:
    """sqrt(2j + 1) * P_j(p): unit second moment under uniform on [-1, 1]."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(p, dtype=np.float64)
    val, _ = _legendre_and_derivative(j, np.atleast_1d(x))
    out = math.sqrt(2 * j + 1) * val
    return out if x.ndim else float(out[0])


@dataclass(frozen=True)
class IndexSet:
    """Multi-indices of a polynomial space, ascending in the flattened
    Kronecker column order (dimension 1 slowest)."""

    q: int
    zeta: int
    kind: str
    members: tuple[tuple[int, ...], ...]

    @property
    def d(self) -> int:
        return len(self.members)

    def kron_columns(self) -> np.ndarray:
        """Flattened column index of each member in the (zeta+1)^q product."""
        base = self.zeta + 1
        cols = np.zeros(self.d, dtype=np.int64)
        for k in range(self.q):
            cols = cols * base + np.array([m[k] for m in self.members])
        return cols


def index_set(q: int, zeta: int, kind: str) -> IndexSet:
    """Total-degree (sum j_k <= zeta) or hyperbolic-cross
    (prod (j_k + 1) <= zeta + 1) multi-index set."""
    if kind not in INDEX_SET_KINDS:
        raise ValueError(f"unknown index set kind {kind!r}, expected one of {INDEX_SET_KINDS}")
    if q < 1 or zeta < 0:
        raise ValueError("need q >= 1 and zeta >= 0")
    members = []
    # itertools.product with the last coordinate fastest matches ascending
    # Kronecker order with dimension 1 slowest
    for jj in itertools.product(range(zeta + 1), repeat=q):
        if kind == "total_degree":
            ok = sum(jj) <= zeta
        else:
            ok = math.prod(j + 1 for j in jj) <= zeta + 1
        if ok:
            members.append(jj)
    return IndexSet(q=q, zeta=zeta, kind=kind, members=tuple(members))


@dataclass
class StructuredDesign:
    """A Kronecker-factored design: per-dimension factors A_k of shape
    (N_k, zeta + 1) with entries sqrt(w_n) psi_j(p_n), plus the column
    subset picked by the index set."""

    factors: list[np.ndarray]
    rules: list[QuadratureRule1D]
    iset: IndexSet
    max_entries: int = DEFAULT_MAX_ENTRIES
    _assembled: np.ndarray | None = field(default=None, repr=False)
    _factor_qs: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return math.prod(f.shape[0] for f in self.factors)

    @property
    def n_cols(self) -> int:
        return self.iset.d

    def grid_points(self) -> np.ndarray:
        """All tensor grid points, (n_rows, q), dimension 1 slowest."""
        mesh = np.meshgrid(*[r.nodes for r in self.rules], indexing="ij")
        return np.stack([g.ravel(order="C") for g in mesh], axis=1)

    def sqrt_weights(self) -> np.ndarray:
        return reduce(np.kron, [np.sqrt(r.weights) for r in self.rules])

    def assembled(self) -> np.ndarray:
        """The full design matrix; refuses above the entry cap."""
        if self._assembled is None:
            total = self.n_rows * self.n_cols
            if total > self.max_entries:
                raise MemoryCapError(
                    f"assembled design would hold {total} entries, cap is {self.max_entries}"
                )
            cols = [
                reduce(np.kron, [self.factors[k][:, jj[k]] for k in range(self.iset.q)])
                for jj in self.iset.members
            ]
            self._assembled = np.column_stack(cols)
        return self._assembled

    def factor_orths(self) -> list[np.ndarray]:
        """Compact QR orthogonal factor of each A_k (cached).

        Requires every factor to have full column rank, which build_design
        guarantees by insisting on at least zeta + 1 nodes per dimension.
        """
        if self._factor_qs is None:
            qs = []
            for k, f in enumerate(self.factors):
                qk, rk = np.linalg.qr(f)
                if np.min(np.abs(np.diag(rk))) <= 1e-12 * np.max(np.abs(np.diag(rk))):
                    raise DegenerateDataError(f"factor {k} is numerically rank deficient")
                qs.append(qk)
            self._factor_qs = qs
        return self._factor_qs


def build_design(q: int, zeta: int, kind: str, nodes_per_dim,
                 max_entries: int = DEFAULT_MAX_ENTRIES) -> StructuredDesign:
    """Assemble the factored design for the given space.

    nodes_per_dim is an int (shared by all dimensions) or a length-q
    sequence.  Every factor needs at least zeta + 1 nodes for its columns to
    be linearly independent; with N_k >= zeta + 1 the assembled design has
    orthonormal columns because the quadrature integrates products of basis
    polynomials exactly.
    """
    iset = index_set(q, zeta, kind)
    if isinstance(nodes_per_dim, int):
        counts = [nodes_per_dim] * q
    else:
        counts = [int(c) for c in nodes_per_dim]
        if len(counts) != q:
            raise ValueError(f"expected {q} node counts, got {len(counts)}")
    if any(c < zeta + 1 for c in counts):
        raise ValueError("each dimension needs at least zeta + 1 quadrature nodes")
    rules = [gauss_legendre_rule(c) for c in counts]
    factors = []
    for rule in rules:
        sqw = np.sqrt(rule.weights)
        cols = [sqw * normalized_legendre(j, rule.nodes) for j in range(zeta + 1)]
        factors.append(np.column_stack(cols))
    return StructuredDesign(factors=factors, rules=rules, iset=iset, max_entries=max_entries)


def assemble_data_vector(design: StructuredDesign, f) -> np.ndarray:
    """b[n] = sqrt(w_n) f(p_n) over the tensor grid, matching the design's
    row order.  f maps a length-q point to a real number."""
    pts = design.grid_points()
    vals = np.array([float(f(p)) for p in pts])
    if not np.all(np.isfinite(vals)):
        raise ValueError("f produced non-finite values on the grid")
    return design.sqrt_weights() * vals


def exact_row_distribution(design: StructuredDesign) -> np.ndarray:
    """Leverage distribution of the assembled design (oracle for tests;
    assembles the matrix, so the memory cap applies)."""
    a = design.assembled()
    qmat = np.linalg.qr(a)[0]
    scores = np.einsum("ij,ij->i", qmat, qmat)
    return scores / design.n_cols


def _factor_cdfs(design: StructuredDesign) -> list[np.ndarray]:
    """Per-dimension cumulative laws over rows, one column per degree."""
    return [np.cumsum(qk ** 2, axis=0) for qk in design.factor_orths()]


def sample_rows_given_column(design: StructuredDesign, member: tuple[int, ...],
                             size: int, rng: np.random.Generator) -> np.ndarray:
    """Row multi-indices (size, q) for one basis column: dimension k draws
    its row from the squared column j_k of the k-th orthogonal factor."""
    out = np.empty((size, design.iset.q), dtype=np.int64)
    for k, qk in enumerate(design.factor_orths()):
        pk = qk[:, member[k]] ** 2
        pk = pk / pk.sum()
        cdf = np.cumsum(pk)
        u = rng.random(size)
        out[:, k] = np.searchsorted(cdf, u, side="right").clip(0, pk.size - 1)
    return out


def kron_leverage_sample(design: StructuredDesign, m: int, seed: int) -> SketchOperator:
    """Leverage-score row sampling of the assembled design without assembling it.

    Exactness rests on the factored structure: for a downward-closed index
    set taken in ascending Kronecker order, an orthonormal basis for the
    assembled design's range is the matching column subset of the Kronecker
    product of the per-factor orthogonal QR factors.  So a leverage draw is:
    pick a basis column uniformly, then draw each dimension's row index from
    that factor column's squared entries.  The mixture over columns is
    exactly score_i / d.

    Per-sample cost depends on the factor sizes and d, never on the product
    row count.  Weights follow the leverage convention 1/sqrt(m p_i).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    cols = design.iset.kron_columns()
    if np.any(np.diff(cols) <= 0):
        raise ValueError("index set must be ascending in Kronecker column order")
    q = design.iset.q
    d = design.iset.d
    rng = make_rng(seed)
    orths = design.factor_orths()
    cdfs = _factor_cdfs(design)

    choice = rng.integers(0, d, size=m)
    rows = np.empty((m, q), dtype=np.int64)
    # group draws by chosen column so each group is one vectorized inverse-CDF
    for c in np.unique(choice):
        mask = choice == c
        member = design.iset.members[int(c)]
        cnt = int(mask.sum())
        for k in range(q):
            cdf = cdfs[k][:, member[k]]
            u = rng.random(cnt) * cdf[-1]
            rows[mask, k] = np.searchsorted(cdf, u, side="right").clip(0, cdf.size - 1)

    # leverage score of each sampled row from the factored basis:
    # score = sum over members of prod_k Q_k[row_k, j_k]^2
    score = np.zeros(m)
    for member in design.iset.members:
        term = np.ones(m)
        for k in range(q):
            term *= orths[k][rows[:, k], member[k]] ** 2
        score += term
    p = score / d

    sizes = np.array([f.shape[0] for f in design.factors], dtype=np.int64)
    flat = np.zeros(m, dtype=np.int64)
    for k in range(q):
        flat = flat * sizes[k] + rows[:, k]
    spec = SketchSpec(kind="leverage", m=m, seed=seed)
    return SketchOperator(spec=spec, n=design.n_rows, indices=flat,
                          weights=1.0 / np.sqrt(m * p))
