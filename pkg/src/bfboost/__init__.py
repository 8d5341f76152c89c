"""Sketched least squares with bi-fidelity boosted sketch selection."""

from .boost import (
    BoostResult,
    CorrelationMetrics,
    FidelityPair,
    boost_penalty,
    correlation_metrics,
    gaussian_corr_lower_bounds,
    nu_lower_bounds,
    optimality_gap_bound,
    oracle_index,
    relative_error,
    run_bfb,
)
from .design import (
    IndexSet,
    QuadratureRule1D,
    StructuredDesign,
    assemble_data_vector,
    build_design,
    exact_row_distribution,
    gauss_legendre_rule,
    index_set,
    kron_leverage_sample,
    normalized_legendre,
)
from .errors import (
    BfbError,
    DegenerateDataError,
    FullVectorRequiredError,
    MemoryCapError,
    RankDeficiencyError,
    SamplingFailureError,
)
from .linalg import (
    LeastSquaresSolution,
    OrthoBasis,
    ResidualDecomposition,
    optimality_coefficient,
    orthonormal_basis,
    residual_decomposition,
    solve_full_ls,
    solve_sketched_ls,
)
from .oracle import EntryOracle
from .sketch import (
    GAUSSIAN_SUBGAUSS_NORM,
    LeverageProfile,
    PairConditionReport,
    SketchOperator,
    SketchSpec,
    apply_sketch,
    cpqr_sketch,
    gaussian_sketch,
    leverage_profile,
    leverage_sketch,
    leveraged_volume_sketch,
    min_embedding_dim,
    pair_condition_check,
    sketch_from_json,
    sketch_to_json,
    uniform_sketch,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
