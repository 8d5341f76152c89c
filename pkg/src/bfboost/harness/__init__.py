"""Experiment harness: synthetic problem families, experiment drivers, the
figure renderers, and the command-line entry point."""

from .experiments import (
    BOOST_SUMMARY_HEADER,
    BOOST_TRIAL_HEADER,
    BOUND_HEADER,
    CORR_SCATTER_HEADER,
    CORR_SUMMARY_HEADER,
    WICK_HEADER,
    ExperimentConfig,
    TrialRecord,
    WickCheck,
    boost_experiment,
    bound_experiment,
    corr_experiment,
    wick_convergence,
    wick_exact,
    wick_mc_check,
    write_csv,
    write_sidecar,
)
from .synthetic import SyntheticFamily, SyntheticSpec, synthetic_pair

__all__ = [
    "BOOST_SUMMARY_HEADER",
    "BOOST_TRIAL_HEADER",
    "BOUND_HEADER",
    "CORR_SCATTER_HEADER",
    "CORR_SUMMARY_HEADER",
    "WICK_HEADER",
    "ExperimentConfig",
    "SyntheticFamily",
    "SyntheticSpec",
    "TrialRecord",
    "WickCheck",
    "boost_experiment",
    "bound_experiment",
    "corr_experiment",
    "synthetic_pair",
    "wick_convergence",
    "wick_exact",
    "wick_mc_check",
    "write_csv",
    "write_sidecar",
]
