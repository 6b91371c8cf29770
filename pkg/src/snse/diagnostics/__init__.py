"""Empirical checks of the operator inequalities and of the stochastic Galerkin scheme."""

from .corpus import decay_corpus, dirichlet_profile, gn_corpus, uniform_corpus
from .operators import (
    cancellation_check,
    energy_functional,
    gn_ratio,
    gn_study,
    identity_suite,
    loglog_slope,
    operator_decay_study,
    predicted_alpha,
    uniform_bound_study,
)
from .reports import ConvergenceReport, EnergyReport, EnsembleStats, VerificationReport, rows_to_csv
from .stochastic import (
    FUNCTIONALS,
    CoupledRun,
    cauchy_study,
    coupled_run,
    energy_bound_study,
    ensemble_expectation,
    merge_records,
    ou_check,
    path_functional,
    run_ensemble,
    strong_order_study,
    tail_study,
    uniqueness_check,
    until,
)

__all__ = [
    "FUNCTIONALS",
    "ConvergenceReport",
    "CoupledRun",
    "EnergyReport",
    "EnsembleStats",
    "VerificationReport",
    "cancellation_check",
    "cauchy_study",
    "coupled_run",
    "decay_corpus",
    "dirichlet_profile",
    "energy_bound_study",
    "energy_functional",
    "ensemble_expectation",
    "gn_corpus",
    "gn_ratio",
    "gn_study",
    "identity_suite",
    "loglog_slope",
    "merge_records",
    "operator_decay_study",
    "ou_check",
    "path_functional",
    "predicted_alpha",
    "rows_to_csv",
    "run_ensemble",
    "strong_order_study",
    "tail_study",
    "uniform_bound_study",
    "uniform_corpus",
    "uniqueness_check",
    "until",
]
