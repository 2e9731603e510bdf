"""First-order critical points with a budget of approximate Hessian queries."""
from ._accel import NUMBA_ENABLED, backend_name
from .agd import AGDParams, AGDResult, critical_or_progress
from .bounds import ComplexityInputs, predicted_queries, verify_tradeoff_lemma
from .dispatcher import DispatchDecision, decide, fd_pipeline, find_critical_point
from .errors import (
    ConfigError, ContractError, CritpointError, CsvFormatError, DimensionError,
    InvalidParameterError, InvariantViolation, NumericError, RegimeError, UnsupportedModeError,
)
from .families import FAMILIES, make_test_objective
from .oracle import HessianEstimate, HessianMode, Objective, QueryLedger, query_hessian_estimate
from .reduction import ReductionParams, RestrictedObjective, build_restricted, reduction_to_unbounded
from .restarted import RestartParams, SolverReport, restarted_agd
from .spectral import NormOperator, build_norm_operator, davis_kahan_check, phi, sym_eigendecomp

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "backend_name", "AGDParams", "AGDResult", "critical_or_progress",
    "ComplexityInputs", "predicted_queries", "verify_tradeoff_lemma", "DispatchDecision", "decide",
    "fd_pipeline", "find_critical_point", "ConfigError", "ContractError", "CritpointError",
    "CsvFormatError", "DimensionError", "InvalidParameterError", "InvariantViolation",
    "NumericError", "RegimeError", "UnsupportedModeError", "FAMILIES", "make_test_objective",
    "HessianEstimate", "HessianMode", "Objective", "QueryLedger", "query_hessian_estimate",
    "ReductionParams", "RestrictedObjective", "build_restricted", "reduction_to_unbounded",
    "RestartParams", "SolverReport", "restarted_agd", "NormOperator", "build_norm_operator",
    "davis_kahan_check", "phi", "sym_eigendecomp",
]
