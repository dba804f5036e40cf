"""High-dimensional Granger causality in levels VARs.

Public surface: panel ingestion and transforms, the lag-augmented
post-double-selection LM test, causal-network analytics, greenhouse-gas
forcing conversions, and a VAR simulator.
"""

from .errors import (
    CellParseError,
    ConvergenceError,
    HdgcError,
    InfeasibleTestError,
    MissingColumnError,
    NumericError,
    PathOverflowError,
    QueryError,
    SampleSizeError,
    ValidationError,
)
from .forcing import Gas, GasConcentrationRecord, concentration_to_forcing
from .network import (
    CausalNetwork,
    CommunityPartition,
    block_test,
    build_network,
    cycles_through,
    greedy_modularity_clusters,
    simple_paths,
)
from .panel import (
    DesignMatrices,
    LagSpec,
    TimeSeriesPanel,
    build_design,
    demean,
    difference,
    load_panel,
)
from .pdslm import (
    ErrorCovariance,
    GcQuery,
    PdsLmResult,
    SelectionRecord,
    chi2_quantile,
    f_quantile,
    pds_lm_test,
    select_lag_length,
    stationary_pds_lm,
)
from .regress import (
    LassoFit,
    OlsFit,
    adaptive_weights,
    lambda_path,
    lasso_bic,
    lasso_solve,
    ols,
)
from .simulate import (
    VarProcessSpec,
    make_gc_pair_spec,
    rejection_rate,
    simulate_var,
)

__version__ = "0.1.0"

__all__ = [
    "CausalNetwork",
    "CellParseError",
    "CommunityPartition",
    "ConvergenceError",
    "DesignMatrices",
    "ErrorCovariance",
    "Gas",
    "GasConcentrationRecord",
    "GcQuery",
    "HdgcError",
    "InfeasibleTestError",
    "LagSpec",
    "LassoFit",
    "MissingColumnError",
    "NumericError",
    "OlsFit",
    "PathOverflowError",
    "PdsLmResult",
    "QueryError",
    "SampleSizeError",
    "SelectionRecord",
    "TimeSeriesPanel",
    "ValidationError",
    "VarProcessSpec",
    "adaptive_weights",
    "block_test",
    "build_design",
    "build_network",
    "chi2_quantile",
    "concentration_to_forcing",
    "cycles_through",
    "demean",
    "difference",
    "f_quantile",
    "greedy_modularity_clusters",
    "lambda_path",
    "lasso_bic",
    "lasso_solve",
    "load_panel",
    "make_gc_pair_spec",
    "ols",
    "pds_lm_test",
    "rejection_rate",
    "select_lag_length",
    "simple_paths",
    "simulate_var",
    "stationary_pds_lm",
]
