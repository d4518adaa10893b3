"""Semiparametric exponential-family graphical models: nuisance-free
pairwise loss, nonconvex penalized node estimation, and symmetric
composite score tests with calibrated edge p-values."""

from .core import (
    NodeCoef,
    PairIndexPlan,
    grad_kernel,
    node_gradient,
    node_hessian,
    node_loss,
    residual_ratio,
    sparse_eigenvalue_bounds,
    stacked_kernel,
)
from .data import Dataset, load_csv, save_csv
from .dantzig import DantzigProblem, DantzigSolution, hessian_blocks, solve_dantzig
from .errors import DataError, NumericalError, SegraphError, UsageError
from .inference import (
    EdgeTest,
    GraphResult,
    InferenceConfig,
    edge_test,
    normal_cdf,
    normal_quantile,
    score_statistic,
    stability_select,
    test_all_edges,
    variance_estimate,
)
from .penalties import PenaltySpec, check_penalty_conditions, penalty_rderiv, penalty_value
from .samplers import (
    GaussianSpec,
    GibbsConfig,
    IsingSpec,
    MixedSpec,
    build_precision,
    ising_exact_distribution,
    sample_gaussian,
    sample_ising,
    sample_mixed,
)
from .solver import (
    CvResult,
    NodeEstimate,
    SolverConfig,
    cross_validate,
    estimate_graph,
    lambda_max,
    multistage_estimate,
    solve_weighted_l1,
)

__version__ = "0.1.0"
