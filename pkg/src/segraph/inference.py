"""Composite pairwise score test: statistic, variance, p-values, and the
multiple-testing front ends (Bonferroni, half-sample stability).

Every edge quantity is evaluated with the shared coordinate of both node
estimates forced to zero; the statistic, variance, z-score and p-value
are identical for (j, k) and (k, j) by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .core import (
    NodeCoef,
    NodeProblem,
    coef_position,
    drop_coef,
    hajek_means,
    merge_node_coef,
)
from .dantzig import DEFAULT_LAMBDA_D, DantzigProblem, solve_dantzig
from .data import Dataset
from .errors import NumericalError, UsageError
from .penalties import PenaltySpec
from .solver import (
    NodeEstimate,
    SolverConfig,
    cross_validate,
    cv_choose,
    lambda_max,
    multistage_estimate,
)

DEGENERATE_VAR_TOL = 1e-12


def normal_cdf(x) -> float:
    return float(ndtr(x))


def normal_quantile(p) -> float:
    if not 0.0 < p < 1.0:
        raise UsageError(f"quantile argument must be in (0, 1), got {p}")
    return float(ndtri(p))


@dataclass(frozen=True)
class EdgeTest:
    edge: tuple
    s_hat: float
    sigma_hat: float
    z: float
    p_value: float
    reject: bool
    alpha: float
    degenerate: bool = False
    lambda_used: float | None = None


@dataclass
class GraphResult:
    adjacency: np.ndarray
    p_matrix: np.ndarray
    method: str
    alpha: float
    metadata: dict = field(default_factory=dict)
    edge_tests: list = field(default_factory=list)
    errors: list = field(default_factory=list)


@dataclass(frozen=True)
class InferenceConfig:
    """Estimation protocol feeding the tests.

    lam=None selects lambda by cross validation (shared between the nodes
    of an edge, and across all nodes in whole-graph testing).
    """

    penalty_family: str = "capped-l1"
    penalty_shape: float | None = None
    lam: float | None = None
    cv_folds: int = 10
    cv_grid_size: int = 50
    cv_seed: int = 0
    cv_rule: str = "min"
    lambda_d: float = DEFAULT_LAMBDA_D
    inner_tol: float = 1e-7
    inner_max_iter: int = 2000
    outer_max_stages: int = 10

    def solver_config(self, lam: float) -> SolverConfig:
        return SolverConfig(
            penalty=PenaltySpec(self.penalty_family, lam, self.penalty_shape),
            inner_tol=self.inner_tol,
            inner_max_iter=self.inner_max_iter,
            outer_max_stages=self.outer_max_stages,
        )


def score_statistic(data: Dataset, j: int, k: int, beta_hat_j: NodeCoef,
                    beta_hat_k: NodeCoef, w_jk: np.ndarray, w_kj: np.ndarray) -> float:
    """Symmetric decorrelated score for the shared edge coefficient.

    Both node gradients are evaluated with the shared coordinate zeroed.
    """
    if j > k:
        j, k = k, j
        beta_hat_j, beta_hat_k = beta_hat_k, beta_hat_j
        w_jk, w_kj = w_kj, w_jk
    gj = _zeroed_gradient(data, j, k, beta_hat_j)
    gk = _zeroed_gradient(data, k, j, beta_hat_k)
    pos_jk = coef_position(j, k)
    pos_kj = coef_position(k, j)
    return float(
        gj[pos_jk] + gk[pos_kj]
        - np.asarray(w_jk) @ np.delete(gj, pos_jk)
        - np.asarray(w_kj) @ np.delete(gk, pos_kj)
    )


def _zeroed_beta(d: int, j: int, k: int, beta_hat_j: NodeCoef) -> np.ndarray:
    return merge_node_coef(d, j, k, 0.0, drop_coef(beta_hat_j.beta, j, k))


def _zeroed_gradient(data: Dataset, j: int, k: int, beta_hat_j: NodeCoef) -> np.ndarray:
    beta = _zeroed_beta(data.d, j, k, beta_hat_j)
    return NodeProblem(data, j).gradient(beta)


def _stacked_zeroed(d: int, j: int, k: int, beta_hat_j: NodeCoef,
                    beta_hat_k: NodeCoef) -> np.ndarray:
    out = np.empty(2 * d - 3)
    out[0] = 0.0
    out[1 : d - 1] = drop_coef(beta_hat_j.beta, j, k)
    out[d - 1 :] = drop_coef(beta_hat_k.beta, k, j)
    return out


def kernel_covariance(data: Dataset, j: int, k: int, beta_hat_j: NodeCoef,
                      beta_hat_k: NodeCoef) -> np.ndarray:
    """Empirical covariance of the per-observation kernel projections,
    (2d-3) x (2d-3), at the zeroed stacked estimate."""
    if j > k:
        raise UsageError("kernel_covariance expects j < k")
    stacked = _stacked_zeroed(data.d, j, k, beta_hat_j, beta_hat_k)
    G = hajek_means(data, j, k, stacked)
    return G.T @ G / data.n


def variance_estimate(data: Dataset, j: int, k: int, beta_hat_j: NodeCoef,
                      beta_hat_k: NodeCoef, w_jk: np.ndarray, w_kj: np.ndarray,
                      sigma_big: np.ndarray | None = None) -> float:
    """Quadratic form v' Sigma v with v = (1, -w_jk, -w_kj) in stacked order."""
    if j > k:
        j, k = k, j
        beta_hat_j, beta_hat_k = beta_hat_k, beta_hat_j
        w_jk, w_kj = w_kj, w_jk
    if sigma_big is None:
        sigma_big = kernel_covariance(data, j, k, beta_hat_j, beta_hat_k)
    v = np.concatenate([[1.0], -np.asarray(w_jk, dtype=float),
                        -np.asarray(w_kj, dtype=float)])
    return float(v @ sigma_big @ v)


class _NodeCache:
    """Per-node estimates, problems, and Hessians reused across edges.

    The Hessian at the zeroed vector equals the Hessian at beta_hat when
    the shared coordinate is already zero, which is the common case.
    """

    def __init__(self, data: Dataset, config: InferenceConfig, lam: float):
        self.data = data
        self.config = config
        self.lam = lam
        self._problems: dict = {}
        self._estimates: dict = {}
        self._hessians: dict = {}

    def problem(self, j: int) -> NodeProblem:
        if j not in self._problems:
            self._problems[j] = NodeProblem(self.data, j)
        return self._problems[j]

    def estimate(self, j: int) -> NodeEstimate:
        if j not in self._estimates:
            cfg = self.config.solver_config(self.lam)
            prob = self.problem(j)
            from .solver import _multistage

            beta, stages, wtrace, otrace, conv = _multistage(prob, cfg)
            self._estimates[j] = NodeEstimate(
                node=j, beta_hat=NodeCoef(j, beta), lambda_used=self.lam,
                stages_run=stages, weight_trace=wtrace,
                objective_trace=otrace, converged=conv,
            )
        return self._estimates[j]

    def set_estimate(self, j: int, est: NodeEstimate):
        self._estimates[j] = est

    def zeroed_hessian(self, j: int, k: int) -> np.ndarray:
        est = self.estimate(j)
        already_zero = est.beta_hat.beta[coef_position(j, k)] == 0.0
        key = (j, None) if already_zero else (j, k)
        if key not in self._hessians:
            beta = _zeroed_beta(self.data.d, j, k, est.beta_hat)
            self._hessians[key] = self.problem(j).hessian(beta)
        return self._hessians[key]

    def dantzig_weights(self, j: int, k: int) -> np.ndarray:
        H = self.zeroed_hessian(j, k)
        pos = coef_position(j, k)
        keep = np.ones(self.data.d - 1, dtype=bool)
        keep[pos] = False
        prob = DantzigProblem(target_row=H[pos, keep], gram=H[np.ix_(keep, keep)],
                              lambda_d=self.config.lambda_d, edge=(j, k))
        return solve_dantzig(prob).w_hat


def _shared_lambda(data: Dataset, nodes, config: InferenceConfig) -> float:
    """CV lambda shared across the given nodes: common descending grid,
    fold losses summed over nodes before applying the selection rule."""
    lmax = max(lambda_max(data, j) for j in nodes)
    if config.cv_grid_size == 1:
        return lmax
    grid = np.geomspace(lmax, 0.01 * lmax, config.cv_grid_size)
    total = np.zeros((len(grid), config.cv_folds))
    cfg = config.solver_config(lmax)
    for j in nodes:
        cv = cross_validate(data, j, cfg, folds=config.cv_folds,
                            grid_size=config.cv_grid_size, seed=config.cv_seed,
                            lambda_grid=grid)
        total += cv.fold_losses
    return cv_choose(grid, total, config.cv_rule)


def _edge_test_from_cache(cache: _NodeCache, j: int, k: int, alpha: float) -> EdgeTest:
    data = cache.data
    bj = cache.estimate(j).beta_hat
    bk = cache.estimate(k).beta_hat
    w_jk = cache.dantzig_weights(j, k)
    w_kj = cache.dantzig_weights(k, j)
    s_hat = score_statistic(data, j, k, bj, bk, w_jk, w_kj)
    var = variance_estimate(data, j, k, bj, bk, w_jk, w_kj)
    var = max(var, 0.0)
    if var < DEGENERATE_VAR_TOL:
        warnings.warn(f"degenerate variance for edge ({j}, {k}); p-value forced to 1",
                      RuntimeWarning)
        return EdgeTest(edge=(j, k), s_hat=s_hat, sigma_hat=float(np.sqrt(var)),
                        z=0.0, p_value=1.0, reject=False, alpha=alpha,
                        degenerate=True, lambda_used=cache.lam)
    sigma = float(np.sqrt(var))
    z = float(np.sqrt(data.n) * s_hat / (2.0 * sigma))
    p = float(2.0 * (1.0 - ndtr(abs(z))))
    reject = bool(abs(z) > normal_quantile(1.0 - alpha / 2.0))
    return EdgeTest(edge=(j, k), s_hat=s_hat, sigma_hat=sigma, z=z, p_value=p,
                    reject=reject, alpha=alpha, lambda_used=cache.lam)


def edge_test(data: Dataset, j: int, k: int, alpha: float = 0.05,
              config: InferenceConfig = InferenceConfig(),
              cache: _NodeCache | None = None) -> EdgeTest:
    """Full test pipeline for one edge: node fits, decorrelation weights,
    studentized statistic, two-sided normal p-value."""
    if j == k:
        raise UsageError("an edge joins two distinct nodes")
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must be in (0, 1), got {alpha}")
    j, k = (j, k) if j < k else (k, j)
    if cache is None:
        lam = config.lam
        if lam is None:
            # shared lambda: CV on the canonical node, reused for both fits
            lam = _shared_lambda(data, [j], config)
        cache = _NodeCache(data, config, lam)
    return _edge_test_from_cache(cache, j, k, alpha)


def test_all_edges(data: Dataset, alpha: float = 0.05, correction: str = "bonferroni",
                   config: InferenceConfig = InferenceConfig()) -> GraphResult:
    """Test all d(d-1)/2 candidate edges; Bonferroni divides alpha by the
    number of pairs. Per-edge failures are recorded, not fatal."""
    if correction not in ("none", "bonferroni"):
        raise UsageError(f"correction must be none or bonferroni, got {correction!r}")
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must be in (0, 1), got {alpha}")
    d = data.d
    n_pairs = d * (d - 1) // 2
    level = alpha / n_pairs if correction == "bonferroni" else alpha
    lam = config.lam
    if lam is None:
        lam = _shared_lambda(data, range(d), config)
    cache = _NodeCache(data, config, lam)
    p_matrix = np.eye(d)
    adjacency = np.zeros((d, d), dtype=bool)
    tests = []
    failures = []
    for j in range(d):
        for k in range(j + 1, d):
            try:
                t = _edge_test_from_cache(cache, j, k, level)
            except NumericalError as exc:
                failures.append({"edge": (j, k), "error": str(exc)})
                p_matrix[j, k] = p_matrix[k, j] = 1.0
                continue
            tests.append(t)
            p_matrix[j, k] = p_matrix[k, j] = t.p_value
            adjacency[j, k] = adjacency[k, j] = t.reject
    return GraphResult(
        adjacency=adjacency, p_matrix=p_matrix,
        method="bonferroni" if correction == "bonferroni" else "single-test",
        alpha=alpha,
        metadata={"lambda": lam, "lambda_d": config.lambda_d,
                  "penalty": config.penalty_family, "per_test_level": level},
        edge_tests=tests, errors=failures,
    )


def stability_select(data: Dataset, alpha: float = 0.05, n_subsamples: int = 100,
                     keep_threshold: int = 90, seed=0,
                     config: InferenceConfig = InferenceConfig()) -> GraphResult:
    """Half-sample stability: rerun Bonferroni testing on subsamples of
    size n/2 and keep edges selected at least keep_threshold times."""
    if data.n < 4:
        raise UsageError("stability selection needs n >= 4")
    d = data.d
    rng = np.random.default_rng(seed)
    counts = np.zeros((d, d), dtype=int)
    half = data.n // 2
    errors = []
    for b in range(n_subsamples):
        rows = np.sort(rng.choice(data.n, size=half, replace=False))
        sub = data.subset_rows(rows)
        result = test_all_edges(sub, alpha=alpha, correction="bonferroni", config=config)
        counts += result.adjacency.astype(int)
        errors.extend({"subsample": b, **e} for e in result.errors)
    # threshold 0 means "ever selected", i.e. the union over subsamples
    adjacency = counts >= max(keep_threshold, 1)
    np.fill_diagonal(adjacency, False)
    freq = counts / n_subsamples
    p_matrix = 1.0 - freq
    np.fill_diagonal(p_matrix, 1.0)
    return GraphResult(
        adjacency=adjacency, p_matrix=p_matrix, method="stability", alpha=alpha,
        metadata={"n_subsamples": n_subsamples, "keep_threshold": keep_threshold,
                  "seed": seed, "selection_frequency": freq,
                  "p_matrix_is_one_minus_frequency": True},
        errors=errors,
    )
