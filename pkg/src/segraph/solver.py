"""Weighted-l1 inner solver, the multi-stage reweighting loop, CV, and
whole-graph estimation.

The inner solver is accelerated proximal gradient (FISTA) with
backtracking and restart on objective increase; each outer stage
re-solves with weights set to the penalty's right derivative at the
previous stage's coefficient magnitudes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ALL_PAIRS, NodeCoef, NodeProblem, PairIndexPlan
from .data import Dataset
from .errors import UsageError
from .penalties import PenaltySpec, penalty_rderiv, penalty_value


@dataclass(frozen=True)
class SolverConfig:
    penalty: PenaltySpec
    inner_tol: float = 1e-7
    inner_max_iter: int = 2000
    outer_max_stages: int = 10
    kkt_tol: float = 1e-5

    def __post_init__(self):
        if self.inner_tol <= 0 or self.kkt_tol <= 0:
            raise UsageError("tolerances must be positive")
        if self.outer_max_stages < 1:
            raise UsageError("need at least one stage")

    @property
    def lam(self) -> float:
        return self.penalty.lam

    def with_lambda(self, lam: float) -> "SolverConfig":
        return replace(self, penalty=self.penalty.with_lambda(lam))


@dataclass
class NodeEstimate:
    node: int
    beta_hat: NodeCoef
    lambda_used: float
    stages_run: int
    weight_trace: list
    objective_trace: list
    converged: bool = True


@dataclass
class CvResult:
    lambda_grid: np.ndarray
    fold_losses: np.ndarray  # (grid, folds)
    lambda_star: float


@dataclass
class GraphEstimate:
    node_estimates: list
    adjacency: np.ndarray
    symmetrize: str


def soft_threshold(x: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def _spectral_norm_estimate(matvec, dim: int, iters: int = 10) -> float:
    """Power iteration on a symmetric PSD operator."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        lam = nw
        v = w / nw
    return float(lam)


def kkt_gap(grad: np.ndarray, weights: np.ndarray, beta: np.ndarray) -> float:
    """Max stationarity violation of the weighted-l1 first-order conditions."""
    active = beta != 0
    gap = 0.0
    if np.any(active):
        gap = float(np.max(np.abs(grad[active] + weights[active] * np.sign(beta[active]))))
    if np.any(~active):
        gap = max(gap, float(np.max(np.abs(grad[~active]) - weights[~active])))
    return gap


def _solve_weighted_l1(prob: NodeProblem, weights: np.ndarray, init: np.ndarray,
                       cfg: SolverConfig):
    """FISTA on loss + sum_k weights_k |beta_k|. Returns (beta, info)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (prob.d - 1,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise UsageError("weights must be a finite nonnegative vector of length d-1")
    x = np.array(init, dtype=float)
    L = _spectral_norm_estimate(prob.hessian_matvec(x), prob.d - 1)
    step = 1.0 / max(L, 1e-12)
    y = x.copy()
    tk = 1.0
    fx = prob.loss(x)
    obj = fx + float(weights @ np.abs(x))
    converged = False
    it = 0
    for it in range(1, cfg.inner_max_iter + 1):
        fy, gy = prob.loss_and_gradient(y)
        # backtracking on the quadratic upper bound at y
        while True:
            x_new = soft_threshold(y - step * gy, step * weights)
            delta = x_new - y
            f_new = prob.loss(x_new)
            if f_new <= fy + gy @ delta + (delta @ delta) / (2 * step) + 1e-12:
                break
            step *= 0.5
            if step < 1e-18:
                break
        obj_new = f_new + float(weights @ np.abs(x_new))
        if obj_new > obj + 1e-12:
            # restart acceleration from the last accepted iterate
            y = x.copy()
            tk = 1.0
            continue
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * tk**2)) / 2.0
        y = x_new + ((tk - 1.0) / t_next) * (x_new - x)
        x, tk = x_new, t_next
        rel_change = abs(obj - obj_new) / max(1.0, abs(obj_new))
        obj = obj_new
        if rel_change <= cfg.inner_tol:
            if kkt_gap(prob.gradient(x), weights, x) <= cfg.kkt_tol:
                converged = True
                break
    gap = kkt_gap(prob.gradient(x), weights, x)
    if not converged and gap > cfg.kkt_tol:
        warnings.warn(
            f"weighted-l1 solve for node {prob.node} stopped after {it} "
            f"iterations with KKT gap {gap:.2e}",
            RuntimeWarning,
        )
    return x, {"iterations": it, "kkt_gap": gap, "converged": converged or gap <= cfg.kkt_tol,
               "objective": obj}


def solve_weighted_l1(data: Dataset, j: int, weights, init: NodeCoef,
                      cfg: SolverConfig, plan: PairIndexPlan = ALL_PAIRS) -> NodeCoef:
    """Minimize the node loss plus a weighted l1 penalty."""
    prob = NodeProblem(data, j, plan)
    beta, _ = _solve_weighted_l1(prob, weights, init.beta, cfg)
    return NodeCoef(j, beta)


def _multistage(prob: NodeProblem, cfg: SolverConfig, init: np.ndarray | None = None):
    pen = cfg.penalty
    dim = prob.d - 1
    weights = np.full(dim, pen.lam)
    beta = np.zeros(dim) if init is None else np.array(init, dtype=float)
    weight_trace = []
    objective_trace = []
    converged = True
    stages = 0
    for _ in range(cfg.outer_max_stages):
        stages += 1
        weight_trace.append(weights.copy())
        beta, info = _solve_weighted_l1(prob, weights, beta, cfg)
        converged = converged and info["converged"]
        objective_trace.append(
            prob.loss(beta) + float(np.sum(penalty_value(pen, np.abs(beta))))
        )
        new_weights = np.asarray(penalty_rderiv(pen, np.abs(beta)), dtype=float)
        if np.array_equal(new_weights, weights):
            break
        weights = new_weights
    return beta, stages, weight_trace, objective_trace, converged


def multistage_estimate(data: Dataset, j: int, cfg: SolverConfig,
                        plan: PairIndexPlan = ALL_PAIRS) -> NodeEstimate:
    """Multi-stage convex relaxation for one node: stage 1 is the uniform
    l1 solve, later stages reweight by the penalty's right derivative."""
    prob = NodeProblem(data, j, plan)
    beta, stages, wtrace, otrace, converged = _multistage(prob, cfg)
    return NodeEstimate(
        node=j,
        beta_hat=NodeCoef(j, beta),
        lambda_used=cfg.lam,
        stages_run=stages,
        weight_trace=wtrace,
        objective_trace=otrace,
        converged=converged,
    )


def lambda_max(data: Dataset, j: int, plan: PairIndexPlan = ALL_PAIRS) -> float:
    """Smallest uniform weight level at which 0 solves the penalized problem."""
    prob = NodeProblem(data, j, plan)
    grad0 = prob.gradient(np.zeros(prob.d - 1))
    return float(np.max(np.abs(grad0)))


def fold_assignment(n: int, folds: int, seed) -> np.ndarray:
    """Deterministic fold labels: seeded permutation split round-robin."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    labels = np.empty(n, dtype=int)
    labels[perm] = np.arange(n) % folds
    return labels


def lambda_grid_for(data: Dataset, j: int, grid_size: int,
                    min_ratio: float = 0.01) -> np.ndarray:
    lmax = lambda_max(data, j)
    if lmax <= 0:
        raise UsageError(f"node {j} has a zero gradient at 0; nothing to regularize")
    if grid_size == 1:
        return np.array([lmax])
    return np.geomspace(lmax, min_ratio * lmax, grid_size)


def cv_choose(grid: np.ndarray, losses: np.ndarray, rule: str) -> float:
    """Pick lambda from CV fold losses.

    "min" takes the mean-loss minimizer; "1se" takes the largest lambda
    whose mean loss is within one standard error of the minimum. The grid
    is descending, so ties and the 1se scan both prefer larger lambda.
    """
    if rule not in ("min", "1se"):
        raise UsageError(f"cv rule must be min or 1se, got {rule!r}")
    means = losses.mean(axis=1)
    if rule == "min":
        return float(grid[int(np.argmin(means))])
    imin = int(np.argmin(means))
    se = losses[imin].std(ddof=1) / np.sqrt(losses.shape[1])
    return float(grid[int(np.flatnonzero(means <= means[imin] + se)[0])])


def cross_validate(data: Dataset, j: int, cfg: SolverConfig, folds: int = 10,
                   grid_size: int = 50, seed=0, lambda_grid=None,
                   rule: str = "min") -> CvResult:
    """Select lambda for one node by K-fold CV on the held-out pair loss.

    Validation pairs are drawn entirely within the held-out rows. Ties
    prefer the larger lambda (the grid is descending, argmin takes the
    first minimizer).
    """
    n = data.n
    if n < 2 * folds:
        raise UsageError(f"need n >= 2*folds, got n={n}, folds={folds}")
    if lambda_grid is None:
        grid = lambda_grid_for(data, j, grid_size)
    else:
        grid = np.sort(np.asarray(lambda_grid, dtype=float))[::-1]
    labels = fold_assignment(n, folds, seed)
    losses = np.empty((len(grid), folds))
    for f in range(folds):
        train = data.subset_rows(np.where(labels != f)[0])
        valid_rows = np.where(labels == f)[0]
        if len(valid_rows) < 2:
            raise UsageError(f"fold {f} has fewer than 2 rows")
        valid = data.subset_rows(valid_rows)
        train_prob = NodeProblem(train, j)
        valid_prob = NodeProblem(valid, j)
        beta = np.zeros(data.d - 1)
        for gi, lam in enumerate(grid):
            stage_cfg = cfg.with_lambda(float(lam))
            beta, *_ = _multistage(train_prob, stage_cfg, init=beta)
            losses[gi, f] = valid_prob.loss(beta)
    lambda_star = cv_choose(grid, losses, rule)
    return CvResult(lambda_grid=grid, fold_losses=losses, lambda_star=lambda_star)


def estimate_graph(data: Dataset, cfg: SolverConfig, symmetrize: str = "AND",
                   lambdas=None, plan: PairIndexPlan = ALL_PAIRS) -> GraphEstimate:
    """Node-wise multi-stage estimation plus support symmetrization.

    lambdas optionally overrides cfg's lambda per node (shared lambda is
    the default: every node uses cfg.penalty.lam).
    """
    if symmetrize not in ("AND", "OR"):
        raise UsageError(f"symmetrize must be AND or OR, got {symmetrize!r}")
    d = data.d
    estimates = []
    support = np.zeros((d, d), dtype=bool)
    for j in range(d):
        node_cfg = cfg if lambdas is None else cfg.with_lambda(float(lambdas[j]))
        est = multistage_estimate(data, j, node_cfg, plan)
        estimates.append(est)
        rest = [k for k in range(d) if k != j]
        support[j, rest] = est.beta_hat.beta != 0
    if symmetrize == "AND":
        adjacency = support & support.T
    else:
        adjacency = support | support.T
    return GraphEstimate(node_estimates=estimates, adjacency=adjacency,
                         symmetrize=symmetrize)
