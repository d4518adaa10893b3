"""Minimum-l1 projection weights under an infinity-norm Hessian constraint.

For an edge (j, k) the target is the jk row of the node-j Hessian
(restricted to the k-free coordinates) and the gram matrix is the k-free
principal block, both evaluated with the shared coordinate forced to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import NodeCoef, NodeProblem, coef_position, merge_node_coef, drop_coef
from .data import Dataset
from .errors import NumericalError, UsageError

DEFAULT_LAMBDA_D = 0.2
FEAS_TOL = 1e-6


@dataclass(frozen=True)
class DantzigProblem:
    target_row: np.ndarray
    gram: np.ndarray
    lambda_d: float = DEFAULT_LAMBDA_D
    edge: tuple | None = None

    def __post_init__(self):
        target = np.asarray(self.target_row, dtype=float)
        gram = np.asarray(self.gram, dtype=float)
        m = len(target)
        if gram.shape != (m, m):
            raise UsageError(f"gram shape {gram.shape} inconsistent with target length {m}")
        if m and not np.allclose(gram, gram.T, atol=1e-10):
            raise UsageError("gram must be symmetric")
        if not self.lambda_d > 0:
            raise UsageError("lambda_d must be positive")
        object.__setattr__(self, "target_row", target)
        object.__setattr__(self, "gram", gram)


@dataclass(frozen=True)
class DantzigSolution:
    w_hat: np.ndarray
    feasibility_gap: float
    l1_norm: float


def hessian_blocks(data: Dataset, j: int, k: int, beta_hat_j: NodeCoef,
                   lambda_d: float = DEFAULT_LAMBDA_D) -> DantzigProblem:
    """Target row and gram block of the node-j Hessian at the zeroed estimate."""
    if j == k:
        raise UsageError("need two distinct nodes")
    d = data.d
    beta = merge_node_coef(d, j, k, 0.0, drop_coef(beta_hat_j.beta, j, k))
    H = NodeProblem(data, j).hessian(beta)
    pos = coef_position(j, k)
    keep = np.ones(d - 1, dtype=bool)
    keep[pos] = False
    target = H[pos, keep]
    gram = H[np.ix_(keep, keep)]
    return DantzigProblem(target_row=target, gram=gram, lambda_d=lambda_d, edge=(j, k))


def solve_dantzig(p: DantzigProblem) -> DantzigSolution:
    """Minimize ||w||_1 subject to ||target - gram @ w||_inf <= lambda_d.

    Exact LP via the split w = u - v with u, v >= 0.
    """
    m = len(p.target_row)
    if m == 0:
        return DantzigSolution(w_hat=np.zeros(0), feasibility_gap=-p.lambda_d, l1_norm=0.0)
    if np.max(np.abs(p.target_row)) <= p.lambda_d:
        # zero is feasible and has the minimal possible l1 norm
        gap = float(np.max(np.abs(p.target_row)) - p.lambda_d)
        return DantzigSolution(w_hat=np.zeros(m), feasibility_gap=gap, l1_norm=0.0)
    G = p.gram
    # gram @ w within [target - lambda_d, target + lambda_d]
    A_ub = np.block([[G, -G], [-G, G]])
    b_ub = np.concatenate([p.target_row + p.lambda_d, p.lambda_d - p.target_row])
    res = linprog(c=np.ones(2 * m), A_ub=A_ub, b_ub=b_ub,
                  bounds=(0, None), method="highs")
    if not res.success:
        edge = f" for edge {p.edge}" if p.edge is not None else ""
        raise NumericalError(
            f"Dantzig LP failed{edge}: {res.message} (status {res.status})"
        )
    w = res.x[:m] - res.x[m:]
    gap = float(np.max(np.abs(p.target_row - G @ w)) - p.lambda_d)
    if gap > FEAS_TOL:
        edge = f" for edge {p.edge}" if p.edge is not None else ""
        raise NumericalError(f"Dantzig LP solution infeasible{edge}: gap {gap:.2e}")
    return DantzigSolution(w_hat=w, feasibility_gap=gap,
                           l1_norm=float(np.abs(w).sum()))
