"""Pairwise pseudo-likelihood loss, gradient, Hessian, and U-statistic kernels.

For node j the loss is the mean over observation pairs (i, i') of
log(1 + R) with R = exp(t) and t = -(x_ij - x_i'j) * beta^T (x_i\\j - x_i'\\j).
All evaluations go through softplus/logistic of t so nothing overflows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import UsageError


@dataclass(frozen=True)
class NodeCoef:
    """Coefficient vector beta_j, length d-1, canonical order k=0..d-1 skip j."""

    node: int
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1:
            raise UsageError("beta must be a vector")
        if not np.all(np.isfinite(beta)):
            raise UsageError("beta has non-finite entries")
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class PairIndexPlan:
    """Which (i, i') pairs enter the loss. Default: all n(n-1)/2 of them."""

    mode: str = "all-pairs"
    pair_count: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("all-pairs", "subsample"):
            raise UsageError(f"unknown pair plan mode {self.mode!r}")
        if self.mode == "subsample" and (self.pair_count is None or self.pair_count < 1):
            raise UsageError("subsample mode needs a positive pair_count")


ALL_PAIRS = PairIndexPlan()


def pair_indices(n: int, plan: PairIndexPlan = ALL_PAIRS):
    """Index arrays (ii, jj) with ii < jj, lexicographic order."""
    ii, jj = np.triu_indices(n, k=1)
    if plan.mode == "subsample":
        total = len(ii)
        m = min(plan.pair_count, total)
        rng = np.random.default_rng(plan.seed)
        keep = np.sort(rng.choice(total, size=m, replace=False))
        ii, jj = ii[keep], jj[keep]
    return ii, jj


def rest_indices(d: int, j: int) -> np.ndarray:
    """Variable indices in the canonical order of beta_j's coordinates."""
    return np.array([k for k in range(d) if k != j])


def coef_position(j: int, k: int) -> int:
    """Position of variable k inside beta_j's canonical coordinate order."""
    if j == k:
        raise UsageError("no self coordinate in a node coefficient vector")
    return k if k < j else k - 1


class NodeProblem:
    """Loss/gradient/Hessian for one node with pair differences precomputed.

    Reused across solver iterations; module-level wrappers construct one
    per call for one-shot evaluations.
    """

    def __init__(self, data: Dataset, node: int, plan: PairIndexPlan = ALL_PAIRS):
        if not 0 <= node < data.d:
            raise UsageError(f"node {node} out of range for d={data.d}")
        self.node = node
        self.d = data.d
        ii, jj = pair_indices(data.n, plan)
        diffs = data.values[ii] - data.values[jj]
        self.dj = diffs[:, node]
        self.drest = np.delete(diffs, node, axis=1)
        self.n_pairs = len(ii)

    def _exponent(self, beta: np.ndarray) -> np.ndarray:
        return -self.dj * (self.drest @ beta)

    def loss(self, beta: np.ndarray) -> float:
        t = self._exponent(beta)
        return float(np.logaddexp(0.0, t).sum() / self.n_pairs)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        t = self._exponent(beta)
        return -self.drest.T @ (expit(t) * self.dj) / self.n_pairs

    def loss_and_gradient(self, beta: np.ndarray):
        t = self._exponent(beta)
        loss = float(np.logaddexp(0.0, t).sum() / self.n_pairs)
        grad = -self.drest.T @ (expit(t) * self.dj) / self.n_pairs
        return loss, grad

    def hessian(self, beta: np.ndarray) -> np.ndarray:
        t = self._exponent(beta)
        s = expit(t)
        w = s * (1.0 - s) * self.dj**2 / self.n_pairs
        return self.drest.T @ (self.drest * w[:, None])

    def hessian_matvec(self, beta: np.ndarray):
        """Returns v -> hessian(beta) @ v without forming the matrix."""
        t = self._exponent(beta)
        s = expit(t)
        w = s * (1.0 - s) * self.dj**2 / self.n_pairs

        def matvec(v):
            return self.drest.T @ (w * (self.drest @ v))

        return matvec


def _check_node_coef(j: int, beta: NodeCoef, d: int):
    if beta.node != j:
        raise UsageError(f"coefficient vector is for node {beta.node}, not {j}")
    if len(beta.beta) != d - 1:
        raise UsageError(f"beta has length {len(beta.beta)}, expected {d - 1}")


def residual_ratio(data: Dataset, j: int, pair, beta: NodeCoef) -> float:
    """The odds ratio R for one pair: exp of the pairwise interaction contrast."""
    i, ip = pair
    if i == ip:
        raise UsageError("pair indices must differ")
    _check_node_coef(j, beta, data.d)
    diff = data.values[i] - data.values[ip]
    t = -diff[j] * float(np.delete(diff, j) @ beta.beta)
    return float(np.exp(t))


def node_loss(data: Dataset, j: int, beta: NodeCoef, plan: PairIndexPlan = ALL_PAIRS) -> float:
    _check_node_coef(j, beta, data.d)
    return NodeProblem(data, j, plan).loss(beta.beta)


def node_gradient(data: Dataset, j: int, beta: NodeCoef, plan: PairIndexPlan = ALL_PAIRS) -> np.ndarray:
    _check_node_coef(j, beta, data.d)
    return NodeProblem(data, j, plan).gradient(beta.beta)


def node_hessian(data: Dataset, j: int, beta: NodeCoef, plan: PairIndexPlan = ALL_PAIRS) -> np.ndarray:
    _check_node_coef(j, beta, data.d)
    return NodeProblem(data, j, plan).hessian(beta.beta)


def grad_kernel(data: Dataset, j: int, pair, beta: NodeCoef) -> np.ndarray:
    """Single-pair gradient kernel h; the pair mean of h is node_gradient."""
    i, ip = pair
    if i == ip:
        raise UsageError("pair indices must differ")
    _check_node_coef(j, beta, data.d)
    diff = data.values[i] - data.values[ip]
    drest = np.delete(diff, j)
    t = -diff[j] * float(drest @ beta.beta)
    return -expit(t) * diff[j] * drest


def split_stacked(beta_jvk: np.ndarray, d: int):
    """Split (beta_jk, beta_j\\k, beta_k\\j) into its three blocks."""
    beta_jvk = np.asarray(beta_jvk, dtype=float)
    if len(beta_jvk) != 2 * d - 3:
        raise UsageError(f"stacked vector has length {len(beta_jvk)}, expected {2 * d - 3}")
    return beta_jvk[0], beta_jvk[1 : d - 1], beta_jvk[d - 1 :]


def merge_node_coef(d: int, j: int, k: int, beta_jk: float, beta_j_minus_k: np.ndarray) -> np.ndarray:
    """Assemble the full length d-1 coefficient vector of node j from the
    shared coordinate and the k-free block."""
    beta = np.empty(d - 1)
    pos = coef_position(j, k)
    beta[pos] = beta_jk
    mask = np.ones(d - 1, dtype=bool)
    mask[pos] = False
    beta[mask] = beta_j_minus_k
    return beta


def drop_coef(beta: np.ndarray, j: int, k: int) -> np.ndarray:
    """beta_j\\k: beta_j with the shared coordinate removed."""
    return np.delete(beta, coef_position(j, k))


def stacked_kernel(data: Dataset, j: int, k: int, pair, beta_jvk: np.ndarray) -> np.ndarray:
    """Kernel of the joint two-node gradient, stacked as (jk, j\\k, k\\j).

    The jk entry sums the two node kernels' shared coordinate; the blocks
    are the respective node kernels with that coordinate removed.
    """
    if j == k:
        raise UsageError("need two distinct nodes")
    d = data.d
    beta_jk, bj_rest, bk_rest = split_stacked(beta_jvk, d)
    beta_j = NodeCoef(j, merge_node_coef(d, j, k, beta_jk, bj_rest))
    beta_k = NodeCoef(k, merge_node_coef(d, k, j, beta_jk, bk_rest))
    hj = grad_kernel(data, j, pair, beta_j)
    hk = grad_kernel(data, k, pair, beta_k)
    out = np.empty(2 * d - 3)
    out[0] = hj[coef_position(j, k)] + hk[coef_position(k, j)]
    out[1 : d - 1] = np.delete(hj, coef_position(j, k))
    out[d - 1 :] = np.delete(hk, coef_position(k, j))
    return out


def hajek_means(data: Dataset, j: int, k: int, beta_jvk: np.ndarray) -> np.ndarray:
    """Per-observation inner means of the stacked kernel.

    Row i is (n-1)^-1 sum over i' != i of the stacked kernel for (i, i').
    Memory stays O(n d): the kernel tensor is never materialized.
    """
    if j == k:
        raise UsageError("need two distinct nodes")
    d = data.d
    n = data.n
    beta_jk, bj_rest, bk_rest = split_stacked(beta_jvk, d)
    beta_j = merge_node_coef(d, j, k, beta_jk, bj_rest)
    beta_k = merge_node_coef(d, k, j, beta_jk, bk_rest)
    pos_jk = coef_position(j, k)
    pos_kj = coef_position(k, j)
    X = data.values
    out = np.empty((n, 2 * d - 3))
    for i in range(n):
        diffs = X[i] - X
        dr_j = np.delete(diffs, j, axis=1)
        dr_k = np.delete(diffs, k, axis=1)
        tj = -diffs[:, j] * (dr_j @ beta_j)
        tk = -diffs[:, k] * (dr_k @ beta_k)
        # the i'=i row is exactly zero, so summing all rows is safe
        hj = -(expit(tj) * diffs[:, j])[:, None] * dr_j
        hk = -(expit(tk) * diffs[:, k])[:, None] * dr_k
        sj = hj.sum(axis=0)
        sk = hk.sum(axis=0)
        out[i, 0] = sj[pos_jk] + sk[pos_kj]
        out[i, 1 : d - 1] = np.delete(sj, pos_jk)
        out[i, d - 1 :] = np.delete(sk, pos_kj)
    out /= n - 1
    return out


_SPARSE_EIG_MAX_DIM = 20


def sparse_eigenvalue_bounds(H: np.ndarray, s: int):
    """Extreme eigenvalues of H over all s x s principal submatrices.

    Brute force over C(m, s) supports; refused above dimension 20.
    """
    H = np.asarray(H, dtype=float)
    m = H.shape[0]
    if H.shape != (m, m) or not np.allclose(H, H.T, atol=1e-12):
        raise UsageError("H must be symmetric")
    if m > _SPARSE_EIG_MAX_DIM:
        raise UsageError(
            f"dimension {m} exceeds the brute-force limit {_SPARSE_EIG_MAX_DIM}"
        )
    if not 1 <= s <= m:
        raise UsageError(f"support size {s} out of range [1, {m}]")
    rho_minus = np.inf
    rho_plus = -np.inf
    for support in itertools.combinations(range(m), s):
        idx = np.array(support)
        eig = np.linalg.eigvalsh(H[np.ix_(idx, idx)])
        rho_minus = min(rho_minus, eig[0])
        rho_plus = max(rho_plus, eig[-1])
    return float(rho_minus), float(rho_plus)
