"""Seeded generators for the three simulation designs plus exact
small-graph oracles.

All samplers are pure functions of (spec, n, seed/config); the PRNG is
numpy's PCG64 via default_rng, a named, documented algorithm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import NumericalError, UsageError


@dataclass(frozen=True)
class GaussianSpec:
    """Circulant 4-nearest-neighbor precision pattern: unit diagonal,
    coupling mu at index distance 1, 2, d-2, d-1."""

    d: int
    mu: float

    def __post_init__(self):
        if self.d < 5:
            raise UsageError("need d >= 5 for the 4-nearest-neighbor pattern")
        if not 0.0 <= self.mu <= 0.25:
            raise UsageError(
                f"mu must be in [0, 0.25] to keep the precision positive "
                f"definite, got {self.mu}"
            )


@dataclass(frozen=True)
class GibbsConfig:
    burn_in: int = 1000
    thin: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1:
            raise UsageError("need burn_in >= 0 and thin >= 1")


@dataclass(frozen=True)
class IsingSpec:
    """Grid Ising model on {0,1} nodes with coupling magnitude mu."""

    rows: int
    cols: int
    mu: float
    random_signs: bool = False
    sign_seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise UsageError("grid must contain at least two nodes")

    @property
    def d(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class MixedSpec:
    """Two grid layers: binary nodes in layer 1, Gaussian nodes (unit
    conditional variance) in layer 2; edges along the rows x cols x 2 grid."""

    rows: int
    cols: int
    mu: float
    random_signs: bool = False
    sign_seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise UsageError("grid dimensions must be positive")

    @property
    def d(self) -> int:
        return 2 * self.rows * self.cols


def build_precision(spec: GaussianSpec) -> np.ndarray:
    """Exact circulant 4-NN precision matrix; positive definite by
    diagonal dominance, verified by factorization."""
    d = spec.d
    theta = np.eye(d)
    for j in range(d):
        for k in range(d):
            if j != k and min(abs(j - k), d - abs(j - k)) in (1, 2):
                theta[j, k] = spec.mu
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        raise NumericalError("precision matrix is not positive definite") from None
    return theta


def gaussian_truth_edges(spec: GaussianSpec):
    """Edge list (j < k) of the 4-NN pattern (circulant distance 1 or 2)."""
    d = spec.d
    return [(j, k) for j in range(d) for k in range(j + 1, d)
            if min(k - j, d - (k - j)) in (1, 2)]


def sample_gaussian(theta: np.ndarray, n: int, seed=0) -> Dataset:
    """n i.i.d. rows from N(0, theta^-1) via a Cholesky factor of the
    covariance."""
    theta = np.asarray(theta, dtype=float)
    try:
        sigma = np.linalg.inv(theta)
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NumericalError("precision matrix must be positive definite") from None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, theta.shape[0]))
    return Dataset(z @ chol.T)


def grid_edges(rows: int, cols: int):
    """Edges of a rows x cols lattice, nodes numbered row-major."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            j = r * cols + c
            if c + 1 < cols:
                edges.append((j, j + 1))
            if r + 1 < rows:
                edges.append((j, j + cols))
    return edges


def _signed_couplings(edges, mu: float, random_signs: bool, sign_seed: int, d: int):
    theta = np.zeros((d, d))
    signs = np.ones(len(edges))
    if random_signs:
        rng = np.random.default_rng(sign_seed)
        signs = rng.choice([-1.0, 1.0], size=len(edges))
    for (j, k), s in zip(edges, signs):
        theta[j, k] = theta[k, j] = s * mu
    return theta


def ising_theta(spec: IsingSpec) -> np.ndarray:
    """Symmetric coupling matrix of the grid Ising model."""
    return _signed_couplings(grid_edges(spec.rows, spec.cols), spec.mu,
                             spec.random_signs, spec.sign_seed, spec.d)


def ising_truth_edges(spec: IsingSpec):
    return grid_edges(spec.rows, spec.cols)


def _logistic(s: float) -> float:
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def sample_ising(spec: IsingSpec, n: int, cfg: GibbsConfig = GibbsConfig()) -> Dataset:
    """Systematic-scan Gibbs on {0,1}^d with logistic single-site
    conditionals; burn-in and thinning per cfg."""
    theta = ising_theta(spec)
    d = spec.d
    rng = np.random.default_rng(cfg.seed)
    x = (rng.random(d) < 0.5).astype(float)
    kept = np.empty((n, d))
    total = cfg.burn_in + n * cfg.thin
    kept_count = 0
    rows = list(theta)
    for sweep in range(total):
        u = rng.random(d)
        for j in range(d):
            x[j] = 1.0 if u[j] < _logistic(rows[j] @ x) else 0.0
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == cfg.thin - 1:
            kept[kept_count] = x
            kept_count += 1
    assert kept_count == n
    return Dataset(kept)


_EXACT_MAX_DIM = 15


def ising_exact_distribution(spec: IsingSpec):
    """Exact joint over {0,1}^d by enumeration (d <= 15).

    Returns (states, probs): a (2^d, d) state matrix and matching
    probability vector summing to 1.
    """
    d = spec.d
    if d > _EXACT_MAX_DIM:
        raise UsageError(f"exact enumeration refused for d={d} > {_EXACT_MAX_DIM}")
    theta = ising_theta(spec)
    states = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    # energy sum_{j<k} theta_jk x_j x_k = x' theta x / 2 for symmetric theta
    log_w = 0.5 * np.einsum("sj,jk,sk->s", states, theta, states)
    log_w -= log_w.max()
    probs = np.exp(log_w)
    probs /= probs.sum()
    return states, probs


def mixed_theta(spec: MixedSpec) -> np.ndarray:
    """Coupling matrix of the two-layer grid: in-layer lattice edges plus
    one cross-layer edge per grid position. Binary nodes occupy the first
    rows*cols columns, Gaussian nodes the rest."""
    per_layer = spec.rows * spec.cols
    edges = []
    for (j, k) in grid_edges(spec.rows, spec.cols):
        edges.append((j, k))
        edges.append((j + per_layer, k + per_layer))
    for j in range(per_layer):
        edges.append((j, j + per_layer))
    return _signed_couplings(edges, spec.mu, spec.random_signs, spec.sign_seed, spec.d)


def mixed_truth_edges(spec: MixedSpec):
    theta = mixed_theta(MixedSpec(spec.rows, spec.cols, 1.0))
    d = spec.d
    return [(j, k) for j in range(d) for k in range(j + 1, d) if theta[j, k] != 0.0]


def sample_mixed(spec: MixedSpec, n: int, cfg: GibbsConfig = GibbsConfig()) -> Dataset:
    """Gibbs scan alternating logistic updates on the binary layer and
    conditional-normal updates (unit variance) on the Gaussian layer."""
    theta = mixed_theta(spec)
    d = spec.d
    per_layer = spec.rows * spec.cols
    rng = np.random.default_rng(cfg.seed)
    x = np.zeros(d)
    x[:per_layer] = (rng.random(per_layer) < 0.5).astype(float)
    x[per_layer:] = rng.standard_normal(per_layer)
    kept = np.empty((n, d))
    total = cfg.burn_in + n * cfg.thin
    kept_count = 0
    rows = list(theta)
    for sweep in range(total):
        u = rng.random(per_layer)
        z = rng.standard_normal(d - per_layer)
        for j in range(d):
            mean = rows[j] @ x
            if j < per_layer:
                x[j] = 1.0 if u[j] < _logistic(mean) else 0.0
            else:
                x[j] = mean + z[j - per_layer]
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == cfg.thin - 1:
            kept[kept_count] = x
            kept_count += 1
    assert kept_count == n
    return Dataset(kept)
