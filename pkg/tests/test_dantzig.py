import itertools

import numpy as np
import pytest

from segraph.core import NodeCoef, NodeProblem, coef_position, merge_node_coef, drop_coef
from segraph.dantzig import DantzigProblem, hessian_blocks, solve_dantzig
from segraph.data import Dataset
from segraph.errors import NumericalError, UsageError


def oracle_min_l1(target, gram, lam):
    """Vertex enumeration: the minimum-l1 point of the constraint polytope
    lies at an intersection of m hyperplanes drawn from the 2m facets
    (gram @ w = target +/- lam) and the m coordinate planes (w_i = 0)."""
    m = len(target)
    planes = []
    for row, rhs in zip(gram, target):
        planes.append((row, rhs - lam))
        planes.append((row, rhs + lam))
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        planes.append((e, 0.0))
    best = None
    for combo in itertools.combinations(range(len(planes)), m):
        A = np.array([planes[c][0] for c in combo])
        b = np.array([planes[c][1] for c in combo])
        try:
            w = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(target - gram @ w)) <= lam + 1e-9:
            l1 = np.abs(w).sum()
            if best is None or l1 < best:
                best = l1
    return best


def random_problem(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m + 2, m))
    gram = A.T @ A / (m + 2)
    target = rng.standard_normal(m)
    return DantzigProblem(target_row=target, gram=gram, lambda_d=0.2)


class TestSolveDantzig:
    def test_scalar_zero_feasible(self):
        sol = solve_dantzig(DantzigProblem(np.array([0.1]), np.array([[1.0]]), 0.2))
        assert sol.w_hat == pytest.approx([0.0])
        assert sol.l1_norm == 0.0

    def test_scalar_closed_form(self):
        sol = solve_dantzig(DantzigProblem(np.array([1.0]), np.array([[2.0]]), 0.2))
        assert sol.w_hat == pytest.approx([0.4], abs=1e-9)
        assert sol.feasibility_gap <= 1e-6

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_vertex_enumeration(self, m, seed):
        p = random_problem(seed * 10 + m, m)
        sol = solve_dantzig(p)
        ref = oracle_min_l1(p.target_row, p.gram, p.lambda_d)
        assert ref is not None
        assert sol.l1_norm == pytest.approx(ref, abs=1e-6)
        assert sol.feasibility_gap <= 1e-6

    def test_dominates_inverse_solution(self):
        p = random_problem(99, 4)
        w_dense = np.linalg.solve(p.gram, p.target_row)
        sol = solve_dantzig(p)
        assert sol.l1_norm <= np.abs(w_dense).sum() + 1e-6

    def test_scaling_covariance(self):
        p = random_problem(7, 3)
        sol = solve_dantzig(p)
        c = 3.5
        scaled = DantzigProblem(c * p.target_row, p.gram, c * p.lambda_d)
        sol_c = solve_dantzig(scaled)
        assert np.allclose(sol_c.w_hat, c * sol.w_hat, atol=1e-6)

    def test_l1_norm_nonincreasing_in_lambda(self):
        p = random_problem(8, 3)
        norms = [
            solve_dantzig(DantzigProblem(p.target_row, p.gram, lam)).l1_norm
            for lam in (0.05, 0.1, 0.2, 0.5, 1.0)
        ]
        assert np.all(np.diff(norms) <= 1e-8)

    def test_singular_gram_infeasible_raises(self):
        # rank-1 gram cannot reach a target outside its row space
        gram = np.outer([1.0, 1.0], [1.0, 1.0])
        target = np.array([5.0, -5.0])
        with pytest.raises(NumericalError):
            solve_dantzig(DantzigProblem(target, gram, 0.01, edge=(0, 1)))

    def test_empty_problem(self):
        sol = solve_dantzig(DantzigProblem(np.zeros(0), np.zeros((0, 0)), 0.2))
        assert sol.w_hat.shape == (0,)

    def test_validation(self):
        with pytest.raises(UsageError):
            DantzigProblem(np.array([1.0]), np.array([[1.0]]), 0.0)
        with pytest.raises(UsageError):
            DantzigProblem(np.array([1.0, 2.0]), np.array([[1.0]]), 0.1)


class TestHessianBlocks:
    def test_dimensions_d3(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.standard_normal((10, 3)))
        p = hessian_blocks(data, 0, 2, NodeCoef(0, rng.uniform(-1, 1, 2)))
        assert p.target_row.shape == (1,)
        assert p.gram.shape == (1, 1)

    def test_agrees_with_full_hessian_indexing(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.standard_normal((12, 5)))
        j, k = 1, 3
        beta = NodeCoef(j, rng.uniform(-1, 1, 4))
        p = hessian_blocks(data, j, k, beta)
        zeroed = merge_node_coef(5, j, k, 0.0, drop_coef(beta.beta, j, k))
        H = NodeProblem(data, j).hessian(zeroed)
        pos = coef_position(j, k)
        keep = [i for i in range(4) if i != pos]
        assert np.allclose(p.target_row, H[pos, keep], atol=1e-12)
        assert np.allclose(p.gram, H[np.ix_(keep, keep)], atol=1e-12)

    def test_gram_psd(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.standard_normal((15, 6)))
        p = hessian_blocks(data, 0, 5, NodeCoef(0, rng.uniform(-1, 1, 5)))
        assert np.linalg.eigvalsh(p.gram)[0] >= -1e-10

    def test_same_nodes_rejected(self):
        rng = np.random.default_rng(3)
        data = Dataset(rng.standard_normal((8, 4)))
        with pytest.raises(UsageError):
            hessian_blocks(data, 2, 2, NodeCoef(2, np.zeros(3)))
