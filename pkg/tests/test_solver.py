import numpy as np
import pytest

from crossimpact import (
    Constant,
    CrossExpKernel,
    DiagCongruenceKernel,
    ExpDecay,
    GaussianSquared,
    MatrixExpKernel,
    MatrixFunctionKernel,
    PermanentKernel,
    ScalarTimesMatrixKernel,
    Strategy,
    TimeGrid,
    UnboundedCostError,
    basis_strategies,
    cost,
    equidistant_grid,
    lagrange_residual,
    refine,
    simultaneous_diagonalize,
    solve_1d_exp,
    solve_best,
    solve_commuting,
    solve_exp_closed_form,
    solve_kkt,
)
from conftest import random_admissible_kernel, random_grid, random_orthogonal, random_spd


class TestTimeGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid([0.1, 1.0])  # must start at 0
        with pytest.raises(ValueError):
            TimeGrid([0.0, 1.0, 1.0])  # strictly increasing
        with pytest.raises(ValueError):
            TimeGrid([])
        grid = TimeGrid([0.0, 0.5, 2.0])
        assert grid.n == 3 and grid.span == 2.0

    def test_immutability(self):
        grid = TimeGrid([0.0, 1.0])
        with pytest.raises(ValueError):
            grid.times[0] = 5.0


class TestCost:
    def test_zero_strategy(self, rng):
        kernel = MatrixExpKernel(random_spd(rng, 2))
        grid = equidistant_grid(1.0, 4)
        assert cost(kernel, grid, np.zeros((4, 2))) == 0.0

    def test_single_block_trade(self, rng):
        kernel = MatrixExpKernel(random_spd(rng, 2))
        x0 = rng.uniform(-3, 3, 2)
        value = cost(kernel, TimeGrid([0.0]), -x0[None, :])
        assert value == pytest.approx(0.5 * x0 @ kernel.tilde(0.0) @ x0, rel=1e-14)

    def test_permanent_cost_is_allocation_free(self, rng):
        """Symmetric constant kernels price any liquidation the same;
        brute-force double-loop evaluation confirms half the book impact."""
        g0 = random_spd(rng, 2)
        kernel = PermanentKernel(g0)
        x0 = rng.uniform(-3, 3, 2)
        expected = 0.5 * x0 @ g0 @ x0
        for _ in range(5):
            grid = random_grid(rng, n_max=7)
            trades = rng.standard_normal((grid.n, 2))
            trades -= (trades.sum(axis=0) + x0) / grid.n  # liquidate x0
            got = cost(kernel, grid, trades)
            # independent double-loop evaluation of the quadratic form
            brute = 0.0
            for k in range(grid.n):
                for l in range(grid.n):
                    brute += 0.5 * trades[k] @ kernel.tilde(grid.times[k] - grid.times[l]) @ trades[l]
            assert got == pytest.approx(brute, abs=1e-12)
            assert got == pytest.approx(expected, abs=1e-9)

    def test_permanent_nonsymmetric_matches_brute_force(self, rng):
        # the antisymmetric part couples to the time-ordering, so only the
        # brute-force sum (not allocation-independence) is asserted here
        g0 = rng.standard_normal((2, 2))
        kernel = PermanentKernel(g0)
        grid = random_grid(rng, n_max=6)
        trades = rng.standard_normal((grid.n, 2))
        brute = 0.0
        for k in range(grid.n):
            for l in range(grid.n):
                brute += 0.5 * trades[k] @ kernel.tilde(grid.times[k] - grid.times[l]) @ trades[l]
        assert cost(kernel, grid, trades) == pytest.approx(brute, abs=1e-12)

    def test_shape_mismatch(self, rng):
        kernel = MatrixExpKernel(random_spd(rng, 2))
        with pytest.raises(ValueError):
            cost(kernel, equidistant_grid(1.0, 3), np.zeros((4, 2)))
        with pytest.raises(ValueError):
            cost(kernel, equidistant_grid(1.0, 3), np.zeros((3, 3)))


class TestSolveKKT:
    def test_permanent_equal_split(self, rng):
        g0 = random_spd(rng, 2)
        x0 = np.array([4.0, -2.0])
        result = solve_kkt(PermanentKernel(g0), equidistant_grid(1.0, 4), x0)
        assert result.unique is False
        assert np.allclose(result.strategy.trades, np.tile(-x0 / 4.0, (4, 1)), atol=1e-10)

    def test_matches_closed_form(self):
        grid = equidistant_grid(1.0, 10)
        b = np.diag([1.0, 2.0])
        x0 = np.array([10.0, 5.0])
        via_kkt = solve_kkt(MatrixExpKernel(b), grid, x0)
        via_formula = solve_exp_closed_form(b, grid, x0)
        assert np.max(np.abs(via_kkt.strategy.trades - via_formula.strategy.trades)) < 1e-8
        assert via_kkt.cost == pytest.approx(via_formula.cost, rel=1e-10)

    def test_two_point_exponential_halves(self):
        kernel = ScalarTimesMatrixKernel(ExpDecay(1.3), [[1.0]])
        result = solve_kkt(kernel, TimeGrid([0.0, 2.0]), [1.0])
        assert np.allclose(result.strategy.trades[:, 0], [-0.5, -0.5], atol=1e-12)

    def test_indefinite_gram_rejected(self):
        kernel = PermanentKernel(np.diag([1.0, -1.0]))
        with pytest.raises(UnboundedCostError) as err:
            solve_kkt(kernel, equidistant_grid(1.0, 3), [1.0, 1.0])
        assert err.value.direction is not None
        assert err.value.min_eig < 0

    def test_factor_and_lstsq_paths_agree(self, rng):
        for _ in range(10):
            kernel = MatrixExpKernel(random_spd(rng, 2))
            grid = random_grid(rng, n_max=9)
            x0 = rng.uniform(-5, 5, 2)
            a = solve_kkt(kernel, grid, x0, method="factor")
            b = solve_kkt(kernel, grid, x0, method="lstsq")
            assert np.max(np.abs(a.strategy.trades - b.strategy.trades)) < 1e-10

    def test_certificate_invariants(self, rng):
        for _ in range(10):
            kernel = random_admissible_kernel(rng)
            grid = random_grid(rng, n_max=10)
            x0 = rng.uniform(-5, 5, kernel.dimension)
            result = solve_kkt(kernel, grid, x0)
            assert result.residual <= 1e-8 * (1.0 + np.max(np.abs(result.lam)))
            assert np.max(np.abs(result.strategy.trades.sum(axis=0) + x0)) <= 1e-10


class TestLagrangeResidual:
    def test_solver_output_certified(self, rng):
        kernel = MatrixExpKernel(random_spd(rng, 2))
        grid = equidistant_grid(2.0, 6)
        result = solve_kkt(kernel, grid, [3.0, -1.0])
        lam_hat, residual = lagrange_residual(kernel, grid, result.strategy)
        assert residual <= 1e-8 * (1.0 + np.max(np.abs(lam_hat)))
        assert np.allclose(lam_hat, result.lam, atol=1e-9)

    def test_perturbation_detected(self, rng):
        kernel = MatrixExpKernel(random_spd(rng, 2))
        grid = equidistant_grid(2.0, 6)
        result = solve_kkt(kernel, grid, [3.0, -1.0])
        trades = result.strategy.trades.copy()
        trades[1] += [0.1, 0.0]
        trades[4] -= [0.1, 0.0]
        _, residual = lagrange_residual(kernel, grid, trades)
        assert residual > 1e-4

    def test_permanent_multiplier(self, rng):
        g0 = random_spd(rng, 2)
        kernel = PermanentKernel(g0)
        grid = equidistant_grid(1.0, 5)
        x0 = rng.uniform(-4, 4, 2)
        trades = rng.standard_normal((5, 2))
        trades -= (trades.sum(axis=0) + x0) / 5.0
        lam_hat, residual = lagrange_residual(kernel, grid, trades)
        assert residual <= 1e-10 * (1 + np.max(np.abs(lam_hat)))
        assert np.allclose(lam_hat, -0.5 * (g0 + g0.T) @ x0, atol=1e-10)


class TestExpClosedForm:
    def test_collapse_toward_zero_matrix(self):
        # smallest eigenvalue allowed by the strictness guard: formulas
        # collapse to half the position at each endpoint
        result = solve_exp_closed_form(1e-11 * np.eye(2), equidistant_grid(1.0, 5), [4.0, 2.0])
        trades = result.strategy.trades
        assert np.allclose(trades[0], [-2.0, -1.0], atol=1e-9)
        assert np.allclose(trades[-1], [-2.0, -1.0], atol=1e-9)
        assert np.max(np.abs(trades[1:-1])) < 1e-9

    def test_two_times_half_each(self, rng):
        b = random_spd(rng, 3)
        x0 = rng.uniform(-5, 5, 3)
        result = solve_exp_closed_form(b, TimeGrid([0.0, 1.7]), x0)
        assert np.allclose(result.strategy.trades, np.tile(-x0 / 2.0, (2, 1)), atol=1e-12)

    def test_three_point_scalar_formula(self):
        grid = equidistant_grid(1.0, 3)
        x0 = np.array([2.0])
        result = solve_exp_closed_form(np.array([[1.0]]), grid, x0)
        xi1 = -2.0 / (3.0 - np.exp(-0.5))
        expected = [xi1, (1.0 - np.exp(-0.5)) * xi1, xi1]
        assert np.allclose(result.strategy.trades[:, 0], expected, atol=1e-12)
        oracle = solve_kkt(MatrixExpKernel([[1.0]]), grid, x0)
        assert np.max(np.abs(result.strategy.trades - oracle.strategy.trades)) < 1e-10

    def test_rejects_semidefinite(self):
        with pytest.raises(ValueError, match="strictly positive"):
            solve_exp_closed_form(np.diag([1.0, 0.0]), equidistant_grid(1.0, 3), [1.0, 1.0])
        with pytest.raises(ValueError):
            solve_exp_closed_form(np.eye(2), TimeGrid([0.0]), [1.0, 1.0])


class TestSolve1DExp:
    def test_two_times(self):
        assert np.allclose(solve_1d_exp(2.0, TimeGrid([0.0, 5.0]), 1.0), [-0.5, -0.5])

    def test_equidistant_matches_matrix_route(self):
        grid = equidistant_grid(2.0, 7)
        eta = solve_1d_exp(0.8, grid, 3.0)
        via_matrix = solve_exp_closed_form(np.array([[0.8]]), grid, [3.0])
        assert np.max(np.abs(eta - via_matrix.strategy.trades[:, 0])) < 1e-12

    def test_irregular_grid_against_kkt(self):
        grid = TimeGrid([0.0, 0.1, 1.0])
        eta = solve_1d_exp(1.0, grid, 1.0)
        oracle = solve_kkt(MatrixExpKernel([[1.0]]), grid, [1.0])
        assert np.max(np.abs(eta - oracle.strategy.trades[:, 0])) < 1e-10


class TestSimultaneousDiagonalize:
    def test_cross_exp_frame(self):
        kernel = CrossExpKernel(1.0, 1.8, 0.3)
        ts = np.linspace(0.0, 5.0, 9)
        O, gs = simultaneous_diagonalize(kernel, ts)
        # rows must span the +/- diagonal directions
        expected = np.array([1.0, 1.0]) / np.sqrt(2.0)
        inner = np.abs(O @ expected)
        assert np.max(inner) > 1 - 1e-10 and np.min(inner) < 1e-8
        for i in range(2):
            sign = 1.0 if abs(O[i] @ expected) > 0.5 else -1.0
            decay = np.exp(-ts) + sign * 0.3 * np.exp(-1.8 * ts)
            assert np.allclose(gs[i], decay, atol=1e-10)

    def test_diagonal_kernel_identity_frame(self):
        kernel = MatrixExpKernel(np.diag([1.0, 3.0]))
        O, _ = simultaneous_diagonalize(kernel, np.linspace(0, 3, 5))
        assert np.allclose(np.abs(O), np.eye(2)[np.argsort(np.abs(O).argmax(axis=1))], atol=1e-10)

    def test_matrix_function_recovers_eigenvectors(self, rng):
        q = random_orthogonal(rng, 3)
        b = q @ np.diag([0.5, 1.0, 2.0]) @ q.T
        kernel = MatrixFunctionKernel(0.5 * (b + b.T), GaussianSquared())
        O, _ = simultaneous_diagonalize(kernel, np.linspace(0.1, 3, 7))
        # each row of O matches an eigenvector of B up to sign
        match = np.abs(O @ q)
        assert np.allclose(np.sort(match.max(axis=1)), [1.0, 1.0, 1.0], atol=1e-8)

    def test_noncommuting_rejected(self):
        kernel = ClampedLike = CrossExpKernel(1.0, 1.8, 0.3)
        from crossimpact import Exp2x2Kernel

        bad = Exp2x2Kernel(1.0, 0.5, 0.5, 2.0, 1.0, 1.4, 1.4, 1.1)
        with pytest.raises(ValueError, match="commuting"):
            simultaneous_diagonalize(bad, np.linspace(0, 4, 6))


class TestSolveCommuting:
    def test_diagonal_kernel_splits(self, rng):
        kernel = MatrixExpKernel(np.diag([0.7, 2.0]))
        grid = equidistant_grid(2.0, 6)
        x0 = np.array([5.0, -3.0])
        joint = solve_commuting(kernel, grid, x0)
        for i, rate in enumerate([0.7, 2.0]):
            single = solve_1d_exp(rate, grid, x0[i])
            assert np.max(np.abs(joint.strategy.trades[:, i] - single)) < 1e-10

    def test_cross_exp_matches_kkt(self):
        kernel = CrossExpKernel(1.0, 1.8, 0.3)
        grid = equidistant_grid(5.0, 11)
        x0 = np.array([-50.0, 1.0])
        a = solve_commuting(kernel, grid, x0)
        b = solve_kkt(kernel, grid, x0)
        assert np.max(np.abs(a.strategy.trades - b.strategy.trades)) < 1e-8
        assert a.cost == pytest.approx(b.cost, rel=1e-10)

    def test_matrix_exp_matches_closed_form(self, rng):
        b = random_spd(rng, 3)
        grid = random_grid(rng, n_max=9)
        x0 = rng.uniform(-5, 5, 3)
        a = solve_commuting(MatrixExpKernel(b), grid, x0)
        c = solve_exp_closed_form(b, grid, x0)
        assert np.max(np.abs(a.strategy.trades - c.strategy.trades)) < 1e-8

    def test_cost_equals_sum_of_1d_costs(self, rng):
        kernel = random_admissible_kernel(rng)
        grid = random_grid(rng, n_max=8)
        x0 = rng.uniform(-3, 3, kernel.dimension)
        result = solve_commuting(kernel, grid, x0)
        assert result.cost == pytest.approx(cost(kernel, grid, result.strategy), rel=1e-9, abs=1e-12)


class TestBasisStrategies:
    def test_diagonal_kernel_axes(self):
        kernel = MatrixExpKernel(np.diag([0.5, 1.5]))
        grid = equidistant_grid(2.0, 7)
        basis = basis_strategies(kernel, grid)
        assert np.allclose(np.abs(basis.vectors), np.eye(2)[np.argsort(np.abs(basis.vectors).argmax(axis=1))], atol=1e-12)
        for i, strategy in enumerate(basis.strategies):
            assert np.allclose(-strategy.trades.sum(axis=0), basis.vectors[i], atol=1e-10)

    def test_sign_constant_components(self, rng):
        for _ in range(10):
            kernel = random_admissible_kernel(rng)
            grid = random_grid(rng, n_max=9)
            basis = basis_strategies(kernel, grid)
            for strategy in basis.strategies:
                trades = strategy.trades
                outer = trades[:, None, :] * trades[None, :, :]
                assert np.min(outer) >= -1e-12

    def test_recombination_matches_kkt(self, rng):
        kernel = random_admissible_kernel(rng)
        grid = random_grid(rng, n_max=9)
        basis = basis_strategies(kernel, grid)
        alpha = rng.uniform(-2, 2, kernel.dimension)
        x0 = alpha @ basis.vectors
        combo = sum(a * s.trades for a, s in zip(alpha, basis.strategies))
        oracle = solve_kkt(kernel, grid, x0)
        assert np.max(np.abs(combo - oracle.strategy.trades)) < 1e-8

    def test_basis_is_orthonormal_and_liquidating(self, rng):
        for _ in range(5):
            kernel = random_admissible_kernel(rng)
            grid = random_grid(rng, n_max=8)
            basis = basis_strategies(kernel, grid)
            k = kernel.dimension
            assert np.max(np.abs(basis.vectors @ basis.vectors.T - np.eye(k))) < 1e-10
            for i, strategy in enumerate(basis.strategies):
                assert np.max(np.abs(strategy.liquidates - basis.vectors[i])) < 1e-10

    def test_precondition_enforced(self):
        # gaussian-squared matrix function is commuting but not convex
        kernel = MatrixFunctionKernel(np.array([[1.0, 0.4], [0.4, 1.0]]), GaussianSquared())
        with pytest.raises(ValueError, match="convex"):
            basis_strategies(kernel, equidistant_grid(2.0, 5))


class TestTransformationLaws:
    def test_uniform_cross_impact_is_ignorable(self, rng):
        """Same-rate impact across assets yields the same optimizer as no
        cross impact at all."""
        for _ in range(5):
            g = ExpDecay(float(rng.uniform(0.3, 2.0)))
            L = random_spd(rng, 2)
            grid = random_grid(rng, n_max=8)
            x0 = rng.uniform(-4, 4, 2)
            plain = solve_kkt(ScalarTimesMatrixKernel(g, np.eye(2)), grid, x0)
            loaded = solve_kkt(ScalarTimesMatrixKernel(g, L), grid, x0)
            assert np.max(np.abs(plain.strategy.trades - loaded.strategy.trades)) < 1e-8

    def test_congruence_mapping(self, rng):
        from crossimpact import CongruenceKernel

        for _ in range(5):
            kernel = MatrixExpKernel(random_spd(rng, 2))
            L = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
            grid = random_grid(rng, n_max=8)
            x0 = rng.uniform(-3, 3, 2)
            upstream = solve_kkt(kernel, grid, L @ x0)
            mapped = upstream.strategy.trades @ np.linalg.inv(L).T
            downstream = solve_kkt(CongruenceKernel(L, kernel), grid, x0)
            assert np.max(np.abs(mapped - downstream.strategy.trades)) < 1e-8


class TestCostOptimality:
    def test_feasible_perturbations_cannot_improve(self, rng):
        kernel = random_admissible_kernel(rng)
        grid = random_grid(rng, n_max=8)
        x0 = rng.uniform(-4, 4, kernel.dimension)
        result = solve_kkt(kernel, grid, x0)
        base = result.cost
        for _ in range(100):
            delta = rng.standard_normal(result.strategy.trades.shape)
            delta -= delta.mean(axis=0)
            perturbed = cost(kernel, grid, result.strategy.trades + 0.1 * delta)
            assert perturbed >= base - 1e-10 * (1.0 + abs(base))


class TestRefine:
    def test_permanent_cost_level_free(self, rng):
        g0 = random_spd(rng, 2)
        x0 = rng.uniform(-3, 3, 2)
        result = refine(PermanentKernel(g0), 1.0, x0, max_levels=2)
        costs = [c for _, c in result.levels]
        brute = 0.5 * x0 @ (0.5 * (g0 + g0.T)) @ x0
        assert costs[0] == pytest.approx(brute, rel=1e-10)
        assert costs[0] == pytest.approx(costs[-1], rel=1e-12)

    def test_1d_exponential_convergence(self):
        kernel = ScalarTimesMatrixKernel(ExpDecay(1.0), [[1.0]])
        result = refine(kernel, 1.0, [1.0], max_levels=10)
        costs = [c for _, c in result.levels]
        assert all(b <= a + 1e-10 * abs(a) for a, b in zip(costs, costs[1:]))
        assert all(b < a for a, b in zip(costs[:4], costs[1:5]))  # strictly at first
        assert abs(costs[-1] - costs[-2]) < 1e-6  # Cauchy by level 10
        # continuum cost for unit exponential decay on [0,1] is 1/3
        assert costs[-1] == pytest.approx(1.0 / 3.0, abs=1e-7)

    def test_not_pd_rejected(self):
        from crossimpact import JordanExpKernel

        with pytest.raises(UnboundedCostError):
            refine(JordanExpKernel(0.4), 1.0, [1.0, 0.0], max_levels=3)

    def test_early_stop(self):
        kernel = ScalarTimesMatrixKernel(ExpDecay(1.0), [[1.0]])
        result = refine(kernel, 1.0, [1.0], max_levels=10, rel_tol=1e-3)
        assert len(result.levels) < 10


class TestSolveBest:
    def test_routes(self, rng):
        grid = equidistant_grid(2.0, 6)
        _, route = solve_best(MatrixExpKernel(random_spd(rng, 2)), grid, [1.0, 2.0])
        assert route == "closed_form"
        _, route = solve_best(CrossExpKernel(1.0, 1.8, 0.3), grid, [1.0, 2.0])
        assert route == "commuting"
        _, route = solve_best(JordanLike(), grid, [1.0, 2.0])
        assert route == "kkt"

    def test_exp_profile_matrix_function_uses_closed_form(self, rng):
        b = random_spd(rng, 2)
        kernel = MatrixFunctionKernel(b, ExpDecay(1.7))
        grid = equidistant_grid(2.0, 6)
        result, route = solve_best(kernel, grid, [1.0, -2.0], cross_check=True)
        assert route == "closed_form"
        oracle = solve_kkt(kernel, grid, [1.0, -2.0])
        assert np.max(np.abs(result.strategy.trades - oracle.strategy.trades)) < 1e-8

    def test_cross_check_runs(self, rng):
        result, route = solve_best(
            MatrixExpKernel(random_spd(rng, 2)), equidistant_grid(1.0, 5), [1.0, -1.0],
            cross_check=True,
        )
        assert route == "closed_form"
        assert result.residual < 1e-8


def JordanLike():
    # symmetric-but-not-commuting kernel to force the generic route
    from crossimpact import Exp2x2Kernel

    return Exp2x2Kernel(1.0, 0.5, 0.5, 2.0, 1.0, 1.6, 1.6, 1.2)
