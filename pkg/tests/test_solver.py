"""Tests for the descent solver and eps-sweeps."""

import numpy as np
import pandas as pd
import pytest

from app.core.errors import GridError, NotConvergedError
from app.models.exponents import ExponentVector
from app.models.problem import BoundaryData, ModelParams, SolveConfig
from app.pde.grid import Grid, NodalField
from app.pde.model import el_residual, evaluate_data
from app.pde.solver import (
    harmonic_extension,
    initial_iterate,
    laplacian_matrix,
    solve,
    sweep_eps,
)
from tests.conftest import affine_data, wave_data


HALVING = tuple(0.5**k for k in range(1, 7))


def _params(p, eps=0.0) -> ModelParams:
    return ModelParams(p=ExponentVector(p=p), eps=eps)


class TestSolve:
    """Tests for solve."""

    @pytest.mark.parametrize("p", [(2, 2), (2, 6), (4, 10)])
    def test_recovers_affine_from_zero(self, fine_grid, tight, p):
        data = affine_data()
        cfg = tight.model_copy(update={"initial": "zero"})
        result = solve(_params(p, eps=0.1), data, fine_grid, cfg)
        exact = evaluate_data(data, fine_grid)
        assert result.converged
        assert np.max(np.abs(result.u.values - exact)) <= 1e-8

    def test_affine_interpolated_is_immediate(self, affine_solution, affine, grid):
        assert affine_solution.iterations == 0
        np.testing.assert_allclose(affine_solution.u.values, evaluate_data(affine, grid), atol=1e-12)

    def test_first_coordinate(self, grid, tight):
        """Test that u = x_1 is the minimizer for its own boundary values."""
        data = BoundaryData(kind="affine", lower=(0, 0), upper=(1, 1), slope=(1.0, 0.0))
        cfg = tight.model_copy(update={"initial": "zero"})
        result = solve(_params((2, 6), eps=0.1), data, grid, cfg)
        np.testing.assert_allclose(result.u.values, grid.coords[0], atol=1e-8)

    def test_laplace_oracle(self, grid, params_p2, wave, tight):
        """Test p = 2, eps = 0 against the sparse harmonic extension."""
        cfg = tight.model_copy(update={"initial": "zero"})
        result = solve(params_p2, wave, grid, cfg)
        oracle = harmonic_extension(evaluate_data(wave, grid), grid)
        np.testing.assert_allclose(result.u.values, oracle, atol=1e-6)

    def test_harmonic_initial_is_exact_for_laplace(self, grid, params_p2, wave, tight):
        cfg = tight.model_copy(update={"initial": "harmonic"})
        result = solve(params_p2, wave, grid, cfg)
        assert result.iterations == 0

    def test_energy_decreases(self, wave_solution):
        history = np.asarray(wave_solution.energy_history)
        assert history[0] == wave_solution.initial_energy
        assert np.all(np.diff(history) <= 0)
        assert wave_solution.energy <= wave_solution.initial_energy
        assert wave_solution.energy == pytest.approx(history[-1], rel=1e-10)
        assert len(history) == wave_solution.iterations + 1

    def test_residual_below_tolerance(self, wave_solution, params_p4, tight):
        residual = el_residual(wave_solution.u, params_p4).values
        assert np.max(np.abs(residual)) <= tight.tol
        assert wave_solution.residual_max <= tight.tol

    @pytest.mark.parametrize("seed", range(5))
    def test_maximum_principle(self, grid, tight, seed):
        data = BoundaryData(kind="random-smooth", lower=(0, 0), upper=(1, 1), seed=seed, amplitude=2.0)
        result = solve(_params((2, 4), eps=0.1), data, grid, tight)
        assert result.u.interior_max() <= result.u.boundary_max() + 1e-10

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(100))
    def test_maximum_principle_randomized(self, grid, tight, seed):
        """Test the bound across exponents, eps and data amplitudes drawn from the seed."""
        rng = np.random.default_rng(seed)
        p = [(2, 2), (2, 3), (2, 4), (3, 4)][seed % 4]
        eps = float(rng.choice([0.05, 0.1, 0.2]))
        data = BoundaryData(kind="random-smooth", lower=(0, 0), upper=(1, 1), seed=1000 + seed,
                            amplitude=float(rng.uniform(0.5, 2.0)))
        result = solve(_params(p, eps=eps), data, grid, tight)
        assert result.converged
        assert result.u.interior_max() <= result.u.boundary_max() + 1e-10

    def test_same_minimizer_from_two_starts(self, grid, params_p4, wave, tight):
        """Test that two first iterates reach the same minimizer."""
        from_zero = solve(params_p4, wave, grid, tight.model_copy(update={"initial": "zero"}))
        from_harmonic = solve(params_p4, wave, grid, tight.model_copy(update={"initial": "harmonic"}))
        bound = 10 * tight.tol / grid.cell_volume
        assert np.max(np.abs(from_zero.u.values - from_harmonic.u.values)) <= bound

    def test_steepest_descent(self, grid, params_p4, wave, tight):
        cfg = SolveConfig(tol=1e-8, max_iters=50_000, method="steepest")
        steepest = solve(params_p4, wave, grid, cfg)
        assert steepest.method == "steepest"
        cg = solve(params_p4, wave, grid, cfg.model_copy(update={"method": "nonlinear-cg"}))
        assert cg.iterations <= steepest.iterations

    def test_not_converged(self, grid, params_p4, wave):
        cfg = SolveConfig(max_iters=1, initial="zero")
        with pytest.raises(NotConvergedError) as info:
            solve(params_p4, wave, grid, cfg)
        result = info.value.result
        assert not result.converged
        assert result.iterations == 1
        assert result.energy < result.initial_energy

    def test_dimension_mismatch(self, params_p4):
        with pytest.raises(GridError):
            solve(params_p4, affine_data(N=3, slope=(1, 0, 0)), Grid.uniform(5, N=3))

    def test_domain_mismatch(self, params_p4):
        with pytest.raises(GridError):
            solve(params_p4, affine_data(), Grid.uniform(9, upper=2.0))

    def test_three_dimensions(self, tight):
        grid = Grid.uniform(7, N=3)
        data = affine_data(N=3, slope=(1.0, -1.0, 0.5))
        cfg = tight.model_copy(update={"initial": "zero"})
        result = solve(_params((2, 3, 4), eps=0.1), data, grid, cfg)
        np.testing.assert_allclose(result.u.values, evaluate_data(data, grid), atol=1e-8)


class TestInitialIterate:
    """Tests for initial_iterate and harmonic_extension."""

    def test_given(self, grid, rng):
        target = rng.normal(size=grid.shape)
        field = NodalField(grid, np.ones(grid.shape))
        values = initial_iterate(SolveConfig(initial="given"), target, grid, field)
        assert np.all(values[grid.interior_mask] == 1.0)
        np.testing.assert_array_equal(values[grid.boundary_mask], target[grid.boundary_mask])

    def test_given_needs_field(self, grid):
        with pytest.raises(ValueError):
            initial_iterate(SolveConfig(initial="given"), np.zeros(grid.shape), grid)

    def test_given_on_other_grid(self, grid, fine_grid):
        field = NodalField(fine_grid, np.zeros(fine_grid.shape))
        with pytest.raises(GridError):
            initial_iterate(SolveConfig(initial="given"), np.zeros(grid.shape), grid, field)

    def test_harmonic_extension(self, grid, rng):
        boundary = rng.normal(size=grid.shape)
        values = harmonic_extension(boundary, grid)
        np.testing.assert_array_equal(values[grid.boundary_mask], boundary[grid.boundary_mask])
        lap = (laplacian_matrix(grid) @ values.ravel()).reshape(grid.shape)
        assert np.max(np.abs(lap[grid.interior_mask])) < 1e-8


class TestSweep:
    """Tests for sweep_eps."""

    EPS = (0.2, 0.1, 0.05)

    def test_affine_sweep(self, grid, params_p4, tight):
        sweep = sweep_eps(params_p4, self.EPS, affine_data(), grid, tight)
        table = sweep.table
        assert list(table.columns) == [
            "eps", "energy", "residual_max", "iters", "diff_lp1", "diff_grad_1", "diff_grad_2",
            "diff_rate", "competitor_energy", "energy_bound_ok",
        ]
        assert list(table["eps"]) == list(self.EPS)
        assert np.isnan(table["diff_lp1"].iloc[0])
        assert np.all(table["diff_lp1"].iloc[1:] <= 1e-8)
        assert sweep.energy_bound_holds
        assert [r.eps for r in sweep.results] == list(self.EPS)

    def test_wave_energy_bound(self, grid, params_p4, wave, tight):
        sweep = sweep_eps(params_p4, self.EPS, wave, grid, tight)
        assert sweep.energy_bound_holds
        assert np.all(np.isfinite(sweep.table["diff_grad_2"].iloc[1:]))
        assert np.all(sweep.table["energy"] <= sweep.table["competitor_energy"])

    def test_threads_do_not_change_table(self, grid, params_p4, wave, tight):
        serial = sweep_eps(params_p4, self.EPS, wave, grid, tight, threads=1)
        threaded = sweep_eps(params_p4, self.EPS, wave, grid, tight, threads=3)
        pd.testing.assert_frame_equal(serial.table, threaded.table)

    @pytest.mark.parametrize("eps", [(), (0.1, 0.2), (0.1, 0.1), (0.1, 0.0)])
    def test_rejects_bad_eps(self, grid, params_p4, eps):
        with pytest.raises(ValueError):
            sweep_eps(params_p4, eps, affine_data(), grid)

    @pytest.mark.slow
    def test_differences_shrink(self, fine_grid, tight):
        """Test that successive solutions approach each other as eps -> 0."""
        params = _params((2, 4), eps=0.0)
        sweep = sweep_eps(params, (0.2, 0.1, 0.05, 0.025), wave_data(), fine_grid, tight)
        diffs = list(sweep.table["diff_lp1"].iloc[1:])
        assert all(b <= a + 1e-10 for a, b in zip(diffs, diffs[1:], strict=False))

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [(2, 3), (2, 4)])
    @pytest.mark.parametrize("amplitude", [0.1, 0.2, 0.3, 0.4, 0.5])
    def test_halving_sweep(self, grid, tight, p, amplitude):
        """Test eps = 1/2, 1/4, ..., 1/64: energy below the competitor, shrinking differences."""
        params = ModelParams(p=ExponentVector(p=p), eps=0.0, eps0=0.5)
        sweep = sweep_eps(params, HALVING, wave_data(amplitude), grid, tight)
        assert sweep.energy_bound_holds
        diffs = list(sweep.table["diff_lp1"].iloc[1:])
        assert all(b <= a + 1e-10 for a, b in zip(diffs, diffs[1:], strict=False))
