"""Tests for grids, fields, regions, cutoffs and quadrature."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import GridError
from app.pde.grid import (
    SMOOTHSTEP_CONSTANT,
    CutoffSpec,
    FieldDerivatives,
    Grid,
    NodalField,
    RegionPair,
    SubRegion,
    assert_nested,
    discrete_gradient,
    integrate,
    lebesgue_norm,
    make_cutoff,
    max_gradient_field,
    second_derivative,
    transfinite_fill,
)


class TestGrid:
    """Tests for the tensor grid."""

    def test_spacing(self):
        grid = Grid((0.0, -1.0), (1.0, 1.0), (5, 9))
        assert grid.h == (0.25, 0.25)
        assert grid.cell_volume == pytest.approx(0.0625)
        assert grid.volume == pytest.approx(2.0)
        assert grid.points.shape == (5, 9, 2)
        assert grid.cell_centers.shape == (4, 8, 2)

    def test_boundary_mask(self, grid):
        assert grid.boundary_mask.sum() == 4 * 16
        assert grid.interior_mask.sum() == 15 * 15

    @pytest.mark.parametrize(
        "lower,upper,shape",
        [((0.0,), (1.0,), (5,)), ((0,) * 4, (1,) * 4, (3,) * 4), ((0, 0), (1, 1), (2, 5)), ((0, 0), (0, 1), (5, 5))],
    )
    def test_rejects_invalid(self, lower, upper, shape):
        with pytest.raises(GridError):
            Grid(lower, upper, shape)

    def test_refine_is_nested(self, grid):
        fine = grid.refine()
        assert fine.shape == (33, 33)
        assert fine.h[0] == pytest.approx(grid.h[0] / 2)
        assert_nested([grid, fine, fine.refine()])

    def test_not_nested(self):
        with pytest.raises(GridError):
            assert_nested([Grid.uniform(9), Grid.uniform(18)])

    def test_same_domain(self):
        assert Grid.uniform(5).same_domain(Grid.uniform(9))
        assert not Grid.uniform(5).same_domain(Grid.uniform(5, upper=2.0))


class TestNodalField:
    """Tests for nodal fields."""

    def test_read_only(self, grid):
        u = NodalField.from_function(grid, lambda x, y: x + y)
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0

    def test_rejects_nonfinite(self, grid):
        values = np.zeros(grid.shape)
        values[3, 3] = math.nan
        with pytest.raises(GridError):
            NodalField(grid, values)

    def test_rejects_wrong_shape(self, grid):
        with pytest.raises(GridError):
            NodalField(grid, np.zeros((3, 3)))

    def test_boundary_and_interior_max(self, grid):
        u = NodalField.from_function(grid, lambda x, y: x - 2 * y)
        assert u.boundary_max() == pytest.approx(2.0)
        assert u.interior_max() < 2.0


class TestDerivatives:
    """Tests for discrete first and second derivatives."""

    def test_affine_exact(self, grid):
        u = NodalField.from_function(grid, lambda x, y: 3 * x + 2 - y)
        np.testing.assert_allclose(discrete_gradient(u, 0).values, 3.0, atol=1e-12)
        np.testing.assert_allclose(discrete_gradient(u, 1).values, -1.0, atol=1e-12)

    def test_constant(self, grid):
        u = NodalField(grid, np.full(grid.shape, 4.0))
        assert np.all(discrete_gradient(u, 1).values == 0)

    def test_quadratic_central_exact(self):
        """Test that central differences of x^2 equal 2x at interior nodes."""
        grid = Grid((0.0, 0.0), (1.0, 1.0), (5, 3))
        u = NodalField.from_function(grid, lambda x, y: x**2 + 0 * y)
        ux = discrete_gradient(u, 0).values
        np.testing.assert_allclose(ux[1:-1], 2 * grid.coords[0][1:-1], atol=1e-14)

    def test_bad_axis(self, grid):
        with pytest.raises(ValueError):
            discrete_gradient(NodalField(grid, np.zeros(grid.shape)), 2)

    def test_second_derivatives(self, grid):
        u = NodalField.from_function(grid, lambda x, y: x * y + x**2)
        np.testing.assert_allclose(second_derivative(u, 0, 1).values, 1.0, atol=1e-10)
        np.testing.assert_allclose(second_derivative(u, 0, 0).values[1:-1], 2.0, atol=1e-10)
        d = FieldDerivatives.of(u)
        assert d.hess[0][1] is d.hess[1][0]
        np.testing.assert_allclose(d.hess[1][1], 0.0, atol=1e-10)

    def test_max_gradient_field(self, grid):
        u = NodalField.from_function(grid, lambda x, y: 2 * x - 3 * y)
        np.testing.assert_allclose(max_gradient_field(u).values, 3.0)


class TestQuadrature:
    """Tests for integrate and lebesgue_norm."""

    def test_unit_function(self, grid):
        u = NodalField(grid, np.ones(grid.shape))
        for q in (1, 2, 7.5):
            assert lebesgue_norm(u, q) == pytest.approx(1.0)

    def test_homogeneity(self, grid):
        u = NodalField(grid, np.full(grid.shape, -3.0))
        box = Grid((0.0, 0.0), (2.0, 1.0), (9, 5))
        assert lebesgue_norm(u, 3) == pytest.approx(3.0)
        v = NodalField(box, np.full(box.shape, -3.0))
        assert lebesgue_norm(v, 3) == pytest.approx(3.0 * 2.0 ** (1 / 3))

    def test_linear_l2(self):
        """Test ||x_1||_2 -> 1/sqrt(3) at second order."""
        grid = Grid.uniform(65)
        u = NodalField.from_function(grid, lambda x, y: x + 0 * y)
        assert lebesgue_norm(u, 2) == pytest.approx(1 / math.sqrt(3), abs=1e-4)

    def test_sup_norm_over_region(self, grid):
        u = NodalField.from_function(grid, lambda x, y: x + y)
        ball = SubRegion.ball((0.5, 0.5), 0.25)
        assert lebesgue_norm(u, math.inf, ball) == pytest.approx(1.3125)

    def test_gradient_norm_duality(self, grid):
        """Test ||u_{x_i}||_{L^q(box)} = |a_i| |box|^{1/q} for affine u."""
        u = NodalField.from_function(grid, lambda x, y: 1.5 * x - 0.75 * y + 2)
        box = SubRegion.box((0.25, 0.25), (0.75, 0.75))
        for q in (1, 2, 5):
            assert lebesgue_norm(discrete_gradient(u, 0), q, box) == pytest.approx(1.5 * 0.25 ** (1 / q), abs=1e-10)
            assert lebesgue_norm(discrete_gradient(u, 1), q, box) == pytest.approx(0.75 * 0.25 ** (1 / q), abs=1e-10)

    def test_refinement_order(self):
        """Test the quadrature error of a smooth field decays at order >= 1.8."""
        exact = 4 / math.pi**2
        errors = []
        for n in (9, 17, 33, 65):
            grid = Grid.uniform(n)
            f = NodalField.from_function(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
            errors.append(abs(lebesgue_norm(f, 1) - exact))
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:], strict=False)]
        assert min(orders) >= 1.8

    def test_empty_region(self, grid):
        tiny = SubRegion.ball((0.5, 0.5), 1e-3)
        with pytest.raises(GridError):
            integrate(np.ones(grid.shape), grid, tiny)

    def test_region_outside_domain(self, grid):
        with pytest.raises(GridError):
            integrate(np.ones(grid.shape), grid, SubRegion.ball((0.9, 0.5), 0.3))

    def test_rejects_exponent_below_one(self, grid):
        with pytest.raises(ValueError):
            lebesgue_norm(NodalField(grid, np.ones(grid.shape)), 0.5)


class TestRegions:
    """Tests for SubRegion and RegionPair."""

    def test_ball_measure(self):
        assert SubRegion.ball((0, 0), 0.5).measure == pytest.approx(math.pi / 4)
        assert SubRegion.ball((0, 0, 0), 1.0).measure == pytest.approx(4 * math.pi / 3)

    def test_annulus(self, grid):
        annulus = SubRegion(kind="annulus", center=(0.5, 0.5), radius=0.4, inner_radius=0.2)
        assert annulus.measure == pytest.approx(math.pi * (0.16 - 0.04))
        mask = annulus.node_mask(grid)
        assert not mask[8, 8]
        assert mask[8, 13]

    def test_margin(self, grid):
        assert SubRegion.ball((0.5, 0.5), 0.3).margin(grid) == pytest.approx(0.2)
        with pytest.raises(GridError):
            SubRegion.ball((0.5, 0.5), 0.3).check_inside(grid, margin=0.25)

    @pytest.mark.parametrize(
        "kwargs",
        [{"kind": "ball", "center": (0.5, 0.5), "radius": 0.0},
         {"kind": "annulus", "center": (0.5, 0.5), "radius": 0.2, "inner_radius": 0.3},
         {"kind": "box", "lower": (0.5, 0.5), "upper": (0.4, 0.9)}],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            SubRegion(**kwargs)

    def test_pair(self):
        pair = RegionPair(center=(0.5, 0.5), r0=0.1, R0=0.3)
        assert pair.inner.radius == 0.1
        assert pair.outer.radius == 0.3
        with pytest.raises(ValidationError):
            RegionPair(center=(0.5, 0.5), r0=0.3, R0=0.3)


class TestCutoff:
    """Tests for make_cutoff."""

    def test_support(self, fine_grid):
        cutoff = make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.2, s=0.4), fine_grid)
        eta = cutoff.eta.values
        assert eta[16, 16] == 1.0
        assert eta[0, 0] == 0.0 and eta[-1, -1] == 0.0
        assert eta.min() >= 0.0 and eta.max() <= 1.0
        r = np.linalg.norm(fine_grid.points - 0.5, axis=-1)
        assert np.all(eta[r <= 0.2] == 1.0)
        assert np.all(eta[r >= 0.4] == 0.0)

    def test_gradient_scaling(self, fine_grid):
        """Test that halving s - t roughly doubles max |grad eta|."""
        wide = make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.1, s=0.4), fine_grid)
        narrow = make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.1, s=0.25), fine_grid)
        assert narrow.max_gradient / wide.max_gradient == pytest.approx(2.0, rel=0.1)
        assert wide.constant <= SMOOTHSTEP_CONSTANT + 1e-12

    def test_analytic_gradient_matches_differences(self):
        grid = Grid.uniform(129)
        cutoff = make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.1, s=0.4), grid)
        numeric = discrete_gradient(cutoff.eta, 0).values
        np.testing.assert_allclose(numeric[1:-1], cutoff.gradient[0][1:-1], atol=5e-2)

    def test_unresolved(self, grid):
        with pytest.raises(GridError):
            make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.2, s=0.25), grid)

    def test_outside_domain(self, grid):
        with pytest.raises(GridError):
            make_cutoff(CutoffSpec(center=(0.5, 0.5), t=0.2, s=0.6), grid)

    def test_rejects_t_not_below_s(self):
        with pytest.raises(ValidationError):
            CutoffSpec(center=(0.5, 0.5), t=0.4, s=0.4)


class TestTransfiniteFill:
    """Tests for the Coons interpolation of boundary values."""

    def test_bilinear_exact(self, grid):
        exact = NodalField.from_function(grid, lambda x, y: 1 + 2 * x - y + 3 * x * y).values
        values = np.where(grid.boundary_mask, exact, 99.0)
        np.testing.assert_allclose(transfinite_fill(values), exact, atol=1e-12)

    def test_reproduces_boundary(self, grid, rng):
        values = rng.normal(size=grid.shape)
        filled = transfinite_fill(values)
        np.testing.assert_allclose(filled[grid.boundary_mask], values[grid.boundary_mask], atol=1e-12)

    def test_trilinear_exact(self):
        grid = Grid.uniform(5, N=3)
        exact = NodalField.from_function(grid, lambda x, y, z: x * y * z - z + 0.5).values
        values = np.where(grid.boundary_mask, exact, 0.0)
        np.testing.assert_allclose(transfinite_fill(values), exact, atol=1e-12)
