"""Regularized orthotropic integrands, the discrete energy and its gradient.

g_{i,eps}(t) = |t|^{p_i}/p_i + (eps/2) t^2 for each axis i.

The discrete energy is edge based: along axis i every grid edge carries
g_{i,eps} of its forward difference quotient, weighted by the cell
volume times 1/2 for every transverse axis in which the edge lies on the
boundary. This equals the cell midpoint rule with each cell's axis-i
derivative averaged over the cell's 2^(N-1) axis-i edges, it is convex in
the nodal values, and ``el_residual`` is its exact gradient.
"""
import logging
from functools import cache

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from app.core.errors import GridError
from app.models.problem import BoundaryData, ModelParams, TrigMode
from app.pde.grid import Grid, NodalField, SubRegion

logger = logging.getLogger(__name__)

# Points per axis of the tensor quadrature for the mollifier multiplier.
KERNEL_QUADRATURE_POINTS = 48


def _exponent(params: ModelParams, axis: int) -> float:
    if not 0 <= axis < params.N:
        raise ValueError(f"axis {axis} outside 0..{params.N - 1}")
    return params.p.p[axis]


def g_eval(axis: int, t, params: ModelParams):
    """|t|^{p_i}/p_i + (eps/2) t^2."""
    p = _exponent(params, axis)
    t = np.asarray(t, dtype=float)
    return np.abs(t) ** p / p + 0.5 * params.eps * t**2


def g_first(axis: int, t, params: ModelParams):
    """|t|^{p_i-2} t + eps t."""
    p = _exponent(params, axis)
    t = np.asarray(t, dtype=float)
    return np.abs(t) ** (p - 2) * t + params.eps * t


def g_second(axis: int, t, params: ModelParams):
    """(p_i - 1)|t|^{p_i-2} + eps; identically 1 + eps when p_i = 2."""
    p = _exponent(params, axis)
    t = np.asarray(t, dtype=float)
    if p == 2:
        return np.full_like(t, 1.0 + params.eps)
    return (p - 1) * np.abs(t) ** (p - 2) + params.eps


# -- boundary data -------------------------------------------------------------


def _check_domain(data: BoundaryData, grid: Grid) -> None:
    if data.N != grid.N or not (
        np.allclose(data.lower, grid.lower) and np.allclose(data.upper, grid.upper)
    ):
        raise GridError(
            f"data domain [{data.lower}, {data.upper}] does not match grid [{grid.lower}, {grid.upper}]"
        )


def _evaluate_analytic(data: BoundaryData, points: np.ndarray) -> np.ndarray:
    values = data.offset + points @ np.asarray(data.slope_vector)
    for mode in data.resolved_modes():
        phase = 2 * np.pi * (points @ np.asarray(mode.wavevector)) + mode.phase
        values = values + mode.amplitude * np.sin(phase)
    return values


def tabulated_grid(data: BoundaryData) -> Grid:
    return Grid(data.lower, data.upper, data.shape)


def evaluate_data(data: BoundaryData, grid: Grid) -> np.ndarray:
    """Data values at every node of ``grid``.

    Tabulated data on a different resolution is interpolated multilinearly.
    """
    _check_domain(data, grid)
    if data.is_analytic:
        return _evaluate_analytic(data, grid.points)
    table = np.asarray(data.values, dtype=float).reshape(data.shape)
    if tuple(data.shape) == grid.shape:
        return table.copy()
    source = tabulated_grid(data)
    interpolator = RegularGridInterpolator(source.axes, table, method="linear")
    return interpolator(grid.points.reshape(-1, grid.N)).reshape(grid.shape)


def extension_field(data: BoundaryData, grid: Grid) -> NodalField:
    """The data evaluated on every node (the competitor U_eps of the sweep)."""
    return NodalField(grid, evaluate_data(data, grid))


@cache
def _unit_kernel(N: int, n: int = KERNEL_QUADRATURE_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint nodes on [-1, 1]^N and normalized weights of (1 - |s|^2)_+^2."""
    s = (np.arange(n) + 0.5) / n * 2 - 1
    nodes = np.stack(np.meshgrid(*([s] * N), indexing="ij"), axis=-1).reshape(-1, N)
    weights = np.clip(1 - np.sum(nodes**2, axis=-1), 0.0, None) ** 2
    keep = weights > 0
    nodes, weights = nodes[keep], weights[keep]
    return nodes, weights / weights.sum()


def kernel_multiplier(wavevector, eps: float) -> float:
    """Fourier multiplier of the unit-mass bump of radius eps at 2 pi k.

    The kernel is even, so sin(2 pi k.x + phase) convolves to
    m(k) sin(2 pi k.x + phase) with m(k) = integral of rho(y) cos(2 pi k.y).
    """
    k = np.asarray(wavevector, dtype=float)
    nodes, weights = _unit_kernel(len(k))
    return float(weights @ np.cos(2 * np.pi * eps * (nodes @ k)))


def _sampled_kernel(h: tuple[float, ...], eps: float) -> np.ndarray:
    half = [int(np.floor(eps / hi)) for hi in h]
    offsets = np.meshgrid(*[np.arange(-m, m + 1) * hi for m, hi in zip(half, h, strict=True)],
                          indexing="ij")
    r2 = sum(o**2 for o in offsets) / eps**2
    kernel = np.clip(1 - r2, 0.0, None) ** 2
    return kernel / kernel.sum()


def mollify(data: BoundaryData, eps: float) -> BoundaryData:
    """Convolve the data with the bump c(1 - |x/eps|^2)^2 of radius eps.

    Affine parts are unchanged; trigonometric modes are scaled by the
    kernel's multiplier (random-smooth data is returned with its modes made
    explicit); tabulated data is convolved on its own grid with values
    beyond the edge taken from the nearest node.

    Raises:
        GridError: tabulated data sampled more coarsely than eps.
    """
    if not eps > 0:
        raise ValueError(f"mollifier radius must be positive, got {eps}")
    if data.is_analytic:
        modes = tuple(
            TrigMode(amplitude=m.amplitude * kernel_multiplier(m.wavevector, eps),
                     wavevector=m.wavevector, phase=m.phase)
            for m in data.resolved_modes()
        )
        kind = "affine" if data.kind == "affine" else "trigonometric"
        return data.model_copy(update={"kind": kind, "modes": modes, "smoothing": eps})

    grid = tabulated_grid(data)
    if grid.h_max > eps:
        raise GridError(f"tabulated spacing {grid.h_max:g} is coarser than the mollifier radius {eps:g}")
    table = np.asarray(data.values, dtype=float).reshape(data.shape)
    kernel = _sampled_kernel(grid.h, eps)
    logger.debug(f"mollifying tabulated data with a {kernel.shape} kernel at eps={eps:g}")
    smoothed = ndimage.convolve(table, kernel, mode="nearest")
    return data.model_copy(update={"values": tuple(smoothed.ravel().tolist()), "smoothing": eps})


# -- discrete energy -------------------------------------------------------------


@cache
def edge_weights(grid: Grid, axis: int) -> np.ndarray:
    """Quadrature weight (in units of the cell volume) of every axis edge."""
    shape = list(grid.shape)
    shape[axis] -= 1
    weights = np.ones(shape)
    for other in range(grid.N):
        if other == axis:
            continue
        w = np.ones(grid.shape[other])
        w[[0, -1]] = 0.5
        weights = weights * w.reshape([-1 if a == other else 1 for a in range(grid.N)])
    weights.setflags(write=False)
    return weights


def edge_differences(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Forward difference quotients along ``axis`` on every edge."""
    return np.diff(values, axis=axis) / grid.h[axis]


def _check_params(u: NodalField, params: ModelParams) -> None:
    if params.N != u.grid.N:
        raise GridError(f"params have N={params.N}, grid has N={u.grid.N}")


def cell_energy_density(u: NodalField, params: ModelParams) -> np.ndarray:
    """Per cell: sum over i of g_{i,eps}(u_{x_i}) averaged over the axis-i edges."""
    _check_params(u, params)
    grid = u.grid
    density = np.zeros(tuple(n - 1 for n in grid.shape))
    for axis in range(grid.N):
        g = g_eval(axis, edge_differences(u.values, grid, axis), params)
        for other in range(grid.N):
            if other != axis:
                v = np.moveaxis(g, other, 0)
                g = np.moveaxis(0.5 * (v[:-1] + v[1:]), 0, other)
        density += g
    return density


def energy(u: NodalField, params: ModelParams, region: SubRegion | None = None) -> float:
    """F_{p,eps}(u; region) by the cell midpoint rule; eps = 0 gives F_p."""
    grid = u.grid
    density = cell_energy_density(u, params)
    if region is None:
        return float(np.sum(density)) * grid.cell_volume
    region.check_inside(grid)
    mask = region.cell_mask(grid)
    if not mask.any():
        raise GridError(f"{region.kind} region contains no cell centers")
    return float(np.sum(density[mask])) * grid.cell_volume


def el_residual(u: NodalField, params: ModelParams) -> NodalField:
    """Gradient of the discrete energy with respect to each nodal value.

    Boundary entries are zero. For p = 2 and eps = 0 this is minus the cell
    volume times the (2N+1)-point Laplacian.
    """
    _check_params(u, params)
    grid = u.grid
    residual = np.zeros(grid.shape)
    for axis in range(grid.N):
        d = edge_differences(u.values, grid, axis)
        flux = grid.cell_volume * edge_weights(grid, axis) * g_first(axis, d, params) / grid.h[axis]
        r = np.moveaxis(residual, axis, 0)
        f = np.moveaxis(flux, axis, 0)
        r[1:] += f
        r[:-1] -= f
    residual[grid.boundary_mask] = 0.0
    return NodalField(grid, residual)


def hessian_diagonal(u: NodalField, params: ModelParams) -> np.ndarray:
    """Diagonal of the energy Hessian (zero on the boundary)."""
    grid = u.grid
    diag = np.zeros(grid.shape)
    for axis in range(grid.N):
        d = edge_differences(u.values, grid, axis)
        curv = grid.cell_volume * edge_weights(grid, axis) * g_second(axis, d, params) / grid.h[axis] ** 2
        r = np.moveaxis(diag, axis, 0)
        c = np.moveaxis(curv, axis, 0)
        r[1:] += c
        r[:-1] += c
    diag[grid.boundary_mask] = 0.0
    return diag


def _power_increment(a: np.ndarray, c: np.ndarray, p: float) -> np.ndarray:
    """(|a + c|^p - |a|^p)/p without cancellation when |c| << |a|."""
    direct = (np.abs(a + c) ** p - np.abs(a) ** p) / p
    small = np.abs(c) < 0.5 * np.abs(a)
    ratio = np.divide(c, a, out=np.zeros_like(c), where=small)
    stable = np.abs(a) ** p * np.expm1(p * np.log1p(ratio)) / p
    return np.where(small, stable, direct)


def energy_change(u: NodalField, direction: np.ndarray, t: float, params: ModelParams) -> float:
    """F(u + t d) - F(u), summed edge by edge from increments.

    Accurate to a few ulps of the increment itself, so line searches can
    still resolve decrease when F(u) is many orders larger than the change.
    """
    grid = u.grid
    total = 0.0
    for axis in range(grid.N):
        p = params.p.p[axis]
        a = edge_differences(u.values, grid, axis)
        c = t * edge_differences(direction, grid, axis)
        increment = _power_increment(a, c, p) + 0.5 * params.eps * c * (2 * a + c)
        total += float(np.sum(edge_weights(grid, axis) * increment))
    return total * grid.cell_volume


def competitor_energy(data: BoundaryData, grid: Grid, params: ModelParams, mollified: bool = True) -> float:
    """Energy of the data extension U_eps, the competitor bounding F(u_eps)."""
    if mollified and params.eps > 0:
        data = mollify(data, params.eps)
    return energy(extension_field(data, grid), params)

