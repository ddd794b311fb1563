"""Rectangular grids, nodal fields, regions and cutoff functions.

Nodes are stored in C order with ``indexing="ij"``: axis 0 of every array
is x_1. Axes passed to functions in this package are 0-based.

All integrals use one quadrature: the midpoint rule on each cell applied
to the multilinear interpolant of the nodal integrand (the cell value is
the mean of its 2^N corners), restricted to cells whose center lies in
the region.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import gamma

from app.core.errors import GridError

logger = logging.getLogger(__name__)

# Maximum of the quintic smoothstep derivative, 30 z^2 (1-z)^2 at z = 1/2.
SMOOTHSTEP_CONSTANT = 15.0 / 8.0

# Containment slack for regions touching the domain boundary.
_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on the box [lower, upper].

    Attributes:
        lower: Lower corner of the domain.
        upper: Upper corner of the domain.
        shape: Node count per axis (>= 3).
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(x) for x in self.lower))
        object.__setattr__(self, "upper", tuple(float(x) for x in self.upper))
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if not 2 <= len(self.shape) <= 3:
            raise GridError(f"grids support N = 2 or 3, got N={len(self.shape)}")
        if not len(self.lower) == len(self.upper) == len(self.shape):
            raise GridError("lower, upper and shape must have the same length")
        if any(n < 3 for n in self.shape):
            raise GridError(f"need at least 3 nodes per axis, got {self.shape}")
        if any(b <= a for a, b in zip(self.lower, self.upper, strict=True)):
            raise GridError(f"empty domain [{self.lower}, {self.upper}]")

    @classmethod
    def uniform(cls, n: int, N: int = 2, lower: float = 0.0, upper: float = 1.0) -> "Grid":
        """Grid with n nodes per axis on the cube [lower, upper]^N."""
        return cls(lower=(lower,) * N, upper=(upper,) * N, shape=(n,) * N)

    @property
    def N(self) -> int:
        return len(self.shape)

    @cached_property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.shape, strict=True))

    @property
    def h_max(self) -> float:
        return max(self.h)

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper, strict=True)]))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.shape, strict=True)
        )

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates stacked on a trailing axis, shape (*shape, N)."""
        return np.stack(self.coords, axis=-1)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        mids = [0.5 * (x[:-1] + x[1:]) for x in self.axes]
        return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.N):
            index = [slice(None)] * self.N
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return mask

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    def refine(self) -> "Grid":
        """Nested grid with half the spacing (n -> 2(n-1) + 1 nodes per axis)."""
        return Grid(self.lower, self.upper, tuple(2 * (n - 1) + 1 for n in self.shape))

    def same_domain(self, other: "Grid") -> bool:
        return np.allclose(self.lower, other.lower) and np.allclose(self.upper, other.upper)


def assert_nested(grids: list[Grid]) -> None:
    """Raise GridError unless each grid is the refinement of the previous one."""
    for coarse, fine in zip(grids, grids[1:], strict=False):
        if not coarse.same_domain(fine) or coarse.refine().shape != fine.shape:
            raise GridError(f"grids {coarse.shape} and {fine.shape} are not nested by halving")


@dataclass(frozen=True, eq=False)
class NodalField:
    """A scalar function sampled on every node of a grid.

    Attributes:
        grid: The grid the values live on.
        values: Read-only array of shape ``grid.shape``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "NodalField":
        """Sample ``fn(*coords)`` on the grid nodes."""
        return cls(grid, np.broadcast_to(fn(*grid.coords), grid.shape))

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.grid.boundary_mask

    def boundary_max(self) -> float:
        return float(np.max(np.abs(self.values[self.grid.boundary_mask])))

    def interior_max(self) -> float:
        return float(np.max(np.abs(self.values[self.grid.interior_mask])))


class SubRegion(BaseModel):
    """A ball, annulus or box in domain coordinates.

    Attributes:
        kind: ``ball``, ``annulus`` or ``box``.
        center: Center of a ball or annulus.
        radius: Outer radius of a ball or annulus.
        inner_radius: Inner radius of an annulus.
        lower: Lower corner of a box.
        upper: Upper corner of a box.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["ball", "annulus", "box"] = "ball"
    center: tuple[float, ...] = ()
    radius: float = 0.0
    inner_radius: float = 0.0
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_shape(self):
        if self.kind == "box":
            if not self.lower or len(self.lower) != len(self.upper):
                raise ValueError("a box needs lower and upper corners of equal length")
            if any(b <= a for a, b in zip(self.lower, self.upper, strict=True)):
                raise ValueError("box corners must satisfy lower < upper")
        else:
            if not self.center:
                raise ValueError(f"a {self.kind} needs a center")
            if self.radius <= 0:
                raise ValueError(f"radius must be positive, got {self.radius}")
            if self.kind == "annulus" and not 0 <= self.inner_radius < self.radius:
                raise ValueError("an annulus needs 0 <= inner_radius < radius")
        return self

    @classmethod
    def ball(cls, center, radius: float) -> "SubRegion":
        return cls(kind="ball", center=tuple(center), radius=radius)

    @classmethod
    def box(cls, lower, upper) -> "SubRegion":
        return cls(kind="box", lower=tuple(lower), upper=tuple(upper))

    @property
    def N(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "box":
            return np.asarray(self.lower), np.asarray(self.upper)
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of points given with coordinates on the trailing axis."""
        if self.kind == "box":
            lo, hi = self.bounding_box()
            return np.all((points >= lo - _GEOM_TOL) & (points <= hi + _GEOM_TOL), axis=-1)
        r = np.linalg.norm(points - np.asarray(self.center), axis=-1)
        inside = r <= self.radius + _GEOM_TOL
        if self.kind == "annulus":
            inside &= r >= self.inner_radius - _GEOM_TOL
        return inside

    def margin(self, grid: Grid) -> float:
        """Distance from the region's bounding box to the domain boundary."""
        lo, hi = self.bounding_box()
        return float(min(np.min(lo - np.asarray(grid.lower)), np.min(np.asarray(grid.upper) - hi)))

    def check_inside(self, grid: Grid, margin: float = 0.0) -> None:
        if self.N != grid.N:
            raise GridError(f"region has dimension {self.N}, grid has {grid.N}")
        if self.margin(grid) < margin - _GEOM_TOL:
            raise GridError(f"{self.kind} region is not inside the domain with margin {margin:g}")

    def node_mask(self, grid: Grid) -> np.ndarray:
        return self.contains(grid.points)

    def cell_mask(self, grid: Grid) -> np.ndarray:
        return self.contains(grid.cell_centers)

    @property
    def measure(self) -> float:
        """Exact Lebesgue measure (used for reporting, not quadrature)."""
        if self.kind == "box":
            return float(np.prod(np.subtract(self.upper, self.lower)))
        unit = np.pi ** (self.N / 2) / float(gamma(self.N / 2 + 1))
        return unit * (self.radius**self.N - (self.inner_radius**self.N if self.kind == "annulus" else 0.0))


class RegionPair(BaseModel):
    """Concentric balls B_r0 inside B_R0.

    Attributes:
        center: Common center.
        r0: Inner radius.
        R0: Outer radius.
    """
    model_config = ConfigDict(frozen=True)

    center: tuple[float, ...]
    r0: float
    R0: float

    @model_validator(mode="after")
    def _check_radii(self):
        if not 0 < self.r0 < self.R0:
            raise ValueError(f"need 0 < r0 < R0, got r0={self.r0}, R0={self.R0}")
        return self

    @property
    def inner(self) -> SubRegion:
        return SubRegion.ball(self.center, self.r0)

    @property
    def outer(self) -> SubRegion:
        return SubRegion.ball(self.center, self.R0)


class CutoffSpec(BaseModel):
    """Radial cutoff equal to 1 on B_t and 0 outside B_s.

    Attributes:
        center: Center of both balls.
        t: Inner radius.
        s: Outer radius.
    """
    model_config = ConfigDict(frozen=True)

    center: tuple[float, ...]
    t: float
    s: float

    @model_validator(mode="after")
    def _check_radii(self):
        if not 0 <= self.t < self.s:
            raise ValueError(f"cutoff needs 0 <= t < s, got t={self.t}, s={self.s}")
        return self


@dataclass(frozen=True, eq=False)
class Cutoff:
    """A realized cutoff on a grid.

    Attributes:
        eta: Nodal values of eta.
        gradient: Exact partial derivatives of eta at the nodes.
        max_gradient: Realized max |grad eta| over the nodes.
        constant: max_gradient * (s - t), the realized C.
        profile_constant: Bound on C from the ramp profile (15/8).
    """

    spec: CutoffSpec
    eta: NodalField
    gradient: tuple[np.ndarray, ...]
    max_gradient: float
    constant: float
    profile_constant: float = SMOOTHSTEP_CONSTANT


def _smoothstep(z: np.ndarray) -> np.ndarray:
    return z**3 * (10 - 15 * z + 6 * z**2)


def _smoothstep_slope(z: np.ndarray) -> np.ndarray:
    return 30 * z**2 * (1 - z) ** 2


def make_cutoff(spec: CutoffSpec, grid: Grid) -> Cutoff:
    """Sample eta = 1 - S((|x - c| - t)/(s - t)) with the quintic smoothstep S.

    Raises:
        GridError: the ramp is narrower than two cells or B_s leaves the domain.
    """
    width = spec.s - spec.t
    if width < 2 * grid.h_max:
        raise GridError(f"cutoff ramp s - t = {width:g} is below two cells (h = {grid.h_max:g})")
    SubRegion.ball(spec.center, spec.s).check_inside(grid)

    offset = grid.points - np.asarray(spec.center)
    r = np.linalg.norm(offset, axis=-1)
    z = np.clip((r - spec.t) / width, 0.0, 1.0)
    eta = 1.0 - _smoothstep(z)

    radial = -_smoothstep_slope(z) / width
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[..., None] > 0, offset / r[..., None], 0.0)
    gradient = tuple(radial * unit[..., axis] for axis in range(grid.N))
    max_gradient = float(np.max(np.abs(radial)))

    logger.debug(f"cutoff t={spec.t}, s={spec.s}: max|grad eta|={max_gradient:.6g}")
    return Cutoff(
        spec=spec,
        eta=NodalField(grid, eta),
        gradient=gradient,
        max_gradient=max_gradient,
        constant=max_gradient * width,
    )


def discrete_gradient(u: NodalField, axis: int) -> NodalField:
    """Central differences inside, one-sided at the boundary; exact for affine u."""
    if not 0 <= axis < u.grid.N:
        raise ValueError(f"axis {axis} outside 0..{u.grid.N - 1}")
    return NodalField(u.grid, np.gradient(u.values, u.grid.h[axis], axis=axis))


def second_derivative(u: NodalField, i: int, j: int) -> NodalField:
    """u_{x_i x_j}: standard second differences for i == j, composed central
    first differences otherwise."""
    grid = u.grid
    first = np.gradient(u.values, grid.h[i], axis=i)
    if i != j:
        return NodalField(grid, np.gradient(first, grid.h[j], axis=j))
    # boundary rows keep the composed one-sided value
    result = np.gradient(first, grid.h[i], axis=i)
    v = np.moveaxis(u.values, i, 0)
    out = np.moveaxis(result, i, 0)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / grid.h[i] ** 2
    return NodalField(grid, result)


@dataclass(frozen=True, eq=False)
class FieldDerivatives:
    """First and second derivatives of a field, computed once.

    Attributes:
        grad: u_{x_i} for each axis.
        hess: u_{x_i x_j}, symmetric.
    """

    grad: tuple[np.ndarray, ...]
    hess: tuple[tuple[np.ndarray, ...], ...]

    @classmethod
    def of(cls, u: NodalField) -> "FieldDerivatives":
        N = u.grid.N
        grad = tuple(discrete_gradient(u, i).values for i in range(N))
        rows = [[None] * N for _ in range(N)]
        for i in range(N):
            for j in range(i, N):
                rows[i][j] = rows[j][i] = second_derivative(u, i, j).values
        return cls(grad=grad, hess=tuple(tuple(row) for row in rows))


def max_gradient_field(u: NodalField) -> NodalField:
    """The field max_k |u_{x_k}|."""
    grads = [np.abs(discrete_gradient(u, i).values) for i in range(u.grid.N)]
    return NodalField(u.grid, np.max(np.stack(grads), axis=0))


def cell_average(values: np.ndarray) -> np.ndarray:
    """Mean of the 2^N corners of every cell."""
    out = np.asarray(values, dtype=float)
    for axis in range(out.ndim):
        v = np.moveaxis(out, axis, 0)
        out = np.moveaxis(0.5 * (v[:-1] + v[1:]), 0, axis)
    return out


def integrate(values: np.ndarray, grid: Grid, region: SubRegion | None = None) -> float:
    """Integrate nodal values over ``region`` (the whole domain if None)."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise GridError(f"values shape {values.shape} does not match grid {grid.shape}")
    cells = cell_average(values)
    if region is None:
        return float(np.sum(cells)) * grid.cell_volume
    region.check_inside(grid)
    mask = region.cell_mask(grid)
    if not mask.any():
        raise GridError(f"{region.kind} region contains no cell centers")
    return float(np.sum(cells[mask])) * grid.cell_volume


def lebesgue_norm(f: NodalField, exponent: float, region: SubRegion | None = None) -> float:
    """(integral of |f|^q)^(1/q); q = inf gives the max over region nodes."""
    if not exponent >= 1:
        raise ValueError(f"exponent must be >= 1, got {exponent}")
    if np.isinf(exponent):
        if region is None:
            return float(np.max(np.abs(f.values)))
        region.check_inside(f.grid)
        mask = region.node_mask(f.grid)
        if not mask.any():
            raise GridError(f"{region.kind} region contains no nodes")
        return float(np.max(np.abs(f.values[mask])))
    return integrate(np.abs(f.values) ** exponent, f.grid, region) ** (1.0 / exponent)


def transfinite_fill(values: np.ndarray) -> np.ndarray:
    """Transfinite (Coons) interpolation of the boundary values into the box.

    Only boundary entries of ``values`` are read. The result reproduces them
    and is exact for multilinear functions.
    """
    values = np.asarray(values, dtype=float)
    N = values.ndim
    weights = []
    for n in values.shape:
        s = np.linspace(0.0, 1.0, n)
        weights.append(s)

    def project(v: np.ndarray, axis: int) -> np.ndarray:
        s = weights[axis].reshape([-1 if a == axis else 1 for a in range(N)])
        first = np.take(v, [0], axis=axis)
        last = np.take(v, [-1], axis=axis)
        return (1 - s) * first + s * last

    result = np.zeros_like(values)
    for size in range(1, N + 1):
        sign = 1.0 if size % 2 else -1.0
        for subset in itertools.combinations(range(N), size):
            v = values
            for axis in subset:
                v = project(v, axis)
            result += sign * np.broadcast_to(v, values.shape)
    return result
