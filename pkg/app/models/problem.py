"""Problem data: regularization parameters, boundary data, solver settings."""

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.models.exponents import ExponentVector


class ModelParams(BaseModel):
    """Exponents and regularization weight of F_{p,eps}.

    Attributes:
        p: Growth exponents.
        eps: Regularization weight, 0 <= eps <= eps0.
        eps0: Upper cap on eps, in (0, 1).
    """
    model_config = ConfigDict(frozen=True)

    p: ExponentVector
    eps: float = 0.0
    eps0: float = Field(default_factory=lambda: settings.eps0)

    @model_validator(mode="after")
    def _check_eps(self):
        if not 0 < self.eps0 < 1:
            raise ValueError(f"eps0 must lie in (0, 1), got {self.eps0}")
        if not 0 <= self.eps <= self.eps0:
            raise ValueError(f"eps must lie in [0, {self.eps0}], got {self.eps}")
        return self

    @property
    def N(self) -> int:
        return self.p.N

    def with_eps(self, eps: float) -> "ModelParams":
        return ModelParams(p=self.p, eps=eps, eps0=self.eps0)


class TrigMode(BaseModel):
    """One term A sin(2 pi k.x + phase).

    Attributes:
        amplitude: A.
        wavevector: k, in cycles per unit length.
        phase: Phase shift in radians.
    """
    model_config = ConfigDict(frozen=True)

    amplitude: float
    wavevector: tuple[float, ...]
    phase: float = 0.0


class BoundaryData(BaseModel):
    """Dirichlet data on the box [lower, upper].

    Analytic kinds (``affine``, ``trigonometric``, ``random-smooth``) are
    offset + slope.x + sum of trigonometric modes and can be evaluated
    anywhere. ``tabulated`` data carries nodal values on its own grid in
    C order.

    Attributes:
        kind: Kind of data.
        lower: Lower corner of the domain.
        upper: Upper corner of the domain.
        slope: Affine part's gradient (empty means zero).
        offset: Affine part's constant.
        modes: Explicit trigonometric modes.
        seed: Seed of a random-smooth draw.
        n_modes: Number of random modes.
        amplitude: Amplitude scale of random modes.
        max_wavenumber: Largest integer wavenumber of random modes.
        shape: Node counts of tabulated data.
        values: Tabulated nodal values.
        smoothing: Radius of the mollifier already applied (0 if none).
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["affine", "trigonometric", "random-smooth", "tabulated"]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    slope: tuple[float, ...] = ()
    offset: float = 0.0
    modes: tuple[TrigMode, ...] = ()
    seed: int | None = None
    n_modes: int = 6
    amplitude: float = 1.0
    max_wavenumber: int = 3
    shape: tuple[int, ...] = ()
    values: tuple[float, ...] = ()
    smoothing: float = 0.0

    @model_validator(mode="after")
    def _check_kind(self):
        N = len(self.lower)
        if N != len(self.upper) or N == 0:
            raise ValueError("lower and upper must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.lower, self.upper, strict=True)):
            raise ValueError("domain corners must satisfy lower < upper")
        if self.slope and len(self.slope) != N:
            raise ValueError(f"slope has {len(self.slope)} components, domain has N={N}")
        if any(len(m.wavevector) != N for m in self.modes):
            raise ValueError(f"every mode needs a wavevector with {N} components")
        if self.kind == "random-smooth":
            if self.seed is None:
                raise ValueError("random-smooth data needs an explicit seed")
            if self.n_modes < 1 or self.max_wavenumber < 1:
                raise ValueError("random-smooth data needs n_modes >= 1 and max_wavenumber >= 1")
        if self.kind == "tabulated":
            if len(self.shape) != N or math.prod(self.shape) != len(self.values):
                raise ValueError("tabulated data needs shape of length N and prod(shape) values")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("tabulated values must be finite")
        return self

    @property
    def N(self) -> int:
        return len(self.lower)

    @property
    def is_analytic(self) -> bool:
        return self.kind != "tabulated"

    @property
    def slope_vector(self) -> tuple[float, ...]:
        return self.slope or (0.0,) * self.N

    def resolved_modes(self) -> tuple[TrigMode, ...]:
        """Explicit modes plus, for random-smooth data, the seeded draw."""
        if self.kind != "random-smooth":
            return self.modes
        rng = np.random.default_rng(self.seed)
        drawn = []
        while len(drawn) < self.n_modes:
            k = rng.integers(-self.max_wavenumber, self.max_wavenumber + 1, size=self.N)
            if not k.any():
                continue
            amp = self.amplitude * rng.uniform(-1.0, 1.0) / self.n_modes
            phase = rng.uniform(0.0, 2 * math.pi)
            drawn.append(TrigMode(amplitude=float(amp), wavevector=tuple(float(x) for x in k),
                                  phase=float(phase)))
        return self.modes + tuple(drawn)

    @property
    def linf_bound(self) -> float:
        """An upper bound for |data| over the closed domain."""
        if self.kind == "tabulated":
            return max(abs(v) for v in self.values)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        a = np.asarray(self.slope_vector)
        top = self.offset + np.sum(np.maximum(a * lo, a * hi))
        bottom = self.offset + np.sum(np.minimum(a * lo, a * hi))
        affine = max(abs(top), abs(bottom))
        return float(affine + sum(abs(m.amplitude) for m in self.resolved_modes()))


class SolveConfig(BaseModel):
    """Settings of the discrete minimization.

    Attributes:
        tol: Max-norm of the interior residual at termination.
        max_iters: Iteration cap.
        shrink: Backtracking factor in (0, 1).
        sufficient_decrease: Armijo constant in (0, 1/2].
        method: ``nonlinear-cg`` or ``steepest``.
        initial: First iterate: ``interpolated``, ``harmonic``, ``zero``,
            ``extension`` or ``given``.
        mollify: Whether boundary values are taken from data mollified at
            radius eps.
    """
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default_factory=lambda: settings.solver_tol, gt=0)
    max_iters: int = Field(default_factory=lambda: settings.solver_max_iters, ge=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    sufficient_decrease: float = Field(default=1e-4, gt=0, le=0.5)
    method: Literal["nonlinear-cg", "steepest"] = "nonlinear-cg"
    initial: Literal["interpolated", "harmonic", "zero", "extension", "given"] = "interpolated"
    mollify: bool = True
