"""Experiment files: problem, data, discretization, solver, checks, output.

An experiment file is a flat INI file; every section validates into one
of the models below. List values are comma separated (``p = 2, 6``).
Check sections are named ``[check.<name>]`` and use 1-based axis indices.
"""

from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, FilePath, field_validator, model_validator

from app.core.config import settings
from app.models.exponents import ExponentVector
from app.models.problem import BoundaryData, SolveConfig, TrigMode
from app.pde.grid import CutoffSpec, Grid, RegionPair, SubRegion


def _split_csv(value):
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


def _parse_exponents(value):
    if isinstance(value, str):
        return ExponentVector.parse(value)
    if isinstance(value, (list, tuple)):
        return ExponentVector(p=tuple(value))
    return value


CsvFloats = Annotated[tuple[float, ...], BeforeValidator(_split_csv)]
CsvInts = Annotated[tuple[int, ...], BeforeValidator(_split_csv)]
CsvStrs = Annotated[tuple[str, ...], BeforeValidator(_split_csv)]
Exponents = Annotated[ExponentVector, BeforeValidator(_parse_exponents)]


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# -- checks ----------------------------------------------------------------------


class _CutoffCheck(_Section):
    center: CsvFloats = ()
    t: float = 0.125
    s: float = 0.375

    def cutoff(self, default_center: tuple[float, ...]) -> CutoffSpec:
        return CutoffSpec(center=self.center or default_center, t=self.t, s=self.s)


class _PairCheck(_Section):
    center: CsvFloats = ()
    r0: float = 0.125
    R0: float = 0.375

    def regions(self, default_center: tuple[float, ...]) -> RegionPair:
        return RegionPair(center=self.center or default_center, r0=self.r0, R0=self.R0)


class _RegionCheck(_Section):
    region: Literal["ball", "annulus", "box"] = "ball"
    center: CsvFloats = ()
    radius: float = 0.375
    inner_radius: float = 0.0
    lower: CsvFloats = ()
    upper: CsvFloats = ()

    def subregion(self, default_center: tuple[float, ...]) -> SubRegion:
        if self.region == "box":
            return SubRegion.box(self.lower, self.upper)
        return SubRegion(kind=self.region, center=self.center or default_center, radius=self.radius,
                         inner_radius=self.inner_radius)


class CaccioppoliCheck(_CutoffCheck):
    """Caccioppoli inequality for Phi(u_{x_j}), or its weighted variant when alpha is set."""
    name: Literal["caccioppoli"] = "caccioppoli"
    j: int = Field(default=1, ge=1)
    phi_power: float = Field(default=1.0, ge=1)
    alpha: float | None = Field(default=None, gt=-1)


class WeirdCaccioppoliCheck(_CutoffCheck):
    """Staircase inequality; s_exp and m_exp are the powers s <= m."""
    name: Literal["weird_caccioppoli"] = "weird_caccioppoli"
    j: int = Field(default=1, ge=1)
    k: int = Field(default=1, ge=1)
    s_exp: float = Field(default=1.0, ge=1)
    m_exp: float = Field(default=1.0, ge=1)

    @model_validator(mode="after")
    def _check_order(self):
        if self.m_exp < self.s_exp:
            raise ValueError(f"need s_exp <= m_exp, got {self.s_exp} > {self.m_exp}")
        return self


class PowerCaccioppoliCheck(_CutoffCheck):
    name: Literal["power_caccioppoli"] = "power_caccioppoli"
    k: int = Field(default=1, ge=1)
    ell0: int = Field(default=1, ge=1)


class SelfImprovingCheck(_PairCheck):
    name: Literal["self_improving"] = "self_improving"
    k: int = Field(default=1, ge=1)
    alpha: float = Field(default=0.0, gt=-1)


class LipschitzCheck(_PairCheck):
    """gamma and theta default to the exponent ladder's values when unset."""
    name: Literal["lipschitz"] = "lipschitz"
    gamma: float | None = Field(default=None, gt=0)
    theta: float | None = Field(default=None, gt=0)


class HigherIntegrabilityCheck(_RegionCheck):
    """q0 defaults to the problem's q0."""
    name: Literal["higher_integrability"] = "higher_integrability"
    q0: float | None = Field(default=None, ge=2)


class HigherDifferentiabilityCheck(_RegionCheck):
    name: Literal["higher_differentiability"] = "higher_differentiability"


CheckSpec = Annotated[
    CaccioppoliCheck
    | WeirdCaccioppoliCheck
    | PowerCaccioppoliCheck
    | SelfImprovingCheck
    | LipschitzCheck
    | HigherIntegrabilityCheck
    | HigherDifferentiabilityCheck,
    Field(discriminator="name"),
]

CHECK_NAMES = (
    "caccioppoli",
    "weird_caccioppoli",
    "power_caccioppoli",
    "self_improving",
    "lipschitz",
    "higher_integrability",
    "higher_differentiability",
)


# -- sections ----------------------------------------------------------------------


class ProblemSection(_Section):
    p: Exponents
    q0: float = Field(default=2.0, ge=2)
    lower: CsvFloats = ()
    upper: CsvFloats = ()
    eps0: float = Field(default_factory=lambda: settings.eps0, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_domain(self):
        for name in ("lower", "upper"):
            value = getattr(self, name)
            if value and len(value) != self.p.N:
                raise ValueError(f"{name} has {len(value)} components, p has N={self.p.N}")
        return self

    @property
    def domain(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return self.lower or (0.0,) * self.p.N, self.upper or (1.0,) * self.p.N

    @property
    def center(self) -> tuple[float, ...]:
        lower, upper = self.domain
        return tuple((a + b) / 2 for a, b in zip(lower, upper, strict=True))


class DataSection(_Section):
    """Boundary data keys.

    Trigonometric modes are given as parallel lists: ``mode_amplitudes``,
    ``mode_phases`` and ``mode_wavevectors`` (vectors separated by ``;``).
    Tabulated data is read from ``file``, which must exist.
    """
    kind: Literal["affine", "trigonometric", "random-smooth", "tabulated"] = "affine"
    slope: CsvFloats = ()
    offset: float = 0.0
    mode_amplitudes: CsvFloats = ()
    mode_wavevectors: str = ""
    mode_phases: CsvFloats = ()
    seed: int | None = None
    n_modes: int = Field(default=6, ge=1)
    amplitude: float = 1.0
    max_wavenumber: int = Field(default=3, ge=1)
    file: FilePath | None = None

    @model_validator(mode="after")
    def _check_modes(self):
        vectors = [v for v in self.mode_wavevectors.split(";") if v.strip()]
        if len(vectors) != len(self.mode_amplitudes):
            raise ValueError(f"{len(self.mode_amplitudes)} amplitudes but {len(vectors)} wavevectors")
        if self.mode_phases and len(self.mode_phases) != len(self.mode_amplitudes):
            raise ValueError("mode_phases must match mode_amplitudes in length")
        if self.kind == "tabulated" and self.file is None:
            raise ValueError("tabulated data needs a file")
        return self

    def modes(self) -> tuple[TrigMode, ...]:
        vectors = [v for v in self.mode_wavevectors.split(";") if v.strip()]
        phases = self.mode_phases or (0.0,) * len(vectors)
        return tuple(
            TrigMode(amplitude=a, wavevector=tuple(float(x) for x in v.split(",")), phase=ph)
            for a, v, ph in zip(self.mode_amplitudes, vectors, phases, strict=True)
        )

    def boundary_data(self, lower: tuple[float, ...], upper: tuple[float, ...],
                      seed: int | None = None) -> BoundaryData:
        """Analytic data on the box; ``seed`` overrides the section's seed."""
        return BoundaryData(
            kind=self.kind,
            lower=lower,
            upper=upper,
            slope=self.slope,
            offset=self.offset,
            modes=self.modes(),
            seed=self.seed if seed is None else seed,
            n_modes=self.n_modes,
            amplitude=self.amplitude,
            max_wavenumber=self.max_wavenumber,
        )


class DiscretizationSection(_Section):
    resolutions: CsvInts = (17,)

    @field_validator("resolutions")
    @classmethod
    def _check_increasing(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value:
            raise ValueError("need at least one resolution")
        if any(n < 3 for n in value):
            raise ValueError(f"resolutions need at least 3 nodes, got {value}")
        if any(b <= a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError(f"resolutions must be increasing, got {value}")
        return value

    def grids(self, lower: tuple[float, ...], upper: tuple[float, ...]) -> list[Grid]:
        return [Grid(lower, upper, (n,) * len(lower)) for n in self.resolutions]


class SolverSection(_Section):
    tol: float = Field(default_factory=lambda: settings.solver_tol, gt=0)
    max_iters: int = Field(default_factory=lambda: settings.solver_max_iters, ge=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    sufficient_decrease: float = Field(default=1e-4, gt=0, le=0.5)
    method: Literal["nonlinear-cg", "steepest"] = "nonlinear-cg"
    initial: Literal["interpolated", "harmonic", "zero", "extension"] = "interpolated"
    mollify: bool = True
    eps: CsvFloats = (0.01,)

    @field_validator("eps")
    @classmethod
    def _check_decreasing(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("need at least one eps")
        if any(e < 0 for e in value):
            raise ValueError(f"eps values must be non-negative, got {value}")
        if any(b >= a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError(f"eps values must be strictly decreasing, got {value}")
        return value

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            tol=self.tol,
            max_iters=self.max_iters,
            shrink=self.shrink,
            sufficient_decrease=self.sufficient_decrease,
            method=self.method,
            initial=self.initial,
            mollify=self.mollify,
        )


class ChecksSection(_Section):
    names: CsvStrs = ()


class OutputSection(_Section):
    directory: Path | None = None
    formats: CsvStrs = ("json", "csv", "binary", "markdown")
    emit_plot_data: bool = False

    @field_validator("formats")
    @classmethod
    def _check_formats(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        unknown = set(value) - {"json", "csv", "binary", "markdown"}
        if unknown:
            raise ValueError(f"unknown formats {sorted(unknown)}")
        return value


class ExperimentConfig(BaseModel):
    """A validated experiment file.

    Attributes:
        problem: Exponents, q0 and domain.
        data: Boundary data.
        discretization: Node counts per axis, one grid per entry.
        solver: Solver settings and the eps list.
        checks: Checks in the order named by ``[checks] names``.
        output: Output directory and formats.
    """
    model_config = ConfigDict(frozen=True)

    problem: ProblemSection
    data: DataSection = DataSection()
    discretization: DiscretizationSection = DiscretizationSection()
    solver: SolverSection = SolverSection()
    checks: tuple[CheckSpec, ...] = ()
    output: OutputSection = OutputSection()

    def grids(self) -> list[Grid]:
        return self.discretization.grids(*self.problem.domain)
