"""Reports produced by the inequality checkers and refinement studies."""

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class EstimateReport(BaseModel):
    """One evaluation of an a priori inequality on a computed solution.

    Attributes:
        check: Checker name.
        params: Inputs that fix the instance (p, eps, radii, exponents, ...).
        lhs: Left side, >= 0.
        rhs_core: Right side with the unknown constant stripped, >= 0.
        constant: lhs / rhs_core (0 when both vanish, inf when only rhs_core does).
        passed: Outcome of the checker's own acceptance test.
        h: Largest grid spacing of the solve.
        terms: Named pieces of either side.
        violations: Violated preconditions, empty when none.
    """
    model_config = ConfigDict(frozen=True)

    check: str
    params: dict[str, Any] = Field(default_factory=dict)
    lhs: float = Field(ge=0)
    rhs_core: float = Field(ge=0)
    constant: float
    passed: bool
    h: float
    terms: dict[str, float] = Field(default_factory=dict)
    violations: tuple[str, ...] = ()

    @staticmethod
    def ratio(lhs: float, rhs_core: float) -> float:
        if rhs_core > 0:
            return lhs / rhs_core
        return 0.0 if lhs == 0 else math.inf


class RefinementLevel(BaseModel):
    """A study level: grid spacing and the report computed on it."""
    model_config = ConfigDict(frozen=True)

    h: float
    shape: tuple[int, ...]
    report: EstimateReport


class RefinementStudy(BaseModel):
    """A checker evaluated on nested grids.

    Attributes:
        check: Checker name.
        criterion: ``spread`` bounds max/min of the constants over all levels,
            ``growth`` bounds the growth of lhs between the two finest levels.
        tolerance: Allowed relative spread or growth.
        levels: Coarse to fine.
        passed: Criterion met, every level passed, no violations.
        violations: Violated preconditions of the whole study.
    """
    model_config = ConfigDict(frozen=True)

    check: str
    criterion: Literal["spread", "growth"]
    tolerance: float
    levels: tuple[RefinementLevel, ...]
    passed: bool
    violations: tuple[str, ...] = ()

    @property
    def constants(self) -> list[float]:
        return [level.report.constant for level in self.levels]

    @property
    def lhs_values(self) -> list[float]:
        return [level.report.lhs for level in self.levels]

    @property
    def ratios(self) -> list[float]:
        """Successive ratios of the empirical constants."""
        c = self.constants
        return [b / a if a > 0 else math.nan for a, b in zip(c, c[1:], strict=False)]
