"""Refinement studies and dispatch of configured checks.

A study evaluates one checker on nested grids and accepts when the
measured quantity is stable under refinement:

* ``spread``: max/min of the empirical constants over all levels is at
  most 1 + ``settings.study_spread_tol``;
* ``growth``: lhs on the finest level exceeds the previous one by at most
  ``settings.final_growth_tol``.
"""
import logging
import math
from collections.abc import Callable

from app.core.config import settings
from app.core.executor import run_jobs
from app.models.experiment import (
    CaccioppoliCheck,
    CheckSpec,
    HigherDifferentiabilityCheck,
    HigherIntegrabilityCheck,
    LipschitzCheck,
    PowerCaccioppoliCheck,
    SelfImprovingCheck,
    WeirdCaccioppoliCheck,
)
from app.models.exponents import ExponentVector
from app.models.problem import BoundaryData, ModelParams, SolveConfig
from app.models.report import EstimateReport, RefinementLevel, RefinementStudy
from app.pde.grid import Grid, RegionPair, assert_nested
from app.pde.solver import SolveResult, solve
from app.theory.exponents import compute_moser_schedule
from app.verify.checks import (
    check_caccioppoli,
    check_higher_differentiability,
    check_higher_integrability,
    check_lipschitz_level,
    check_power_caccioppoli,
    check_self_improving,
    check_weird_caccioppoli,
)

logger = logging.getLogger(__name__)

# Measured values at or below this are treated as exact zeros.
ZERO_FLOOR = 1e-18

GROWTH_CHECKS = frozenset({"lipschitz", "higher_integrability", "higher_differentiability"})


def _floored(x: float) -> float:
    return 0.0 if abs(x) <= ZERO_FLOOR else x


def spread_ok(values: list[float], tol: float) -> bool:
    values = [_floored(v) for v in values]
    if all(v == 0 for v in values):
        return True
    if any(v == 0 or not math.isfinite(v) for v in values):
        return False
    return max(values) / min(values) <= 1 + tol


def growth_ok(values: list[float], tol: float) -> bool:
    if len(values) < 2:
        return True
    previous, last = _floored(values[-2]), _floored(values[-1])
    if not math.isfinite(last):
        return False
    return last <= (1 + tol) * previous


def refinement_study(check: str, evaluate: Callable[[Grid], EstimateReport], grids: list[Grid],
                     criterion: str | None = None, threads: int | None = None,
                     extra_violations: tuple[str, ...] = ()) -> RefinementStudy:
    """Run ``evaluate`` on each nested grid and apply the stability criterion."""
    if len(grids) < 2:
        raise ValueError(f"a refinement study needs at least two grids, got {len(grids)}")
    assert_nested(grids)
    criterion = criterion or ("growth" if check in GROWTH_CHECKS else "spread")
    reports = run_jobs(evaluate, grids, threads=threads, label=f"{check} level")

    levels = tuple(RefinementLevel(h=g.h_max, shape=g.shape, report=r) for g, r in zip(grids, reports, strict=True))
    if criterion == "growth":
        tolerance = settings.final_growth_tol
        stable = growth_ok([r.lhs for r in reports], tolerance)
    else:
        tolerance = settings.study_spread_tol
        stable = spread_ok([r.constant for r in reports], tolerance)

    violations = tuple(dict.fromkeys(extra_violations + tuple(v for r in reports for v in r.violations)))
    passed = stable and all(r.passed for r in reports) and not violations
    study = RefinementStudy(check=check, criterion=criterion, tolerance=tolerance, levels=levels,
                            passed=passed, violations=violations)
    logger.info(f"{check} study over {len(grids)} levels: {criterion} "
                f"{'stable' if stable else 'unstable'}, passed={passed}")
    return study


def lipschitz_defaults(p: ExponentVector) -> tuple[float, float]:
    """(gamma, Theta) for the Lipschitz estimate.

    N = 2 uses gamma = p_N + 2 and Theta = 1; otherwise gamma_{J-1} and
    Theta from the Moser schedule.
    """
    if p.N == 2:
        return p.p_max + 2, 1.0
    schedule = compute_moser_schedule(p)
    return schedule.gamma_at(schedule.J - 1), schedule.theta


def check_lipschitz_estimate(params: ModelParams, data: BoundaryData, cfg: SolveConfig, grids: list[Grid],
                             regions: RegionPair, gamma: float | None = None, theta: float | None = None,
                             threads: int | None = None) -> RefinementStudy:
    """Solve on every grid and study the sup of the max-gradient field on B_r0."""
    default_gamma, default_theta = lipschitz_defaults(params.p)
    gamma = default_gamma if gamma is None else gamma
    theta = default_theta if theta is None else theta

    def level(grid: Grid) -> EstimateReport:
        return check_lipschitz_level(solve(params, data, grid, cfg), params, regions, gamma, theta)

    return refinement_study("lipschitz", level, grids, criterion="growth", threads=threads)


def run_check(spec: CheckSpec, result: SolveResult, params: ModelParams, q0: float,
              center: tuple[float, ...]) -> EstimateReport:
    """Evaluate a configured check on one solve.

    Check specs use 1-based axes; ``center`` is used for regions without one.
    """
    match spec:
        case CaccioppoliCheck():
            return check_caccioppoli(result, params, spec.cutoff(center), j=spec.j - 1,
                                     phi_power=spec.phi_power, alpha=spec.alpha)
        case WeirdCaccioppoliCheck():
            return check_weird_caccioppoli(result, params, spec.cutoff(center), s=spec.s_exp, m=spec.m_exp,
                                           j=spec.j - 1, k=spec.k - 1)
        case PowerCaccioppoliCheck():
            return check_power_caccioppoli(result, params, spec.cutoff(center), ell0=spec.ell0, k=spec.k - 1)
        case SelfImprovingCheck():
            return check_self_improving(result, params, spec.regions(center), k=spec.k - 1, alpha=spec.alpha)
        case LipschitzCheck():
            gamma, theta = lipschitz_defaults(params.p)
            return check_lipschitz_level(result, params, spec.regions(center),
                                         gamma if spec.gamma is None else spec.gamma,
                                         theta if spec.theta is None else spec.theta)
        case HigherIntegrabilityCheck():
            return check_higher_integrability(result, params.p, q0 if spec.q0 is None else spec.q0,
                                              spec.subregion(center))
        case HigherDifferentiabilityCheck():
            return check_higher_differentiability(result, params.p, spec.subregion(center))
    raise ValueError(f"unknown check {spec!r}")


def run_study(spec: CheckSpec, params: ModelParams, data: BoundaryData, cfg: SolveConfig, grids: list[Grid],
              q0: float, center: tuple[float, ...], threads: int | None = None,
              solutions: dict[Grid, SolveResult] | None = None) -> RefinementStudy:
    """Evaluate the configured check on every grid.

    Grids found in ``solutions`` reuse that solve; the others are solved here.
    """
    solutions = solutions or {}

    def level(grid: Grid) -> EstimateReport:
        result = solutions.get(grid) or solve(params, data, grid, cfg)
        return run_check(spec, result, params, q0, center)

    return refinement_study(spec.name, level, grids, threads=threads)
