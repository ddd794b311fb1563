"""Discrete evaluation of the a priori inequalities on computed solutions.

Every checker assembles the two sides of one inequality from the discrete
gradient and Hessian of a converged solution and returns an
EstimateReport. Right sides are reported without their unknown constant
(``rhs_core``); the ratio lhs/rhs_core is the empirical constant.

Axes are 0-based here; reports record them 1-based.
"""
import logging

import numpy as np

from app.core.config import settings
from app.core.errors import RangeError
from app.models.exponents import ExponentVector
from app.models.problem import ModelParams
from app.models.report import EstimateReport
from app.pde.grid import (
    CutoffSpec,
    FieldDerivatives,
    RegionPair,
    SubRegion,
    integrate,
    make_cutoff,
    max_gradient_field,
)
from app.pde.model import g_second
from app.pde.solver import SolveResult

logger = logging.getLogger(__name__)


def _require_converged(result: SolveResult) -> None:
    if not result.converged:
        raise ValueError(
            f"checks need a converged solve (residual {result.residual_max:.3e} after {result.iterations} iterations)"
        )


def _check_axis(axis: int, N: int, name: str) -> None:
    if not 0 <= axis < N:
        raise ValueError(f"{name}={axis} outside 0..{N - 1}")


def _base_params(result: SolveResult, params: ModelParams) -> dict:
    return {"p": list(params.p.p), "eps": params.eps, "shape": list(result.u.grid.shape)}


def _cutoff_params(eta: CutoffSpec) -> dict:
    return {"cutoff_center": list(eta.center), "cutoff_t": eta.t, "cutoff_s": eta.s}


def _report(check: str, result: SolveResult, params: dict, lhs: float, rhs_core: float,
            acceptance: float | None = None, terms: dict | None = None,
            violations: tuple[str, ...] = ()) -> EstimateReport:
    constant = EstimateReport.ratio(lhs, rhs_core)
    if acceptance is None:
        passed = bool(np.isfinite(lhs))
    else:
        params = {**params, "acceptance": acceptance}
        passed = lhs <= acceptance * rhs_core
    passed = passed and not violations
    report = EstimateReport(
        check=check,
        params=params,
        lhs=lhs,
        rhs_core=rhs_core,
        constant=constant,
        passed=passed,
        h=result.u.grid.h_max,
        terms=terms or {},
        violations=violations,
    )
    logger.debug(f"{check}: lhs={lhs:.6g} rhs_core={rhs_core:.6g} constant={constant:.6g} passed={passed}")
    return report


def _curvatures(d: FieldDerivatives, params: ModelParams) -> list[np.ndarray]:
    return [g_second(i, d.grad[i], params) for i in range(params.N)]


def caccioppoli_constant(phi_power: float = 1.0, alpha: float | None = None) -> float:
    """Explicit constant of the Caccioppoli inequality.

    4 phi^2/(2 phi - 1)^2 for Phi(t) = |t|^(phi-1) t, and 4/(1 + alpha)^2
    for the weight |u_{x_j}|^alpha.
    """
    if alpha is not None:
        return 4.0 / (1.0 + alpha) ** 2
    return 4.0 * phi_power**2 / (2.0 * phi_power - 1.0) ** 2


def check_caccioppoli(result: SolveResult, params: ModelParams, eta: CutoffSpec, j: int = 0,
                      phi_power: float = 1.0, alpha: float | None = None) -> EstimateReport:
    """Caccioppoli inequality for Phi(u_{x_j}) or its weighted variant.

    Without ``alpha``::

        sum_i int g''_i |(Phi(u_j))_{x_i}|^2 eta^2  <=  C sum_i int g''_i |Phi(u_j)|^2 eta_{x_i}^2

    with Phi(t) = |t|^(phi_power-1) t. With ``alpha`` in (-1, inf) the left
    side is sum_i int g''_i u_{ij}^2 |u_j|^alpha eta^2 (set to zero where
    u_j vanishes when alpha < 0) and the right side carries |u_j|^(alpha+2).
    Passes when lhs <= (acceptance/4) * explicit constant * rhs_core.

    Raises:
        ValueError: non-converged input, bad axis or exponent.
        GridError: the cutoff is not resolved by the grid.
    """
    _require_converged(result)
    _check_axis(j, params.N, "j")
    if alpha is None and phi_power < 1:
        raise ValueError(f"phi_power must be >= 1, got {phi_power}")
    if alpha is not None and alpha <= -1:
        raise ValueError(f"alpha must be > -1, got {alpha}")

    u = result.u
    cutoff = make_cutoff(eta, u.grid)
    d = FieldDerivatives.of(u)
    curv = _curvatures(d, params)
    a = np.abs(d.grad[j])
    eta2 = cutoff.eta.values**2

    if alpha is None:
        weight = phi_power**2 * a ** (2 * phi_power - 2)
        rhs_weight = a ** (2 * phi_power)
    else:
        with np.errstate(divide="ignore"):
            weight = np.where(a < settings.degenerate_threshold, 0.0, a**alpha) if alpha < 0 else a**alpha
        rhs_weight = a ** (alpha + 2)

    lhs = sum(integrate(curv[i] * d.hess[i][j] ** 2 * weight * eta2, u.grid) for i in range(params.N))
    rhs = sum(integrate(curv[i] * rhs_weight * cutoff.gradient[i] ** 2, u.grid) for i in range(params.N))

    explicit = caccioppoli_constant(phi_power, alpha)
    info = {**_base_params(result, params), **_cutoff_params(eta), "j": j + 1, "explicit_constant": explicit}
    if alpha is None:
        info["phi_power"] = phi_power
    else:
        info["alpha"] = alpha
    return _report("caccioppoli", result, info, lhs, rhs,
                   acceptance=settings.acceptance_constant / 4 * explicit,
                   terms={"cutoff_constant": cutoff.constant})


def check_weird_caccioppoli(result: SolveResult, params: ModelParams, eta: CutoffSpec, s: float = 1.0,
                            m: float = 1.0, j: int = 0, k: int = 0) -> EstimateReport:
    """Staircase Caccioppoli inequality with Phi(t) = t^(s-1), Psi(t) = t^m.

    lhs = sum_i int g''_i u_{ij}^2 |u_j|^(2s-2) |u_k|^(2m) eta^2, and the
    right side is the sum of

    * sum_i int g''_i |u_j|^(2s+2m) |grad eta|^2,
    * (m+1) sum_i int g''_i |u_k|^(2s+2m) |grad eta|^2,
    * sum_i int g''_i u_{ij}^2 |u_j|^(4s-2) |u_k|^(2m-2s) eta^2.
    """
    _require_converged(result)
    _check_axis(j, params.N, "j")
    _check_axis(k, params.N, "k")
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")

    u = result.u
    cutoff = make_cutoff(eta, u.grid)
    d = FieldDerivatives.of(u)
    curv = _curvatures(d, params)
    aj, ak = np.abs(d.grad[j]), np.abs(d.grad[k])
    eta2 = cutoff.eta.values**2
    grad_eta2 = sum(g**2 for g in cutoff.gradient)

    lhs = rhs_first = rhs_second = rhs_third = 0.0
    for i in range(params.N):
        uij2 = d.hess[i][j] ** 2
        lhs += integrate(curv[i] * uij2 * aj ** (2 * s - 2) * ak ** (2 * m) * eta2, u.grid)
        rhs_first += integrate(curv[i] * aj ** (2 * s + 2 * m) * grad_eta2, u.grid)
        rhs_second += (m + 1) * integrate(curv[i] * ak ** (2 * s + 2 * m) * grad_eta2, u.grid)
        rhs_third += integrate(curv[i] * uij2 * aj ** (4 * s - 2) * ak ** (2 * m - 2 * s) * eta2, u.grid)

    info = {**_base_params(result, params), **_cutoff_params(eta), "s": s, "m": m, "j": j + 1, "k": k + 1}
    return _report("weird_caccioppoli", result, info, lhs, rhs_first + rhs_second + rhs_third,
                   acceptance=settings.acceptance_constant,
                   terms={"gradient_j": rhs_first, "gradient_k": rhs_second, "hessian": rhs_third})


def check_power_caccioppoli(result: SolveResult, params: ModelParams, eta: CutoffSpec, ell0: int = 1,
                            k: int = 0) -> EstimateReport:
    """Caccioppoli inequality for V = |u_k|^(q + (p_k-2)/2) u_k with q = 2^ell0 - 1.

    lhs = int |grad V|^2 eta^2 and rhs_core =
    q^5 [sum_{i,j} int g''_i |u_j|^(2q+2) |grad eta|^2 + sum_i int g''_i |u_k|^(2q+2) |grad eta|^2].

    Raises:
        RangeError: 2q + p_N exceeds ``settings.power_exponent_cap``.
    """
    _require_converged(result)
    _check_axis(k, params.N, "k")
    if ell0 < 1:
        raise ValueError(f"ell0 must be a positive integer, got {ell0}")
    q = 2**ell0 - 1
    if 2 * q + params.p.p_max > settings.power_exponent_cap:
        raise RangeError(
            f"2q + p_N = {2 * q + params.p.p_max:g} exceeds the cap {settings.power_exponent_cap:g} (ell0={ell0})"
        )

    u = result.u
    cutoff = make_cutoff(eta, u.grid)
    d = FieldDerivatives.of(u)
    curv = _curvatures(d, params)
    p_k = params.p.p[k]
    ak = np.abs(d.grad[k])
    factor = (q + p_k / 2) * ak ** (q + (p_k - 2) / 2)
    eta2 = cutoff.eta.values**2
    grad_eta2 = sum(g**2 for g in cutoff.gradient)

    lhs = sum(integrate((factor * d.hess[k][j]) ** 2 * eta2, u.grid) for j in range(params.N))
    cross = sum(
        integrate(curv[i] * np.abs(d.grad[j]) ** (2 * q + 2) * grad_eta2, u.grid)
        for i in range(params.N)
        for j in range(params.N)
    )
    own = sum(integrate(curv[i] * ak ** (2 * q + 2) * grad_eta2, u.grid) for i in range(params.N))

    info = {**_base_params(result, params), **_cutoff_params(eta), "ell0": ell0, "q": q, "k": k + 1}
    return _report("power_caccioppoli", result, info, lhs, q**5 * (cross + own),
                   acceptance=settings.acceptance_constant, terms={"cross": cross, "own": own})


def check_self_improving(result: SolveResult, params: ModelParams, regions: RegionPair, k: int = 0,
                         alpha: float = 0.0) -> EstimateReport:
    """Self-improving integrability of u_{x_k}.

    With e = p_k + 2 + alpha and L = max |u|::

        int_{B_r0} |u_k|^e  <=  C R0^N ((L/(R0-r0))^e + eps0)
                               + C (L/(R0-r0))^(2e/p_k) int_{B_R0} sum_{i != k} |u_i|^((p_i-2) e/p_k)
    """
    _require_converged(result)
    _check_axis(k, params.N, "k")
    if alpha <= -1:
        raise ValueError(f"alpha must be > -1, got {alpha}")

    u = result.u
    grid = u.grid
    regions.outer.check_inside(grid)
    d = FieldDerivatives.of(u)
    p = params.p.p
    e = p[k] + 2 + alpha
    sup = float(np.max(np.abs(u.values)))
    scale = sup / (regions.R0 - regions.r0)

    lhs = integrate(np.abs(d.grad[k]) ** e, grid, regions.inner)
    first = regions.R0**grid.N * (scale**e + params.eps0)
    others = sum(
        integrate(np.abs(d.grad[i]) ** ((p[i] - 2) * e / p[k]), grid, regions.outer)
        for i in range(params.N) if i != k
    )
    second = scale ** (2 * e / p[k]) * others

    info = {**_base_params(result, params), "center": list(regions.center), "r0": regions.r0,
            "R0": regions.R0, "k": k + 1, "alpha": alpha, "exponent": e}
    return _report("self_improving", result, info, lhs, first + second,
                   acceptance=settings.acceptance_constant,
                   terms={"sup_norm": sup, "radial": first, "transverse": second})


def check_lipschitz_level(result: SolveResult, params: ModelParams, regions: RegionPair, gamma: float,
                          theta: float) -> EstimateReport:
    """L-infinity bound of the max-gradient field on one grid.

    lhs = max over B_r0 of max_k |u_{x_k}|; rhs_core = (int_{B_R0} U^gamma + 1)^(Theta/gamma),
    with (R0 - r0)^(-beta) folded into the constant. gamma < p_N + 2 is
    reported as a violation.
    """
    _require_converged(result)
    if gamma <= 0 or theta <= 0:
        raise ValueError(f"gamma and Theta must be positive, got gamma={gamma}, Theta={theta}")
    violations = ()
    if gamma < params.p.p_max + 2:
        violations = (f"gamma={gamma:g} is below p_N + 2 = {params.p.p_max + 2:g}",)
        logger.warning(violations[0])

    u = result.u
    grid = u.grid
    regions.outer.check_inside(grid)
    U = max_gradient_field(u).values
    inner = regions.inner.node_mask(grid)
    if not inner.any():
        raise ValueError(f"B_r0 with r0={regions.r0} contains no nodes")
    lhs = float(np.max(U[inner]))
    integral = integrate(U**gamma, grid, regions.outer)
    rhs = (integral + 1.0) ** (theta / gamma)

    info = {**_base_params(result, params), "center": list(regions.center), "r0": regions.r0,
            "R0": regions.R0, "gamma": gamma, "theta": theta}
    return _report("lipschitz", result, info, lhs, rhs,
                   terms={"integral": integral}, violations=violations)


def check_higher_integrability(result: SolveResult, p: ExponentVector, q0: float,
                               region: SubRegion) -> EstimateReport:
    """lhs = sum_i int_region |u_{x_i}|^(p_i q0); boundedness is judged by a study."""
    _require_converged(result)
    if q0 < 2:
        raise ValueError(f"q0 must be >= 2, got {q0}")
    u = result.u
    region.check_inside(u.grid)
    d = FieldDerivatives.of(u)
    terms = {
        f"axis_{i + 1}": integrate(np.abs(d.grad[i]) ** (p.p[i] * q0), u.grid, region)
        for i in range(p.N)
    }
    info = {"p": list(p.p), "shape": list(u.grid.shape), "q0": q0, "region": region.kind}
    return _report("higher_integrability", result, info, sum(terms.values()), 1.0, terms=terms)


def check_higher_differentiability(result: SolveResult, p: ExponentVector, region: SubRegion) -> EstimateReport:
    """Difference quotients of V_i = |u_{x_i}|^((p_i-2)/2) u_{x_i}.

    lhs = sum_i sum_j ||(V_i(x + h e_j) - V_i(x))/h_j||^2_{L^2(region)}.

    Raises:
        GridError: the region is closer than two cells to the boundary.
    """
    _require_converged(result)
    u = result.u
    grid = u.grid
    region.check_inside(grid, margin=2 * grid.h_max)
    d = FieldDerivatives.of(u)

    terms = {}
    for i in range(p.N):
        V = np.abs(d.grad[i]) ** ((p.p[i] - 2) / 2) * d.grad[i]
        total = 0.0
        for j in range(grid.N):
            # last slice lies outside the region (margin >= 2h)
            quotient = np.diff(V, axis=j, append=np.take(V, [-1], axis=j)) / grid.h[j]
            total += integrate(quotient**2, grid, region)
        terms[f"V_{i + 1}"] = total

    info = {"p": list(p.p), "shape": list(grid.shape), "region": region.kind}
    return _report("higher_differentiability", result, info, sum(terms.values()), 1.0, terms=terms)
