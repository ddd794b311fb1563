"""Descent solver for the discrete regularized problem and eps-sweeps."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import spsolve

from app.core.config import settings
from app.core.errors import GridError, NotConvergedError
from app.core.executor import run_jobs
from app.models.problem import BoundaryData, ModelParams, SolveConfig
from app.pde.grid import Grid, NodalField, discrete_gradient, lebesgue_norm, transfinite_fill
from app.pde.model import (
    competitor_energy,
    el_residual,
    energy,
    energy_change,
    evaluate_data,
    hessian_diagonal,
    mollify,
)

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 60
# Floor of the diagonal preconditioner relative to its largest entry.
PRECONDITIONER_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of one discrete minimization.

    Attributes:
        u: Final iterate.
        energy: F_{p,eps}(u), recomputed from scratch.
        residual_max: Max |residual| over interior nodes.
        iterations: Accepted descent steps.
        converged: Whether residual_max <= tol.
        energy_history: Energy after every accepted step, starting with the
            initial iterate's.
        initial_energy: Energy of the first iterate.
        eps: Regularization weight used.
        method: Descent method used.
    """

    u: NodalField
    energy: float
    residual_max: float
    iterations: int
    converged: bool
    energy_history: tuple[float, ...] = field(repr=False)
    initial_energy: float
    eps: float
    method: str


def laplacian_matrix(grid: Grid) -> sparse.csr_matrix:
    """The (2N+1)-point Laplacian on every node (boundary rows are unused)."""
    terms = []
    for axis, n in enumerate(grid.shape):
        d2 = sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)) / grid.h[axis] ** 2
        factors = [sparse.identity(m) for m in grid.shape]
        factors[axis] = d2
        term = factors[0]
        for f in factors[1:]:
            term = sparse.kron(term, f)
        terms.append(term)
    return sparse.csr_matrix(sum(terms))


def harmonic_extension(boundary_values: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete harmonic function with the given boundary values.

    This is the exact minimizer of the discrete energy for p = (2, ..., 2)
    and eps = 0.
    """
    values = np.array(boundary_values, dtype=float).ravel()
    interior = grid.interior_mask.ravel()
    L = laplacian_matrix(grid)
    A = L[interior][:, interior]
    rhs = -L[interior][:, ~interior] @ values[~interior]
    values[interior] = spsolve(A.tocsc(), rhs)
    return values.reshape(grid.shape)


def initial_iterate(cfg: SolveConfig, target: np.ndarray, grid: Grid,
                    initial_field: NodalField | None = None) -> np.ndarray:
    """First iterate with boundary values taken from ``target``."""
    boundary = grid.boundary_mask
    match cfg.initial:
        case "interpolated":
            values = transfinite_fill(target)
        case "harmonic":
            values = harmonic_extension(target, grid)
        case "zero":
            values = np.zeros(grid.shape)
        case "extension":
            values = np.array(target, dtype=float)
        case "given":
            if initial_field is None:
                raise ValueError("initial='given' needs an initial_field")
            if initial_field.grid != grid:
                raise GridError(f"initial field lives on {initial_field.grid.shape}, solving on {grid.shape}")
            values = np.array(initial_field.values, dtype=float)
    values[boundary] = target[boundary]
    return values


def _preconditioned(residual: np.ndarray, diag: np.ndarray, interior: np.ndarray) -> np.ndarray:
    floor = PRECONDITIONER_FLOOR * max(float(np.max(diag)), np.finfo(float).tiny)
    z = np.zeros_like(residual)
    z[interior] = residual[interior] / np.maximum(diag[interior], floor)
    return z


def _line_search(u: NodalField, direction: np.ndarray, slope: float, params: ModelParams,
                 cfg: SolveConfig) -> tuple[float, float] | None:
    """Armijo backtracking from t = 1 with one quadratic-interpolation trial.

    Returns (t, F(u + t d) - F(u)) for the accepted step, None if no step
    of the form shrink^k satisfied the sufficient-decrease test.
    """
    sigma = cfg.sufficient_decrease
    t = 1.0
    change = energy_change(u, direction, t, params)
    if change <= sigma * t * slope:
        return t, change
    curvature = change - slope
    if curvature > 0:
        t = min(max(-slope / (2 * curvature), 0.1), 0.5)
    else:
        t = cfg.shrink
    for _ in range(MAX_BACKTRACKS):
        change = energy_change(u, direction, t, params)
        if change <= sigma * t * slope and change < 0:
            return t, change
        t *= cfg.shrink
    return None


def solve(params: ModelParams, data: BoundaryData, grid: Grid, cfg: SolveConfig | None = None,
          initial_field: NodalField | None = None) -> SolveResult:
    """Minimize the discrete F_{p,eps} with boundary values from the data.

    The data is mollified at radius eps first (when ``cfg.mollify`` and
    eps > 0). Iterates are diagonally preconditioned steepest descent or
    Polak-Ribiere+ nonlinear CG with Armijo backtracking.

    Raises:
        GridError: params, data and grid disagree on dimension or domain.
        NotConvergedError: the residual stayed above tol; carries the result.
    """
    cfg = cfg or SolveConfig()
    if params.N != grid.N:
        raise GridError(f"params have N={params.N}, grid has N={grid.N}")
    if cfg.mollify and params.eps > 0:
        data = mollify(data, params.eps)
    target = evaluate_data(data, grid)
    interior = grid.interior_mask

    u = NodalField(grid, initial_iterate(cfg, target, grid, initial_field))
    initial = energy(u, params)
    history = [initial]
    residual = el_residual(u, params).values
    residual_max = float(np.max(np.abs(residual[interior])))

    direction = previous_r = previous_z = None
    iterations = 0
    while residual_max > cfg.tol and iterations < cfg.max_iters:
        z = _preconditioned(residual, hessian_diagonal(u, params), interior)
        steepest = -z
        if cfg.method == "steepest" or direction is None:
            d = steepest
        else:
            beta = max(0.0, float(np.sum(residual * (z - previous_z))) / float(np.sum(previous_r * previous_z)))
            d = steepest + beta * direction
            if float(np.sum(d * residual)) >= 0:
                d = steepest

        step = _line_search(u, d, float(np.sum(d * residual)), params, cfg)
        if step is None and d is not steepest:
            d = steepest
            step = _line_search(u, d, float(np.sum(d * residual)), params, cfg)
        if step is None:
            logger.warning(f"line search stalled after {iterations} iterations "
                           f"(residual {residual_max:.3e})")
            break

        t, change = step
        u = NodalField(grid, u.values + t * d)
        history.append(history[-1] + change)
        previous_r, previous_z, direction = residual, z, d
        residual = el_residual(u, params).values
        residual_max = float(np.max(np.abs(residual[interior])))
        iterations += 1
        if iterations % 1000 == 0:
            logger.debug(f"iteration {iterations}: energy {history[-1]:.12g}, residual {residual_max:.3e}")

    result = SolveResult(
        u=u,
        energy=energy(u, params),
        residual_max=residual_max,
        iterations=iterations,
        converged=residual_max <= cfg.tol,
        energy_history=tuple(history),
        initial_energy=initial,
        eps=params.eps,
        method=cfg.method,
    )
    if not result.converged:
        message = (f"solve on {grid.shape} with p={params.p.p}, eps={params.eps:g} stopped after "
                   f"{iterations} iterations with residual {residual_max:.3e} > tol {cfg.tol:.3e}")
        logger.warning(message)
        raise NotConvergedError(message, result)
    logger.info(f"solved {grid.shape} p={params.p.p} eps={params.eps:g} in {iterations} iterations, "
                f"energy {result.energy:.12g}")
    return result


# -- eps sweeps --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Solutions for a decreasing sequence of eps and their convergence table.

    Attributes:
        eps: The regularization weights, decreasing.
        results: One SolveResult per eps.
        table: One row per eps with columns eps, energy, residual_max, iters,
            diff_lp1, diff_grad_1..N, diff_rate, competitor_energy,
            energy_bound_ok. Differences are taken against the previous row.
    """

    eps: tuple[float, ...]
    results: tuple[SolveResult, ...]
    table: pd.DataFrame = field(repr=False)

    @property
    def energy_bound_holds(self) -> bool:
        return bool(self.table["energy_bound_ok"].all())


def _check_eps_list(eps_list) -> tuple[float, ...]:
    eps = tuple(float(e) for e in eps_list)
    if not eps:
        raise ValueError("eps list is empty")
    if any(e <= 0 for e in eps):
        raise ValueError(f"eps values must be positive, got {eps}")
    if any(b >= a for a, b in zip(eps, eps[1:], strict=False)):
        raise ValueError(f"eps values must be strictly decreasing, got {eps}")
    return eps


def sweep_eps(params: ModelParams, eps_list, data: BoundaryData, grid: Grid,
              cfg: SolveConfig | None = None, threads: int | None = None) -> SweepResult:
    """Solve for every eps and tabulate successive differences.

    Each solve starts from the mollified data extended to all nodes, which
    is also the competitor bounding its energy.
    """
    eps = _check_eps_list(eps_list)
    cfg = (cfg or SolveConfig()).model_copy(update={"initial": "extension"})
    family = [params.with_eps(e) for e in eps]

    results = run_jobs(lambda p: solve(p, data, grid, cfg), family, threads=threads, label="sweep solve")
    competitors = run_jobs(lambda p: competitor_energy(data, grid, p, mollified=cfg.mollify), family,
                           threads=threads, label="competitor")

    p = params.p
    rows = []
    for k, (e, result, competitor) in enumerate(zip(eps, results, competitors, strict=True)):
        row = {
            "eps": e,
            "energy": result.energy,
            "residual_max": result.residual_max,
            "iters": result.iterations,
            "diff_lp1": math.nan,
            **{f"diff_grad_{i + 1}": math.nan for i in range(p.N)},
            "diff_rate": math.nan,
            "competitor_energy": competitor,
            "energy_bound_ok": result.energy <= competitor + settings.rel_tol * max(1.0, abs(competitor)),
        }
        if k > 0:
            diff = NodalField(grid, result.u.values - results[k - 1].u.values)
            row["diff_lp1"] = lebesgue_norm(diff, p.p_min)
            for i in range(p.N):
                row[f"diff_grad_{i + 1}"] = lebesgue_norm(discrete_gradient(diff, i), p.p[i])
            previous = rows[-1]["diff_lp1"]
            if k > 1 and previous > 0 and row["diff_lp1"] > 0:
                row["diff_rate"] = math.log(row["diff_lp1"] / previous) / math.log(e / eps[k - 1])
        rows.append(row)

    table = pd.DataFrame(rows)
    if not table["energy_bound_ok"].all():
        logger.warning("energy bound against the mollified extension failed for some eps")
    logger.info(f"eps sweep over {len(eps)} values on {grid.shape} finished")
    return SweepResult(eps=eps, results=tuple(results), table=table)
