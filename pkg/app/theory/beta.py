"""The multiply recursive integrability scheme and its stabilization.

For a fixed outer index j the vector (beta_{j-1}, ..., beta_N) starts from
the level-0 exponents and is swept from i = N down to i = j-1; each
component is capped by p_i q_{j-2}, so the scheme climbs monotonically to
the fixpoint p_i q_{j-2} in finitely many levels.
"""
import logging
import math

from app.core.config import settings
from app.core.errors import NotStabilizedError
from app.models.beta import BetaState, BetaTrace
from app.models.exponents import ExponentVector, QSequence
from app.theory.exponents import compute_q_sequence

logger = logging.getLogger(__name__)


def _check_outer_index(p: ExponentVector, j: int) -> None:
    if not 2 <= j <= p.N:
        raise ValueError(f"j must lie in 2..{p.N}, got {j}")


def _at_target(beta: tuple[float, ...], target: tuple[float, ...], rel_tol: float) -> bool:
    return all(math.isclose(b, t, rel_tol=rel_tol, abs_tol=0.0) for b, t in zip(beta, target, strict=True))


def _quotient(beta_k: float, p_k: float) -> float:
    # beta_k/(p_k - 2) with the +inf convention
    return math.inf if p_k == 2 else beta_k / (p_k - 2)


def beta_init(p: ExponentVector, q: QSequence, j: int, rel_tol: float | None = None) -> BetaState:
    """Level-0 state for outer index j.

    beta_{j-1} = p_{j-1} min{q_{j-2}, q_{j-1} q_N} and beta_i = p_i q_{j-1}
    for i >= j.
    """
    _check_outer_index(p, j)
    rel_tol = settings.rel_tol if rel_tol is None else rel_tol
    cap = q.at(j - 2)
    first = p.component(j - 1) * min(cap, q.at(j - 1) * q.at(p.N))
    rest = [p.component(i) * q.at(j - 1) for i in range(j, p.N + 1)]
    beta = (first, *rest)
    target = tuple(p.component(i) * cap for i in range(j - 1, p.N + 1))
    return BetaState(j=j, level=0, beta=beta, target=target,
                     stabilized=_at_target(beta, target, rel_tol))


def beta_step(s: BetaState, p: ExponentVector, q: QSequence, rel_tol: float | None = None) -> BetaState:
    """Advance one level by an in-place sweep i = N, N-1, ..., j-1.

    beta_i^(l+1) = p_i min{q_{j-2}, min_{k != i} beta_k / (p_k - 2)}, where
    components k > i are already at level l+1 and k < i still at level l.
    """
    _check_outer_index(p, s.j)
    rel_tol = settings.rel_tol if rel_tol is None else rel_tol
    cap = q.at(s.j - 2)
    first = s.first_index
    exps = [p.component(i) for i in range(first, p.N + 1)]
    values = list(s.beta)

    for local in range(len(values) - 1, -1, -1):
        others = min(
            (_quotient(values[k], exps[k]) for k in range(len(values)) if k != local),
            default=math.inf,
        )
        values[local] = exps[local] * min(cap, others)

    beta = tuple(values)
    return BetaState(j=s.j, level=s.level + 1, beta=beta, target=s.target,
                     stabilized=_at_target(beta, s.target, rel_tol))


def delta_of(s: BetaState, p: ExponentVector) -> float:
    """delta = min_k beta_k / p_k over the state's indices."""
    return min(b / p.component(i) for i, b in enumerate(s.beta, start=s.first_index))


def beta_run(
    p: ExponentVector,
    q0: float,
    j: int,
    max_levels: int | None = None,
    rel_tol: float | None = None,
) -> BetaTrace:
    """Iterate the scheme from level 0 until it reaches p_i q_{j-2}.

    Raises:
        NotStabilizedError: max_levels steps were taken without reaching
            the fixpoint; the partial trace is attached.
    """
    max_levels = settings.beta_max_levels if max_levels is None else max_levels
    if max_levels < 1:
        raise ValueError(f"max_levels must be >= 1, got {max_levels}")
    q = compute_q_sequence(p, q0)

    state = beta_init(p, q, j, rel_tol)
    states = [state]
    while not state.stabilized and state.level < max_levels:
        state = beta_step(state, p, q, rel_tol)
        states.append(state)

    ell0 = state.level if state.stabilized else None
    trace = BetaTrace(
        j=j,
        states=tuple(states),
        ell0=ell0,
        delta=tuple(delta_of(s, p) for s in states),
    )
    if ell0 is None:
        logger.warning(f"beta recursion for p={p.p}, q0={q0}, j={j} not stabilized after {max_levels} levels")
        raise NotStabilizedError(f"beta recursion did not stabilize within {max_levels} levels", trace)
    logger.info(f"beta recursion for p={p.p}, q0={q0}, j={j} stabilized at level {ell0}")
    return trace


def beta_sweep_all(p: ExponentVector, q0: float, max_levels: int | None = None) -> list[BetaTrace]:
    """Run the recursion for j = N, N-1, ..., 2, the order of the induction."""
    return [beta_run(p, q0, j, max_levels) for j in range(p.N, 1, -1)]
