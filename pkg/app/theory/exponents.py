"""Scalar exponent sequences of the Lipschitz estimate.

Everything here is a pure function of the growth exponents: the
integrability targets q_j, the Moser ladder gamma_j with its
interpolation weights tau_j, the excess exponents eps_j and their product
Theta, the indices j0, j1, J, and the closed-form bound of the
hole-filling iteration lemma.

All arithmetic is IEEE double precision. Quotients p/(p - 2) are
``math.inf`` when p == 2.
"""
import logging
import math
from fractions import Fraction

import numpy as np

from app.core.config import settings
from app.models.exponents import ExponentVector, ExtendedReal, MoserSchedule, QSequence

logger = logging.getLogger(__name__)

# Indices past J guaranteed by every schedule, so that tails are measurable.
MIN_TAIL = 10


def conjugate_half(p_i: float) -> ExtendedReal:
    """Return (p_i/2)' = p_i/(p_i - 2), or +inf when p_i == 2."""
    if p_i < 2:
        raise ValueError(f"exponent must be >= 2, got {p_i}")
    if p_i == 2:
        return math.inf
    return p_i / (p_i - 2)


def sobolev_exponent(N: int) -> float:
    """Return 2* = 2N/(N - 2) for N >= 3."""
    if N < 3:
        raise ValueError(f"2* is finite only for N >= 3, got N={N}")
    return 2.0 * N / (N - 2)


def compute_q_sequence(p: ExponentVector, q0: float) -> QSequence:
    """Compute q_j = min{p_j/(p_j - 2), q0} for j = 1..N."""
    if not q0 >= 2:
        raise ValueError(f"q0 must be >= 2, got {q0}")
    q = tuple(min(conjugate_half(p_j), q0) for p_j in p.p)
    return QSequence(q0=q0, q=q)


def _first_index_above(bound: Fraction) -> int:
    """Smallest j >= 0 with 2^(j+2) > bound; j = 0 when bound < 4.

    Exact rational comparison, so bounds at a power of two are not
    misplaced by rounding.
    """
    j = 0
    while 2 ** (j + 2) <= bound:
        j += 1
    return j


def schedule_indices(p: ExponentVector) -> tuple[int, int, int]:
    """Return (j0, j1, J) for the growth exponents ``p`` (N >= 3)."""
    if p.N < 3:
        raise ValueError(f"the Moser schedule needs N >= 3, got N={p.N}")
    N, p1, pN = p.N, Fraction(p.p_min), Fraction(p.p_max)
    j0 = _first_index_above(Fraction(N - 2, 2) * (pN - 2) - Fraction(N, 2) * (p1 - 2))
    j1 = _first_index_above((N - 2) * (pN - 2) - N * (p1 - 2))
    return j0, j1, 1 + max(j0, j1)


def compute_moser_schedule(p: ExponentVector, jmax: int | None = None) -> MoserSchedule:
    """Compute gamma_j, tau_j, eps_j, the indices j0, j1, J and Theta.

    Args:
        p: Growth exponents, N >= 3.
        jmax: Truncation index; defaults to ``settings.jmax`` (raised to
            J + 10 if that is smaller). An explicit value below J + 10 is
            rejected.
    """
    j0, j1, J = schedule_indices(p)
    if jmax is None:
        jmax = max(settings.jmax, J + MIN_TAIL)
    elif jmax < J + MIN_TAIL:
        raise ValueError(f"jmax={jmax} too small: need at least J + {MIN_TAIL} = {J + MIN_TAIL}")

    N, p1, pN = p.N, p.p_min, p.p_max
    star = sobolev_exponent(N)
    gap = pN - p1

    js = np.arange(-1, jmax + 1)
    gamma_ext = pN + np.exp2(js + 2.0) - 2.0  # gamma_{-1} .. gamma_jmax
    gamma = gamma_ext[1:]

    tj = np.arange(j0, jmax + 1)
    g_j = gamma_ext[tj + 1]
    g_prev = gamma_ext[tj]
    a = star / 2 * (g_j + p1 - pN)
    tau = (g_prev / g_j) * (a - g_j) / (a - g_prev)

    ej = np.arange(J, jmax + 1)
    tau_e = tau[ej - j0]
    excess = gap / gamma[ej]
    eps = excess * (1.0 - tau_e) / (tau_e - excess)

    theta = float(np.prod(1.0 + eps))
    tail = epsilon_asymptote(p) * 2.0 ** (-jmax)

    logger.debug(f"Moser schedule for p={p.p}: j0={j0}, j1={j1}, J={J}, Theta={theta:.6g}")
    return MoserSchedule(
        N=N,
        p_min=p1,
        p_max=pN,
        jmax=jmax,
        sobolev2star=star,
        j0=j0,
        j1=j1,
        J=J,
        gamma=tuple(gamma.tolist()),
        tau=tuple(tau.tolist()),
        eps=tuple(eps.tolist()),
        theta=theta,
        theta_tail=tail,
    )


def epsilon_asymptote(p: ExponentVector) -> float:
    """Return N(p_N - p_1)/8, the limit of 2^j eps_j."""
    if p.N < 3:
        raise ValueError(f"the Moser schedule needs N >= 3, got N={p.N}")
    return p.N * (p.p_max - p.p_min) / 8.0


def interpolation_ratio_closed_form(p: ExponentVector, j: int) -> float:
    """(1 - tau_j) gamma_j / (gamma_j + p_1 - p_N) without going through tau_j.

    With t = 2^(j+2) the ratio equals
    (2*/4) t / (((2* - 1)/2) t + (2*/2)(p_1 - 2) - (p_N - 2)).
    """
    star = sobolev_exponent(p.N)
    t = 2.0 ** (j + 2)
    return (star / 4) * t / ((star - 1) / 2 * t + star / 2 * (p.p_min - 2) - (p.p_max - 2))


def ratio_is_increasing(p: ExponentVector) -> bool:
    """Whether the interpolation ratio increases with j (p_N < N/(N-2)(p_1-2) + 2)."""
    return p.p_max < p.N / (p.N - 2) * (p.p_min - 2) + 2


def iteration_lemma_default_lambda(theta: float, alpha0: float) -> float:
    """Midpoint of the admissible interval (theta^(1/alpha0), 1)."""
    return (1.0 + theta ** (1.0 / alpha0)) / 2.0


def iteration_lemma_bound(
    A: float,
    B: float,
    Cc: float,
    alpha0: float,
    beta0: float,
    theta: float,
    r: float,
    R: float,
    lam: float | None = None,
) -> float:
    """Clean bound for Z(r) from the absorbable recursion on nested radii.

    If Z(t) <= A/(s-t)^alpha0 + B/(s-t)^beta0 + Cc + theta Z(s) for all
    r <= t < s <= R, then

        Z(r) <= (1/(1-lam)^alpha0) (lam^alpha0/(lam^alpha0 - theta))
                [A/(R-r)^alpha0 + B/(R-r)^beta0 + Cc].

    ``lam`` defaults to the midpoint of (theta^(1/alpha0), 1).
    """
    if min(A, B, Cc) < 0:
        raise ValueError("A, B and Cc must be non-negative")
    if not alpha0 >= beta0 > 0:
        raise ValueError(f"need alpha0 >= beta0 > 0, got alpha0={alpha0}, beta0={beta0}")
    if not 0 <= theta < 1:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if lam is None:
        lam = iteration_lemma_default_lambda(theta, alpha0)
    lower = theta ** (1.0 / alpha0)
    if not lower < lam < 1:
        raise ValueError(f"lambda must lie in ({lower}, 1), got {lam}")

    lam_a = lam**alpha0
    d = R - r
    return (1.0 / (1.0 - lam) ** alpha0) * (lam_a / (lam_a - theta)) * (
        A / d**alpha0 + B / d**beta0 + Cc
    )
