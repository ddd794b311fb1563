"""Exponent data: the growth exponents and the sequences derived from them.

The growth exponents p = (p_1, ..., p_N) define the whole problem. Every
other sequence in this module (the q_j integrability targets, the Moser
ladder gamma_j with its interpolation weights tau_j and excess exponents
eps_j) is a pure function of p and a couple of user choices, computed by
``app.theory.exponents``. The models here only hold and validate values.
"""

import math

from pydantic import BaseModel, ConfigDict, field_validator

# Quotients of the form p/(p-2) take this value when p == 2.
# math.inf is exact under min(), so no sentinel is needed.
ExtendedReal = float


class ExponentVector(BaseModel):
    """The growth exponents of the orthotropic functional.

    Attributes:
        p: Exponents p_1 <= ... <= p_N, each at least 2.
    """
    model_config = ConfigDict(frozen=True)

    p: tuple[float, ...]

    @field_validator("p")
    @classmethod
    def _check_ordered(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if len(value) < 2:
            raise ValueError(f"need at least two exponents (N >= 2), got {len(value)}")
        if not all(math.isfinite(x) for x in value):
            raise ValueError("exponents must be finite")
        if value[0] < 2:
            raise ValueError(f"p_1 must be >= 2, got {value[0]}")
        if any(b < a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError(f"exponents must be non-decreasing, got {value}")
        return value

    @classmethod
    def parse(cls, text: str) -> "ExponentVector":
        """Build from a comma-separated list such as ``"2,3,4"``."""
        return cls(p=tuple(float(x) for x in text.split(",") if x.strip()))

    @property
    def N(self) -> int:
        return len(self.p)

    @property
    def p_min(self) -> float:
        return self.p[0]

    @property
    def p_max(self) -> float:
        return self.p[-1]

    def component(self, i: int) -> float:
        """Return p_i with the 1-based index used in the formulas."""
        if not 1 <= i <= self.N:
            raise IndexError(f"axis index {i} outside 1..{self.N}")
        return self.p[i - 1]

    @property
    def is_standard_growth(self) -> bool:
        return self.p[0] == self.p[-1]


class QSequence(BaseModel):
    """Integrability targets q_j = min{p_j/(p_j - 2), q0}.

    Attributes:
        q0: The target order chosen by the user (>= 2).
        q: The values q_1 >= ... >= q_N.
    """
    model_config = ConfigDict(frozen=True)

    q0: float
    q: tuple[float, ...]

    def at(self, j: int) -> float:
        """Return q_j, where q_0 is the target order itself."""
        if j == 0:
            return self.q0
        if not 1 <= j <= len(self.q):
            raise IndexError(f"q index {j} outside 0..{len(self.q)}")
        return self.q[j - 1]


class MoserSchedule(BaseModel):
    """The exponent ladder of the L-infinity gradient estimate.

    Sequences are stored from their first admissible index: ``gamma``
    from j = 0, ``tau`` from j = j0 and ``eps`` from j = J, all up to
    ``jmax``. The ``*_at`` accessors take the mathematical index j.

    Attributes:
        N: Space dimension (>= 3).
        p_min: p_1.
        p_max: p_N.
        jmax: Last index computed.
        sobolev2star: 2N/(N-2).
        j0: First index with gamma_j below the Sobolev-scaled exponent.
        j1: First index past which the interpolation ratio is controlled.
        J: 1 + max(j0, j1).
        gamma: gamma_j for j = 0..jmax.
        tau: tau_j for j = j0..jmax.
        eps: eps_j for j = J..jmax.
        theta: Product of (1 + eps_j) for j = J..jmax.
        theta_tail: Geometric estimate of sum_{j > jmax} eps_j.
    """
    model_config = ConfigDict(frozen=True)

    N: int
    p_min: float
    p_max: float
    jmax: int
    sobolev2star: float
    j0: int
    j1: int
    J: int
    gamma: tuple[float, ...]
    tau: tuple[float, ...]
    eps: tuple[float, ...]
    theta: float
    theta_tail: float

    def gamma_at(self, j: int) -> float:
        # gamma_{-1} = p_N is used by tau_0
        if j < -1:
            raise IndexError(f"gamma index {j} below -1")
        return self.p_max + 2.0 ** (j + 2) - 2.0

    def tau_at(self, j: int) -> float:
        if not self.j0 <= j <= self.jmax:
            raise IndexError(f"tau index {j} outside {self.j0}..{self.jmax}")
        return self.tau[j - self.j0]

    def eps_at(self, j: int) -> float:
        if not self.J <= j <= self.jmax:
            raise IndexError(f"eps index {j} outside {self.J}..{self.jmax}")
        return self.eps[j - self.J]

    def ratio(self, j: int) -> float:
        """Return (1 - tau_j) gamma_j / (gamma_j + p_1 - p_N)."""
        gamma_j = self.gamma_at(j)
        return (1.0 - self.tau_at(j)) * gamma_j / (gamma_j + self.p_min - self.p_max)
