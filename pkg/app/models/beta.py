"""States of the multiply recursive integrability scheme."""

from pydantic import BaseModel, ConfigDict


class BetaState(BaseModel):
    """One level of the vector recursion for a fixed outer index j.

    The vector is indexed i = j-1, ..., N; ``beta[0]`` is beta_{j-1}.

    Attributes:
        j: Outer downward-induction index, 2 <= j <= N.
        level: Recursion level ell.
        beta: Current exponents beta_i^(ell).
        target: Fixpoint exponents p_i * q_{j-2}.
        stabilized: Whether beta equals target componentwise.
    """
    model_config = ConfigDict(frozen=True)

    j: int
    level: int
    beta: tuple[float, ...]
    target: tuple[float, ...]
    stabilized: bool

    @property
    def first_index(self) -> int:
        return self.j - 1

    def component(self, i: int) -> float:
        """Return beta_i for the 1-based axis index i in j-1..N."""
        k = i - self.first_index
        if not 0 <= k < len(self.beta):
            raise IndexError(f"beta index {i} outside {self.first_index}..")
        return self.beta[k]


class BetaTrace(BaseModel):
    """A full run of the recursion from level 0 to its fixpoint.

    Attributes:
        j: Outer index of the run.
        states: Levels 0..ell0 (or up to max_levels on failure).
        ell0: First level equal to the target, None if never reached.
        delta: delta^(ell) = min_k beta_k^(ell) / p_k for every state.
    """
    model_config = ConfigDict(frozen=True)

    j: int
    states: tuple[BetaState, ...]
    ell0: int | None
    delta: tuple[float, ...]

    @property
    def fixpoint(self) -> tuple[float, ...]:
        return self.states[-1].beta
