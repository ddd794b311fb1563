"""Exception types raised across the package.

Validation problems subclass ValueError so callers that only know the
builtin hierarchy still catch them; runtime failures of the iterative
procedures subclass RuntimeError and carry the partial result.
"""

from typing import Any


class GridError(ValueError):
    """A region, cutoff or field does not fit the grid it is used on."""


class RangeError(ValueError):
    """An exponent combination would overflow double precision."""


class ConfigError(ValueError):
    """An experiment file is malformed.

    Attributes:
        key: The offending ``section.key`` (or section name).
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class NotConvergedError(RuntimeError):
    """The solver stopped at max_iters before reaching its tolerance.

    Attributes:
        result: The final SolveResult, with ``converged=False``.
    """

    def __init__(self, message: str, result: Any):
        super().__init__(message)
        self.result = result


class NotStabilizedError(RuntimeError):
    """The beta recursion did not reach its fixpoint within max_levels.

    Attributes:
        trace: The BetaTrace computed so far.
    """

    def __init__(self, message: str, trace: Any):
        super().__init__(message)
        self.trace = trace
