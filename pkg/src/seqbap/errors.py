"""Exception types raised by seqbap."""


class SeqbapError(Exception):
    """Base class for all seqbap errors."""


class Infeasible(SeqbapError, ValueError):
    """No admissible assignment exists on the given (sub)graph."""


class InadmissibleAssignment(SeqbapError, ValueError):
    """An assignment does not cover the subgraph's tasks injectively."""


class SizeGuard(SeqbapError, ValueError):
    """Instance too large for exhaustive enumeration."""


class NotRobust(SeqbapError):
    """Some order has a zero robustness margin."""


class MarginTooSmall(SeqbapError):
    """The safety bound is not strictly below the smallest margin."""

    def __init__(self, mu, s):
        self.mu = mu
        self.s = s
        super().__init__(
            f"safety bound s={s:g} must be strictly smaller than the "
            f"minimum robustness margin mu={mu:g}"
        )


class GridMismatch(SeqbapError, ValueError):
    """Trajectories are not sampled on a common time grid."""
