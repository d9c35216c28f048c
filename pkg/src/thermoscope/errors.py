"""Exception types shared across the package."""


class ThermoscopeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ThermoscopeError, ValueError):
    """An argument lies outside the domain of the operation."""


class SolverFailure(ThermoscopeError, ArithmeticError):
    """A root solve could not reach the requested residual (precision exhausted)."""


class DepthError(ThermoscopeError, ValueError):
    """Requested enumeration depth exceeds the supported cap."""


class IndexRangeError(ThermoscopeError, IndexError):
    """A return time exceeds the cached marked-orbit length."""


class NonConvergent(ThermoscopeError, ArithmeticError):
    """A numerical limit or adaptive refinement did not stabilise."""


class DivergentTail(ThermoscopeError, ArithmeticError):
    """The truncation tail of an induced sum cannot be bounded.

    ``certified`` is True when a comparison series with terms bounded away
    from zero was exhibited, i.e. the sum is genuinely infinite.
    """

    def __init__(self, message, certified=False, witness=None):
        super().__init__(message)
        self.certified = certified
        self.witness = witness or {}


class Inconclusive(ThermoscopeError, ArithmeticError):
    """Brackets are too wide to resolve a sign."""


class NoNegativeMargin(ThermoscopeError, ArithmeticError):
    """No n0 gives a strictly negative ratio sup near the neutral point."""


class M0Overflow(ThermoscopeError, OverflowError):
    """The threshold m0 exceeds 2**62."""

    def __init__(self, message, log_bound=None):
        super().__init__(message)
        self.log_bound = log_bound


class GraphTooLarge(ThermoscopeError, MemoryError):
    """The excursion graph exceeds the node budget."""

    def __init__(self, message, max_feasible_depth=None):
        super().__init__(message)
        self.max_feasible_depth = max_feasible_depth
