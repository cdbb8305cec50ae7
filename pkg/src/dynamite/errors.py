"""Exception types shared across the package."""


class GuardError(ValueError):
    """A size or ergodicity guard rejected the request."""


class NotErgodicError(GuardError):
    """The chain has no unique stationary distribution (reducible or periodic)."""


class StatisticalFailure(RuntimeError):
    """A statistical run produced an unusable result (e.g. a nonpositive phase ratio)."""
