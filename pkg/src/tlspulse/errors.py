"""Exception types shared across the package."""


class StepSizeError(RuntimeError):
    """Time step too coarse for the requested dynamics (accuracy guard)."""


class RegimeViolationError(RuntimeError):
    """The two-photon truncation behind p1/p2 broke down (p1 went negative)."""


class DegenerateDistributionError(ValueError):
    """An observable is undefined because the distribution is degenerate."""
