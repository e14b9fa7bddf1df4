"""Exception types shared across the package."""


class BanditLabError(Exception):
    """Base class for all package-specific errors."""


class InvalidBaseError(BanditLabError):
    """Partition base q must exceed 1."""


class OutOfDomainError(BanditLabError):
    """A covariate fell outside the unit hypercube."""


class HorizonTooSmallError(BanditLabError):
    """Horizon so short that log log T is not positive."""


class IllConditionedError(BanditLabError):
    """Projection normal matrix lost positive definiteness."""


class InsufficientGridError(BanditLabError):
    """Grid too coarse for the requested least-squares fit."""


class StateDesyncError(BanditLabError):
    """Policy update inconsistent with the preceding choose call."""


class InvalidGapError(BanditLabError):
    """Lower-bound family parameters outside their admissible range."""


class InvalidRegimeError(BanditLabError):
    """Exponent calculator called with an inconsistent regime."""


class DegenerateBumpsError(BanditLabError):
    """Payoff construction would contain no bumps (m < 1)."""


class ValidationError(BanditLabError):
    """Experiment configuration violates one or more invariants."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
