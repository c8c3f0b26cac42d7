"""Exception types raised across the package."""


class CylLevyError(ValueError):
    """Invalid input to a construction or operation."""


class DimensionMismatch(CylLevyError):
    pass


class UnsupportedOperation(CylLevyError):
    """The operation is not defined for this kind of object."""


class StatisticalFailure(RuntimeError):
    """A Monte Carlo estimate is inconsistent beyond its stated tolerance."""
