"""Exception hierarchy shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class GeodesicError(DomainError):
    """No unique geodesic joins the given points."""


class DegenerateMeasureError(ValueError):
    """A measure has no mass (all weights zero) or no atoms."""


class LossEvaluationError(ValueError):
    """A loss returned a non-finite value on an atom."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BarycenterError(RuntimeError):
    """The barycenter iteration failed to converge."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
