"""Exception hierarchy shared by all normflow modules."""


class NormflowError(Exception):
    pass


class DimensionError(NormflowError, ValueError):
    """Input matrix is not square (or dimensions disagree)."""


class ShapeError(NormflowError, ValueError):
    """Input lacks a required structure, e.g. it is not Hermitian."""


class DomainError(NormflowError, ValueError):
    """A value lies outside the declared domain of a function or operation."""


class CapabilityError(NormflowError):
    """A scalar function cannot supply the requested derivative order."""


class IntegrationError(NormflowError):
    """Time integration failed; carries the last accepted state."""

    def __init__(self, message, t=None, last_state=None):
        super().__init__(message)
        self.t = t
        self.last_state = last_state


class StiffnessError(IntegrationError):
    """Step size fell below the minimum allowed step."""


class CoverageError(NormflowError, ValueError):
    """A finite sequence window is too short for the requested evaluation."""


class ConfigError(NormflowError, ValueError):
    pass
