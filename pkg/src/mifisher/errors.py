"""Exception types raised across the package."""


class FisherError(Exception):
    """Base class for every error raised by mifisher."""


class NotHermitian(FisherError):
    pass


class NoConvergence(FisherError):
    pass


class DimMismatch(FisherError):
    pass


class InvalidState(FisherError):
    pass


class ThetaOutOfDomain(FisherError):
    pass


class AnalyticUnavailable(FisherError):
    pass


class UnknownName(FisherError):
    pass


class InvalidPovm(FisherError):
    pass


class MissingConditional(FisherError):
    pass


class NotNormalized(FisherError):
    pass


class NotTraceless(FisherError):
    pass


class SingularOutcome(FisherError):
    """An outcome has vanishing probability but non-vanishing derivative.

    The Fisher information genuinely diverges there, so we refuse to clamp.
    """


class NotTracePreserving(FisherError):
    pass


class NotUnitaryBlock(FisherError):
    pass


class SpecError(FisherError):
    """A JSON family/POVM/chain/config document failed validation."""


class OptimizerDidNotConverge(UserWarning):
    """Soft failure: the best-so-far value is still returned, with a flag."""
