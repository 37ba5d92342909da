"""Exception types raised across the toolkit."""


class KleinscatError(ValueError):
    """Base class; every toolkit error is also a ValueError."""


class PoleError(KleinscatError):
    pass


class OverlappingCirclesError(KleinscatError):
    pass


class ParabolicGeneratorError(KleinscatError):
    pass


class TruncationError(KleinscatError):
    """Word ball too shallow for the requested radius."""


class DegenerateRangeError(KleinscatError):
    pass


class SingularPointError(KleinscatError):
    pass


class DegenerateDerivativeError(KleinscatError):
    pass


class SingularJacobianError(KleinscatError):
    pass


class RegimeError(KleinscatError):
    pass


class DiagonalSingularityError(KleinscatError):
    pass


class NodeMismatchError(KleinscatError):
    pass


class ConvergenceError(KleinscatError):
    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


class DomainError(KleinscatError):
    pass


class OutOfRangeError(KleinscatError):
    def __init__(self, msg, ceiling=None):
        super().__init__(msg)
        self.ceiling = ceiling


class FitInstabilityError(KleinscatError):
    pass


class ConfigError(KleinscatError):
    pass
