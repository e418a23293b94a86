"""Exception types raised by the numerical routines."""


class MartinConeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameters(MartinConeError, ValueError):
    pass


class DomainError(MartinConeError, ValueError):
    pass


class SingularArgument(MartinConeError, ValueError):
    """Kernel evaluated at (or numerically too close to) its singularity."""


class ToleranceNotMet(MartinConeError, RuntimeError):
    """Adaptive quadrature exhausted its panel budget."""


class NotSmoothHere(MartinConeError, ValueError):
    """Principal value requested at a point where the field is not C^2."""


class OriginSingular(MartinConeError, ValueError):
    pass


class NoPositiveEigenvector(MartinConeError, RuntimeError):
    pass


class BracketFailure(MartinConeError, RuntimeError):
    pass


class UnsupportedAperture(MartinConeError, ValueError):
    pass


class NoSignSeparation(MartinConeError, RuntimeError):
    pass


class DegenerateFit(MartinConeError, ValueError):
    pass
