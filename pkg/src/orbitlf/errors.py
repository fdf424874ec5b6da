"""Exception hierarchy.

Every error raised on bad input derives from ``OrbitLFError`` (itself a
``ValueError``) so callers can catch the whole family at once.  The CLI maps
these to exit code 1.
"""


class OrbitLFError(ValueError):
    pass


class NotPrime(OrbitLFError):
    pass


class EvenPrime(OrbitLFError):
    pass


class ModulusTooLarge(OrbitLFError):
    pass


class NotADivisor(OrbitLFError):
    pass


class KappaOutOfRange(OrbitLFError):
    pass


class NotCoprime(OrbitLFError):
    pass


class EtaNotImprimitive(OrbitLFError):
    pass


class EtaEqual(OrbitLFError):
    pass


class EtaPrincipal(OrbitLFError):
    pass


class NotPrimitive(OrbitLFError):
    pass


class JOutOfRange(OrbitLFError):
    pass


class PoleAtOne(OrbitLFError):
    pass


class PrincipalCharacter(OrbitLFError):
    pass


class NonPositiveArgument(OrbitLFError):
    pass


class BoxTooLarge(OrbitLFError):
    pass


class DeltaOutOfRange(OrbitLFError):
    pass


class TwistNotCoprime(OrbitLFError):
    pass


class OddEll(OrbitLFError):
    pass


class XTooSmall(OrbitLFError):
    pass


class ParameterError(OrbitLFError):
    """Mollifier or kernel parameters outside their admissible range."""


class VerificationFailure(AssertionError):
    """A computed quantity violated an identity or inequality it must satisfy."""
