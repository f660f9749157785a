"""Exception hierarchy shared by every gapcert module."""


class GapCertError(Exception):
    """Base class for all gapcert errors."""


# terms
class ParseError(GapCertError, ValueError):
    pass


class NotHermitian(GapCertError, ValueError):
    pass


class NotProjector(GapCertError, ValueError):
    pass


class NegativeEigenvalue(GapCertError, ValueError):
    pass


class UnknownModel(GapCertError, KeyError):
    pass


# lattice / operators
class BadSize(GapCertError, ValueError):
    pass


class OutOfRange(GapCertError, ValueError):
    pass


class PatchTooLarge(GapCertError, ValueError):
    pass


class NotAPatch(GapCertError, ValueError):
    pass


class BadWindow(GapCertError, ValueError):
    pass


class BadProfile(GapCertError, ValueError):
    pass


class DimensionMismatch(GapCertError, ValueError):
    pass


class TooLarge(GapCertError, ValueError):
    pass


# spectra
class NoConvergence(GapCertError, RuntimeError):
    """Iteration cap reached; ``partial`` holds the unconverged SpectralResult."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NotFrustrationFree(GapCertError, ValueError):
    pass


class AmbiguousGap(GapCertError, ValueError):
    pass


# bounds
class InvalidProfile(GapCertError, ValueError):
    pass


class IdentityViolation(GapCertError, AssertionError):
    pass


# certify
class CapacityExceeded(GapCertError, ValueError):
    pass


class DegenerateRestriction(GapCertError, RuntimeError):
    pass


class SolverFailure(GapCertError, RuntimeError):
    pass
