"""Exception types shared across the package.

Every precondition failure raises a distinct class so callers (and the CLI
exit-code mapping) can tell configuration mistakes, resource refusals and
genuine inequality failures apart.
"""


class WeylSumsError(Exception):
    """Base class for all package errors."""


class PreconditionError(WeylSumsError, ValueError):
    """An operation's stated precondition does not hold."""


class InvalidDenominatorError(PreconditionError):
    """Rational phase with denominator 0."""


class InvalidFieldError(PreconditionError):
    """Modulus is not an (odd, where required) prime."""


class InvalidNumeratorError(PreconditionError):
    """Numerator shares a factor with the modulus."""


class InvalidScalarError(PreconditionError):
    """Orbit scalar lambda must be a nonzero residue."""


class NotAPermutationError(PreconditionError):
    """x -> x^d does not permute F_p (gcd(d, p-1) != 1)."""


class BinomialVanishingError(PreconditionError):
    """p <= d: binomial coefficients may vanish mod p."""


class UndefinedForDegreeError(PreconditionError):
    """beta_d / kappa_d are defined for d >= 3 only."""


class InvalidPatternError(PreconditionError):
    """(a, b, c) violates a > b > c > 0 with a/b integral."""


class InvalidScheduleError(PreconditionError):
    """Cantor schedule violates divisibility or monotonicity."""


class TooFewScalesError(PreconditionError):
    """Box-counting needs >= 3 scales over a wide enough span."""


class PrimeTooSmallError(WeylSumsError):
    """The prime is too small for the requested construction."""


class ResourceLimitError(WeylSumsError):
    """Enumeration size exceeds the configured cap."""


class WitnessNotFoundError(WeylSumsError):
    """No large-sum witness in the searched box."""

    def __init__(self, message: str, level: int | None = None):
        super().__init__(message)
        self.level = level


class ChecksumMismatchError(WeylSumsError):
    """Cached table failed its checksum on load."""


class LemmaCheckFailureError(WeylSumsError):
    """A theorem-backed inequality failed: implementation bug."""
