"""Exception hierarchy.

Domain/precondition violations raise ``ValueError`` directly. Everything
below ``NumericalError`` signals that a valid request could not be computed
and maps to exit code 1 on the command line.
"""


class NumericalError(RuntimeError):
    """A numerical procedure failed on otherwise valid input."""


class RootFindingError(NumericalError):
    """Polynomial root finder did not converge."""

    def __init__(self, message, coeffs=None):
        super().__init__(message)
        self.coeffs = coeffs


class DegenerateRootsError(NumericalError):
    """Characteristic roots collide, so the modal coefficient system is singular."""

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam


class BracketError(NumericalError):
    """A Bessel zero was lost while bracketing."""


class FitError(NumericalError):
    """Constrained Prony fit collapsed to the zero model."""


class OracleInstability(NumericalError):
    """Time-domain integration blew up."""
