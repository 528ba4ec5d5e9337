"""Exception hierarchy shared by all spheregp modules."""


class SphereGPError(Exception):
    """Base class for all errors raised by spheregp."""


class DataError(SphereGPError, ValueError):
    """Invalid or inconsistent input data (files, datasets, configs)."""


class KernelSpecError(SphereGPError, ValueError):
    """Malformed kernel description or out-of-bounds parameter."""


class NumericalError(SphereGPError, ArithmeticError):
    """A numerical procedure failed at the requested parameters."""


class PoleUndefinedError(NumericalError):
    """The kernel has no value when one of the points is a pole."""

    def __init__(self, detail=""):
        msg = "covariance undefined at pole"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class NotPositiveDefiniteError(NumericalError):
    """Covariance matrix could not be factorized, even after jitter."""


class FitError(NumericalError):
    """Maximum-likelihood fit failed on every restart."""
