"""Exception types raised across the package."""


class HypersingularError(Exception):
    """Base class for all package errors."""


class NonPositiveRadius(HypersingularError, ValueError):
    pass


class SignViolation(HypersingularError):
    """phi' * phi'' <= 0 at a sampled radius.

    The partially filled certificate is attached so callers can still
    report the offending radius.
    """

    def __init__(self, r, certificate=None):
        self.r = r
        self.certificate = certificate
        super().__init__(f"phi'(r) * phi''(r) <= 0 at r = {r!r}")


class DegenerateDerivative(HypersingularError):
    def __init__(self, r, which):
        self.r = r
        self.which = which
        super().__init__(f"{which} vanishes at r = {r!r}")


class InvalidParams(HypersingularError, ValueError):
    pass


class InvalidKernel(HypersingularError, ValueError):
    pass


class ZeroFrequency(HypersingularError, ValueError):
    pass


class DomainError(HypersingularError, ValueError):
    pass


class BudgetExceeded(HypersingularError):
    def __init__(self, requested, cap):
        self.requested = requested
        self.cap = cap
        super().__init__(f"quadrature needs {requested} panels, cap is {cap}")


class NonconvergentTail(HypersingularError):
    pass


class DegenerateData(HypersingularError):
    pass


class SpectralLeakage(UserWarning):
    """Grid function carries non-negligible energy near the Nyquist band."""
