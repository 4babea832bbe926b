"""Exception types shared across the package."""


class IsoKernelError(ValueError):
    """Base class for all errors raised on bad inputs or parameters."""


class InputError(IsoKernelError):
    """Data is empty, malformed, non-finite or has the wrong dimension."""


class ParameterError(IsoKernelError):
    """A numeric parameter (psi, t, sigma, s, ...) is out of range."""
