"""Exception types shared across the package.

The CLI maps these onto exit codes: validation errors exit 1, numerical
failures exit 2, I/O problems exit 3.
"""


class LevelflowError(Exception):
    """Base class for all package errors."""


class ValidationError(LevelflowError, ValueError):
    """Invalid parameters, configuration, or input data."""


class NumericalError(LevelflowError, RuntimeError):
    """A computation could not be completed reliably."""


class StencilCrossingError(NumericalError):
    """Level ordering is inconsistent across a finite-difference stencil."""


class DegenerateSpectrumError(NumericalError):
    """A spectral gap fell below the configured floor mid-computation."""


class EigensolverError(NumericalError):
    """The dense symmetric eigensolver failed to converge."""
