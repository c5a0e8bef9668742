"""Exception hierarchy shared across the package.

Two top-level families matter for callers (and for CLI exit codes):
``ValidationError`` for rejected inputs and contract violations, and
``NumericalError`` for failures arising during a computation.
"""


class PtblochError(Exception):
    """Base class for all package errors."""


class ValidationError(PtblochError, ValueError):
    """Invalid parameters or a violated precondition."""


class DefectivePointError(ValidationError):
    """Eigenvector-dependent quantity requested at an exceptional point."""


class NumericalError(PtblochError, RuntimeError):
    """A computation failed or produced an unusable result."""


class StepSizeUnderflowError(NumericalError):
    """Adaptive integrator could not meet the tolerance with a representable step."""


class NonFiniteStateError(NumericalError):
    """State became NaN/Inf during integration."""


class EdgeDensityError(NumericalError):
    """Wave packet reached the open boundary of the chain."""


class PeakDetectionError(NumericalError):
    """Branch splitting failed: not exactly two prominent density peaks."""


class UnwrapAmbiguityError(NumericalError):
    """Quasimomentum distribution too broad to unwrap the mean continuously."""
