"""Exception hierarchy shared across the toolkit."""


class KinresError(Exception):
    """Base class for all toolkit errors."""


class ParameterDomainError(KinresError, ValueError):
    """A physical parameter is outside its allowed domain."""


class TruncationError(KinresError):
    """Basis or Hilbert-space truncation is too small for the request."""


class ContractError(KinresError):
    """An input violates a structural contract (e.g. non-hermitian matrix)."""


class PreprocessingError(KinresError):
    """A trace cannot be preprocessed (too short, no usable wings, ...)."""


class FitError(KinresError):
    """A fit cannot be set up or produced no usable result."""


class NoResonanceError(FitError):
    """No resonance feature detected in the trace."""


class BifurcatedTraceError(FitError):
    """Trace shows a bifurcation jump but nonlinear fitting was not enabled."""


class ValidationError(KinresError):
    """Configuration or input-file validation failure."""
