"""Exception hierarchy shared across the package."""


class NonsenseCorrError(Exception):
    """Base class for all package errors."""


class ParameterError(NonsenseCorrError, ValueError):
    """Invalid model or experiment parameters."""


class ConstructionError(NonsenseCorrError, RuntimeError):
    """A randomized construction exhausted its retry budget."""


class DegenerateInputError(NonsenseCorrError, ValueError):
    """A statistic is undefined for the given input (e.g. zero variance)."""


class DimensionError(NonsenseCorrError, ValueError):
    """Input vectors or matrices have incompatible shapes."""


class UnsupportedDimensionError(ParameterError):
    """Sampler does not support the requested lattice dimension."""


class SizeError(ParameterError):
    """Problem too large for exhaustive enumeration."""


class OutOfRegimeError(ParameterError):
    """No theoretical prediction exists in the requested parameter regime."""


class NoPredictionError(NonsenseCorrError):
    """The limit theory gives no prediction for this configuration."""


class ConfigError(NonsenseCorrError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class ExperimentAborted(NonsenseCorrError, RuntimeError):
    """An experiment stopped early; carries a diagnostic message."""
