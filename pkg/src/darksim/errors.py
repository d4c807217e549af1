"""Exception types shared across the package."""


class DarksimError(Exception):
    """Base class for all package-specific errors."""


class NotHermitian(DarksimError):
    """Matrix expected to be Hermitian is not (within tolerance)."""


class DimMismatch(DarksimError):
    """Operands have incompatible dimensions."""


class DegenerateLabeling(DarksimError):
    """Two eigenstates claim the same dominant basis state."""


class StepTooLarge(DarksimError):
    """Time slice too coarse for the requested rates / field amplitudes."""


class Infeasible(DarksimError):
    """Requested relaxation targets cannot be met with non-negative rates."""


class ContractUnsatisfied(DarksimError):
    """A pulse-sequence propagator contract could not be met."""


class UnderSampled(DarksimError):
    """Envelope sampling rate violates the stated sampling constraint."""


class ZeroDeviation(DarksimError):
    """Deviation part of a state is numerically zero; correlation undefined."""


class ConfigError(DarksimError):
    """Invalid experiment configuration value."""


class ParseError(ConfigError):
    """Malformed config text; carries a line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownKey(ConfigError):
    """Config key not recognized by the schema."""
