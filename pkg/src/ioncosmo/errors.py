"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by ioncosmo."""


class DomainError(SimulationError, ValueError):
    """An argument lies outside the domain of the operation."""


# mode equation
class NonConstantBoundary(SimulationError):
    """Head or tail segment of a frequency profile is not flat."""


class NegativeFrequencySquared(SimulationError):
    """The effective squared frequency became non-positive."""


class ToleranceNotMet(SimulationError):
    """Adaptive step control could not reach the requested tolerance."""


class NotNormalized(SimulationError):
    """Bogoliubov coefficients violate |alpha|^2 - |beta|^2 = 1."""


# chain
class NoConvergence(SimulationError):
    """Equilibrium search did not converge."""


class DegeneratePositions(SimulationError):
    """Two ions sit (numerically) on top of each other."""


class NotSymmetric(SimulationError):
    """Matrix handed to the symmetric eigensolver is not symmetric."""


class NegativeEigenvalue(SimulationError):
    """Hessian has a clearly negative eigenvalue (bad equilibrium)."""


# classical dynamics
class Collapse(SimulationError):
    """Scale factor fell below the collapse threshold."""


class IonCollision(SimulationError):
    """Two neighbouring ions came closer than the gap floor or swapped order."""


class DimensionMismatch(SimulationError, ValueError):
    """Array shapes do not agree."""


# Fock space
class TruncationTooSmall(SimulationError):
    """Too much probability lies beyond the Fock-space truncation."""


# cosmology
class InsufficientSamples(SimulationError):
    """Too few (or non-uniform) samples for finite differencing."""


# readout
class UnknownPulse(SimulationError, ValueError):
    """Pulse kind or sequence label not recognised."""


# configuration
class ParseError(SimulationError):
    """Malformed configuration text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SimulationError):
    """Configuration is syntactically fine but semantically invalid."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
