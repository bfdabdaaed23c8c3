"""
Exception types raised by the simulation library.

Every error is a ``ValueError`` so callers that only care about bad input can
catch that; the command line maps them onto exit codes.
"""


class EnatpError(ValueError):
    """Base class for all library errors."""


class NonRealSpectrumError(EnatpError):
    """An eigenvalue expected to be real and nonnegative is not, beyond tolerance."""


class NotNormalizedError(EnatpError):
    """A pure state's amplitudes do not have unit norm."""


class InvalidStateError(EnatpError):
    """A matrix fails the density-matrix invariants."""


class NonPhysicalError(InvalidStateError):
    """A Bloch form does not reconstruct to a physical state."""


class ConvergenceFailureError(EnatpError):
    """A numerical factorization did not converge."""


class BadAxisError(EnatpError):
    """A measurement axis is not a unit vector."""


class BadEpsilonError(EnatpError):
    """A special weak measurement strength lies outside [-1, 1]."""


class NotProjectorsError(EnatpError):
    """Two operators are not orthogonal projectors summing to the identity."""


class EpsOutOfRangeError(EnatpError):
    """A measurement parameter lies outside its admissible interval."""


class NonDecomposableError(EnatpError):
    """An outcome operator cannot be written as q(I + ε̂) with q > 0."""


class IncompleteMeasurementError(EnatpError):
    """Outcome operators do not satisfy Σ K†K = I."""


class ZeroProbabilityError(EnatpError):
    """A measurement branch has (numerically) zero probability."""


class DegenerateNormalizationError(EnatpError):
    """The normalization η of a Bloch update vanishes."""


class InputNotCorrelatedError(EnatpError):
    """A state expected to be correlated is a product state."""


class NotDiagonalError(EnatpError):
    """A correlation matrix expected to be diagonal is not."""


class BranchLimitExceededError(EnatpError):
    """Known-outcome enumeration would exceed the configured branch cap."""


class UnknownPresetError(EnatpError):
    """A state or measurement preset name cannot be parsed."""


class ConfigParseError(EnatpError):
    """An experiment configuration file is malformed."""


class BadRangeError(EnatpError):
    """A sweep range is empty or out of bounds."""


class InvariantViolationError(EnatpError):
    """A numerical invariant failed while running an experiment."""
