"""Exception hierarchy shared by the library and the CLI.

Every error carries a short machine-readable ``tag`` that the CLI prints
alongside the human message.
"""


class ConcentrationError(Exception):
    tag = "error"


class ParameterGuardError(ConcentrationError, ValueError):
    """A parameter lies outside the range the numerics are trusted for."""

    tag = "parameter_guard"


class TruncationError(ParameterGuardError):
    """The truncated Fock space is too small for the requested state or operator."""

    tag = "truncation"


class ZeroSuccessError(ConcentrationError):
    """A filter or protocol produced a (numerically) zero-norm output."""

    tag = "zero_success"


class NonPhysicalStateError(ConcentrationError):
    """A density matrix failed a Hermiticity, positivity or trace check."""

    tag = "non_physical"


class OptimizationError(ConcentrationError):
    tag = "no_interior_maximum"
