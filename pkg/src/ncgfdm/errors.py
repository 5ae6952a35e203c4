"""Exception types raised by the ncgfdm library."""


class NcgfdmError(Exception):
    """Base class for all library errors."""


class ParameterError(NcgfdmError, ValueError):
    """A parameter violates a documented precondition or invariant."""


class IllConditionedFilterError(NcgfdmError):
    """The transmitter matrix is numerically singular for the requested filter."""


class DegenerateBasisError(NcgfdmError):
    """The basis boundary system is numerically singular (reports V and beta)."""

    def __init__(self, V, beta, cond):
        self.V = V
        self.beta = beta
        self.cond = cond
        super().__init__(
            f"basis boundary system is degenerate for V={V}, beta={beta} "
            f"(condition estimate {cond:.3e})"
        )


class EqualizationError(NcgfdmError):
    """Channel equalization failed (singular channel or spectral nulls)."""


class CpInsufficiencyError(NcgfdmError):
    """The channel delay spread exceeds the cyclic prefix."""
