"""Exception and warning types shared across the package."""


class UwbpcError(Exception):
    """Base class for errors raised by this package."""


class DegenerateChannelError(UwbpcError):
    """A channel realization has no usable energy (all-zero taps)."""


class InfeasibleError(UwbpcError):
    """The requested operating point admits no valid solution.

    Raised when the target-SINR equation has no root in its bracket, when
    the equilibrium existence condition is violated, or when a large-system
    expression turns negative.
    """


class UnattainableLossError(InfeasibleError):
    """A requested combining loss cannot be met by any finger ratio."""


class FormulaInconsistencyWarning(RuntimeWarning):
    """Emitted when evaluating the fourth branch of the self-interference
    closed form, which is inconsistent with its neighboring branches and
    with simulation (see the package README)."""
