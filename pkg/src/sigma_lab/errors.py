"""Exception types shared across the toolkit.

Every exception maps to one failure class named by the operation contracts:
configuration problems (bad grids, bad parameters), contract violations
(inputs that break an operation's preconditions), degenerate shifts (the
last zero sits at the end of the grid) and degenerate measures (all
terminal density values vanish).
"""


class SigmaLabError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SigmaLabError):
    """A grid, parameter or experiment configuration is invalid."""


class ContractError(SigmaLabError):
    """An operation precondition was violated by the supplied inputs."""


class DegenerateShiftError(SigmaLabError):
    """The last zero of the density equals the grid horizon, so the
    shifted path would be a single point."""


class DegenerateMeasureError(SigmaLabError):
    """Every terminal density value is zero; the normalized measure
    does not exist."""
