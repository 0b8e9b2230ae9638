"""Exception types raised by the allocation and simulation code."""


class TwoLayerError(Exception):
    """Base class for all package errors."""


class DimensionError(TwoLayerError, ValueError):
    """Array shapes do not agree with the OFDMA layout or user count."""


class ScenarioError(TwoLayerError, ValueError):
    """A scenario or configuration value is invalid or out of model range."""


class RootFindingError(TwoLayerError, RuntimeError):
    """A root finder failed to converge or could not verify its root."""


class BudgetError(TwoLayerError, RuntimeError):
    """The waterline search could not meet the power budget."""


class InfeasibleRateError(TwoLayerError, ValueError):
    """A requested common-message rate exceeds what the budget can deliver."""
