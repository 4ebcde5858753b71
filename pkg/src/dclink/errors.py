"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Scenario/network configuration is invalid; message carries the field path."""


class SingularLoopError(ArithmeticError):
    """Feedback closure is algebraically degenerate (1 + loop gain vanishes identically)."""


class PoleOnAxisError(ArithmeticError):
    """Frequency-response evaluation requested exactly at a pole."""


class UnstableSystemError(ValueError):
    """Operation requires a Hurwitz/stable system and got something else."""


class ConditioningError(RuntimeError):
    """Numerical conditioning failure (indefinite gramian, non-bracketing bisection)."""


class InternalInstabilityError(ValueError):
    """Closed loop is internally unstable; offending poles attached."""

    def __init__(self, message, poles=None):
        super().__init__(message)
        self.poles = poles


class SimulationDiverged(RuntimeError):
    """Time-domain integration produced NaN/unbounded values."""

    def __init__(self, message, last_valid_index):
        super().__init__(message)
        self.last_valid_index = last_valid_index
