"""Exception types shared across the solver stack.

Each class maps to one failure category so the CLI can translate them
into distinct exit codes.
"""


class RingHeomError(Exception):
    """Base class for all solver errors."""


class PoleCollision(RingHeomError):
    """A bath decay frequency coincides with a decomposition pole.

    Signals an unusable (beta, gamma, K) combination; the coupling
    coefficients would contain a division by ~zero.
    """


class CapacityExceeded(RingHeomError):
    """Hierarchy times grid would not fit the configured memory budget."""


class NonFiniteState(RingHeomError):
    """A propagated field picked up an inf or nan (blow-up)."""


class StepUnderflow(RingHeomError):
    """Step control drove dt below dt_min while still rejecting."""


class NoConvergence(RingHeomError):
    """Steady-state relaxation did not converge within the time budget."""

    def __init__(self, msg, residual_field=None, residual_obs=None):
        super().__init__(msg)
        self.residual_field = residual_field
        self.residual_obs = residual_obs


class ConfigError(RingHeomError):
    """Base for configuration problems."""


class ConfigParseError(ConfigError):
    """Malformed config text; carries the offending line number."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


class ConfigValidationError(ConfigError):
    """Structurally valid config that violates a physical precondition."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno
