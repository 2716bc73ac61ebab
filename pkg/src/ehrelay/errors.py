"""Exception types shared across the package."""


class EhRelayError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(EhRelayError):
    """Invalid configuration document or CLI arguments.

    ``messages`` holds one field-level message per offending key.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class DegenerateChannelError(EhRelayError):
    """Aggregate solo-source success probability is zero; quantities that
    condition on a source departure are undefined."""


class DegenerateParameterError(EhRelayError):
    """A parameter combination produces a zero denominator (for example a
    harvest-limited transmit probability equal to one)."""


class UnstableOccupancyError(EhRelayError):
    """An occupancy fraction exceeds one, i.e. the hypothetical system's
    queue cannot be stable at the given arrival rates."""


class InfeasiblePointError(EhRelayError):
    """The requested rate is outside every feasible branch of the closure
    optimization."""


class UnstableRunError(EhRelayError):
    """A simulation run failed the empirical stability screen required by
    the requested measurement."""
