"""Monte Carlo and closed-form toolkit for asynchronous random access with
successive interference cancellation and replica combining."""

from .core import ConfigError, DecodePhase, Replica, Scheme, SimConfig, StopRule, UserOutcome, linear_snr

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DecodePhase",
    "Replica",
    "Scheme",
    "SimConfig",
    "StopRule",
    "UserOutcome",
    "linear_snr",
]
