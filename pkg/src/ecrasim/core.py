"""Domain types and configuration shared across the simulator.

All times are measured in packet durations (T_p = 1).
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional


class Scheme(str, enum.Enum):
    ALOHA = "ALOHA"
    CRA = "CRA"
    ECRA_SC = "ECRA_SC"
    ECRA_MRC = "ECRA_MRC"
    CRDSA = "CRDSA"

    @property
    def uses_combining(self) -> bool:
        return self in (Scheme.ECRA_SC, Scheme.ECRA_MRC)

    @property
    def asynchronous(self) -> bool:
        return self is not Scheme.CRDSA


class DecodePhase(str, enum.Enum):
    SIC = "SIC"
    COMBINING = "COMBINING"
    NONE = "NONE"


class ConfigError(ValueError):
    """Invalid simulation configuration.

    ``rule`` names the violated constraint so callers can tell failures apart.
    """

    def __init__(self, rule: str, message: str):
        super().__init__(f"[{rule}] {message}")
        self.rule = rule


def linear_snr(esn0_db: float) -> float:
    """Convert a power ratio in dB to linear scale."""
    if not math.isfinite(esn0_db):
        raise ValueError(f"esn0_db must be finite, got {esn0_db!r}")
    return 10.0 ** (esn0_db / 10.0)


def collision_free_rate(snr: float) -> float:
    """Largest rate a clean replica supports, log2(1 + snr)."""
    return math.log2(1.0 + snr)


@dataclass(frozen=True)
class StopRule:
    """Adaptive stopping: whichever limit is hit first ends the cell.

    ``min_packet_errors=None`` disables the error-count limit.
    """

    min_packet_errors: Optional[int] = 1000
    max_packets: int = 100_000

    def __post_init__(self):
        if self.max_packets < 1:
            raise ConfigError("stop_rule", "max_packets must be >= 1")
        if self.min_packet_errors is not None and self.min_packet_errors < 1:
            raise ConfigError("stop_rule", "min_packet_errors must be >= 1 or None")


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one simulation cell.

    ``sim_duration=None`` sizes the timeline from ``stop_rule.max_packets``
    plus the two guard zones. ``grid_symbols`` switches mutual information
    to a per-symbol sampled sum with that many symbols per packet.
    """

    scheme: Scheme = Scheme.ECRA_MRC
    g_load: float = 1.0
    degree: int = 2
    rate: float = 1.5
    esn0_db: float = 6.0
    vf_len: int = 200
    window_len: float = 600.0
    window_shift: float = 20.0
    max_sic_iters: int = 20
    sim_duration: Optional[float] = None
    seed: int = 0
    stop_rule: StopRule = field(default_factory=StopRule)
    grid_symbols: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if isinstance(self.stop_rule, dict):
            object.__setattr__(self, "stop_rule", StopRule(**self.stop_rule))
        if self.scheme is Scheme.ALOHA:
            object.__setattr__(self, "degree", 1)
        self.validate()

    @property
    def snr(self) -> float:
        return linear_snr(self.esn0_db)

    def validate(self) -> None:
        for name in ("g_load", "rate", "esn0_db", "window_len", "window_shift"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("finite", f"{name} must be finite")
        if self.g_load < 0:
            raise ConfigError("g_load", "g_load must be >= 0")
        if self.degree < 1:
            raise ConfigError("degree", "degree must be >= 1")
        if self.rate <= 0:
            raise ConfigError("rate", "rate must be > 0")
        if self.vf_len < self.degree:
            raise ConfigError("vf_len", f"vf_len={self.vf_len} cannot hold {self.degree} replicas")
        if self.window_len <= 0:
            raise ConfigError("window_len", "window_len must be > 0")
        if self.window_shift <= 0:
            raise ConfigError("window_shift", "window_shift must be > 0")
        if self.scheme.asynchronous and self.window_len < self.vf_len:
            raise ConfigError("window_vf", "window_len must be >= vf_len")
        if self.max_sic_iters < 1:
            raise ConfigError("max_sic_iters", "max_sic_iters must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "seed must be a 64-bit unsigned integer")
        if self.sim_duration is not None and not (self.sim_duration > 0 and math.isfinite(self.sim_duration)):
            raise ConfigError("sim_duration", "sim_duration must be finite and > 0")
        if self.grid_symbols is not None and self.grid_symbols < 1:
            raise ConfigError("grid_symbols", "grid_symbols must be >= 1")
        r_f = collision_free_rate(self.snr)
        # tiny slack keeps rate == log2(1 + snr) computed elsewhere admissible
        if self.rate > r_f * (1 + 1e-12):
            raise ConfigError("rate_capacity", f"rate {self.rate} exceeds log2(1+snr) = {r_f:.6f}")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scheme"] = self.scheme.value
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def duration(self) -> float:
        """Timeline length in packet durations, including both guard zones."""
        if self.sim_duration is not None:
            return float(self.sim_duration)
        guard = 2.0 * self.window_len + self.vf_len
        if self.g_load == 0:
            return guard + 1.0
        return guard + 1.02 * self.stop_rule.max_packets / self.g_load + 10.0


@dataclass(frozen=True)
class Replica:
    user_id: int
    start: float
    replica_idx: int

    @property
    def end(self) -> float:
        return self.start + 1.0


@dataclass(frozen=True, slots=True)
class UserOutcome:
    user_id: int
    decoded: bool
    decode_phase: DecodePhase
    window_index: int

    def __post_init__(self):
        if self.decoded == (self.decode_phase is DecodePhase.NONE):
            raise ValueError("decode_phase must be NONE exactly when the user is not decoded")
