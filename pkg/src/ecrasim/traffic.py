"""Poisson user arrivals and replica placement inside each virtual frame."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ArrivalStream:
    """User arrivals sorted by first-replica time; user ids are 0..n-1.

    ``offsets`` (n_users x degree), once placed, holds each replica's delay
    from the user's first replica.
    """

    t0: np.ndarray
    offsets: Optional[np.ndarray] = None

    @classmethod
    def from_users(cls, starts: list[list[float]]) -> "ArrivalStream":
        """Explicit layout: one list of replica starts per user, users ordered by first start."""
        starts = [sorted(s) for s in starts]
        t0 = np.array([s[0] for s in starts], dtype=float)
        if np.any(np.diff(t0) < 0):
            raise ValueError("users must be ordered by first replica start")
        offsets = np.array([[x - s[0] for x in s] for s in starts], dtype=float)
        return cls(t0, offsets.reshape(len(starts), -1))

    def with_offsets(self, degree: int, vf_len: int, rng: np.random.Generator) -> "ArrivalStream":
        return ArrivalStream(self.t0, replica_offsets(len(self.t0), degree, vf_len, rng))

    def __len__(self) -> int:
        return len(self.t0)

    @property
    def user_ids(self) -> np.ndarray:
        return np.arange(len(self.t0))

    def __iter__(self):
        return iter(zip(range(len(self.t0)), self.t0.tolist()))


def generate_arrivals(g_load: float, duration: float, rng: np.random.Generator) -> ArrivalStream:
    """Poisson process of intensity ``g_load`` on ``[0, duration)``.

    Draws the count first and then the order statistics of uniforms, which has
    the same law as cumulated exponential gaps.
    """
    if not (math.isfinite(g_load) and math.isfinite(duration)):
        raise ValueError("g_load and duration must be finite")
    if g_load < 0:
        raise ValueError("g_load must be >= 0")
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if g_load == 0:
        return ArrivalStream(np.empty(0))
    n = rng.poisson(g_load * duration)
    t0 = np.sort(rng.uniform(0.0, duration, size=n))
    return ArrivalStream(t0)


def replica_offsets(n_users: int, degree: int, vf_len: int, rng: np.random.Generator) -> np.ndarray:
    """Offsets of every replica from its user's first replica, shape (n_users, degree).

    Column 0 is zero. The other ``degree - 1`` offsets are uniform on
    ``[1, vf_len - 1]`` conditioned on pairwise gaps >= 1. The conditional law is
    sampled exactly: sorted points with unit gaps map one-to-one onto sorted
    uniforms on ``[1, vf_len - degree + 1]`` via ``y_i = z_i + i``.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if vf_len < degree:
        raise ValueError(f"vf_len={vf_len} cannot hold {degree} non-overlapping replicas")
    k = degree - 1
    out = np.zeros((n_users, degree))
    if k == 0 or n_users == 0:
        return out
    z = np.sort(rng.uniform(1.0, float(vf_len - k), size=(n_users, k)), axis=1)
    out[:, 1:] = z + np.arange(k)
    return out


def place_replicas(t0: float, degree: int, vf_len: int, rng: np.random.Generator) -> list[float]:
    """Sorted replica start times of one user whose first replica starts at ``t0``."""
    return (t0 + replica_offsets(1, degree, vf_len, rng)[0]).tolist()
