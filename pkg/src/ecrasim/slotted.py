"""Frame-synchronous CRDSA baseline under the same threshold decoding model.

Replicas are slot-aligned, so every replica sees a constant number of
interferers over its whole duration and the decode test collapses to a
single comparison of the rate against one MI level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DecodePhase, Scheme, SimConfig, UserOutcome


def max_tolerated_interferers(rate: float, snr: float) -> int:
    """Largest interferer count m with log2(1 + snr/(1 + m snr)) >= rate, or -1."""
    if rate > math.log2(1.0 + snr) * (1 + 1e-12):
        return -1
    m = 0
    while math.log2(1.0 + snr / (1.0 + (m + 1) * snr)) >= rate:
        m += 1
        if m > 10_000:
            break
    return m


@dataclass
class SlottedFrame:
    n_slots: int
    user_slots: np.ndarray  # (n_users, degree), distinct slots per row

    def __post_init__(self):
        us = np.asarray(self.user_slots)
        if us.ndim != 2:
            raise ValueError("user_slots must be 2-D")
        if us.size and (us.min() < 0 or us.max() >= self.n_slots):
            raise ValueError("slot index out of range")
        for row in us:
            if len(set(row.tolist())) != len(row):
                raise ValueError("a user must pick distinct slots")
        self.user_slots = us

    @property
    def n_users(self) -> int:
        return self.user_slots.shape[0]

    def slot_users(self) -> list[list[int]]:
        occ: list[list[int]] = [[] for _ in range(self.n_slots)]
        for u, row in enumerate(self.user_slots.tolist()):
            for s in row:
                occ[s].append(u)
        return occ

    @classmethod
    def random(cls, n_users: int, n_slots: int, degree: int, rng: np.random.Generator) -> "SlottedFrame":
        if degree > n_slots:
            raise ValueError("degree exceeds frame length")
        if n_users == 0:
            return cls(n_slots, np.empty((0, degree), dtype=np.int64))
        keys = rng.random((n_users, n_slots))
        slots = np.argpartition(keys, degree - 1, axis=1)[:, :degree]
        return cls(n_slots, np.sort(slots, axis=1))


def peel(frame: SlottedFrame, m_tol: int, max_iters: int,
         slot_order: Optional[Sequence[int]] = None) -> np.ndarray:
    """Iterative SIC over one frame; returns a boolean decoded mask per user.

    A slot whose unresolved occupancy ``c`` satisfies ``c - 1 <= m_tol``
    decodes all of its occupants, which are then removed from every slot they
    chose.
    """
    decoded = np.zeros(frame.n_users, dtype=bool)
    if m_tol < 0 or frame.n_users == 0:
        return decoded
    occ = frame.slot_users()
    count = [len(o) for o in occ]
    order = list(slot_order) if slot_order is not None else range(frame.n_slots)
    user_slots = frame.user_slots.tolist()
    for _ in range(max_iters):
        progress = False
        for s in order:
            c = count[s]
            if c == 0 or c - 1 > m_tol:
                continue
            for u in occ[s]:
                if decoded[u]:
                    continue
                decoded[u] = True
                progress = True
                for t in user_slots[u]:
                    count[t] -= 1
        if not progress:
            break
    return decoded


def simulate_crdsa(config: SimConfig, rng: np.random.Generator) -> list[UserOutcome]:
    """Independent frames of ``config.vf_len`` slots until the stop rule or
    the configured duration is exhausted."""
    if config.scheme is not Scheme.CRDSA:
        raise ValueError("simulate_crdsa needs scheme=CRDSA")
    n_slots = config.vf_len
    m_tol = max_tolerated_interferers(config.rate, config.snr)
    rule = config.stop_rule
    if config.sim_duration is not None:
        max_frames = max(1, math.ceil(config.sim_duration / n_slots))
    else:
        max_frames = None
    out: list[UserOutcome] = []
    losses = 0
    frame_idx = 0
    while max_frames is None or frame_idx < max_frames:
        k = rng.poisson(config.g_load * n_slots)
        frame = SlottedFrame.random(k, n_slots, config.degree, rng)
        dec = peel(frame, m_tol, config.max_sic_iters)
        base = len(out)
        for u in range(k):
            ok = bool(dec[u])
            out.append(UserOutcome(base + u, ok, DecodePhase.SIC if ok else DecodePhase.NONE, frame_idx))
        losses += int(k - dec.sum())
        frame_idx += 1
        if len(out) >= rule.max_packets:
            break
        if rule.min_packet_errors and losses >= rule.min_packet_errors:
            break
        if config.g_load == 0 and max_frames is None:
            break
    return out
