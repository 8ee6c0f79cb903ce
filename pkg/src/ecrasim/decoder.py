"""Asynchronous receiver: threshold decoding, SC/MRC combining, two-phase SIC,
and the sliding-window driver.

The object-level functions (``sic_phase``, ``combining_phase``) operate on a
:class:`~ecrasim.interference.Timeline` and are the reference semantics.
``run_window_decoder`` uses the compiled kernel in :mod:`ecrasim._kernel` by
default; ``engine="reference"`` replays the same schedule through the
object-level functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernel
from .core import DecodePhase, Scheme, SimConfig, UserOutcome
from .interference import InterferenceProfile, Timeline, build_profile, deactivate_user
from .traffic import ArrivalStream, generate_arrivals, replica_offsets


def mutual_information(profile: InterferenceProfile, snr: float) -> float:
    """Measure-weighted Gaussian MI of a replica, in bits/symbol.

    A segment with ``m`` interferers has SINR ``snr / (1 + m*snr)``.
    """
    if not isinstance(profile, InterferenceProfile):
        raise TypeError("expected an InterferenceProfile")
    if not snr > 0:
        raise ValueError("snr must be > 0")
    return sum(
        length * math.log2(1.0 + snr / (1.0 + m * snr))
        for length, m in profile.lengths()
    )


def decode_test(mi: float, rate: float) -> bool:
    return rate <= mi


@dataclass(frozen=True)
class CombinedProfile:
    """Per-offset SINR of a combined observation; same layout as InterferenceProfile."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.segments or self.segments[0][0] != 0.0:
            raise ValueError("combined profile must start at offset 0")
        for (a, _), (b, _) in zip(self.segments, self.segments[1:]):
            if not a < b:
                raise ValueError("offsets must be strictly increasing")
        for _, g in self.segments:
            if not (g > 0 and math.isfinite(g)):
                raise ValueError("sinr must be finite and positive")

    def lengths(self) -> list[tuple[float, float]]:
        offs = [s[0] for s in self.segments] + [1.0]
        return [(offs[k + 1] - offs[k], g) for k, (_, g) in enumerate(self.segments)]

    def mutual_information(self) -> float:
        return sum(length * math.log2(1.0 + g) for length, g in self.lengths())


def _combine(profiles: Sequence[InterferenceProfile], snr: float, fuse) -> CombinedProfile:
    if not profiles:
        raise ValueError("need at least one replica profile")
    cuts = sorted({off for p in profiles for off, _ in p.segments})
    segs = []
    for off in cuts:
        counts = [p.count_at(off) for p in profiles]
        g = fuse([snr / (1.0 + m * snr) for m in counts])
        if segs and segs[-1][1] == g:
            continue
        segs.append((off, g))
    return CombinedProfile(tuple(segs))


def combine_sc(profiles: Sequence[InterferenceProfile], snr: float) -> CombinedProfile:
    """Selection combining: keep the best replica SINR at every offset."""
    return _combine(profiles, snr, max)


def combine_mrc(profiles: Sequence[InterferenceProfile], snr: float) -> CombinedProfile:
    """Maximal-ratio combining: replica SINRs add at every offset."""
    return _combine(profiles, snr, sum)


def sampled_mutual_information(timeline: Timeline, rid: int, snr: float, n_symbols: int) -> float:
    """MI of replica ``rid`` averaged over ``n_symbols`` symbol midpoints.

    Counts interferers at each sample point directly; independent of the
    profile construction.
    """
    rep = timeline.replicas[rid]
    others = [timeline.replicas[j].start for j in timeline.neighbors(rid)]
    x = rep.start + (np.arange(n_symbols) + 0.5) / n_symbols
    counts = np.zeros(n_symbols)
    for s in others:
        counts += (x >= s) & (x < s + 1.0)
    return float(np.mean(np.log2(1.0 + snr / (1.0 + counts * snr))))


@dataclass
class WindowState:
    lo: float
    hi: float
    index: int = 0
    undecoded: set[int] = field(default_factory=set)
    iterations: int = 0

    def contains(self, start: float) -> bool:
        return start >= self.lo and start + 1.0 <= self.hi


def _replica_mi(timeline: Timeline, rid: int, config: SimConfig) -> float:
    if config.grid_symbols:
        return sampled_mutual_information(timeline, rid, config.snr, config.grid_symbols)
    return mutual_information(build_profile(timeline, rid), config.snr)


def _combined_mi(timeline: Timeline, rids: list[int], config: SimConfig) -> float:
    snr = config.snr
    if config.grid_symbols:
        n = config.grid_symbols
        sinrs = []
        for rid in rids:
            rep = timeline.replicas[rid]
            x = rep.start + (np.arange(n) + 0.5) / n
            counts = np.zeros(n)
            for j in timeline.neighbors(rid):
                s = timeline.replicas[j].start
                counts += (x >= s) & (x < s + 1.0)
            sinrs.append(snr / (1.0 + counts * snr))
        sinrs = np.array(sinrs)
        fused = sinrs.max(axis=0) if config.scheme is Scheme.ECRA_SC else sinrs.sum(axis=0)
        return float(np.mean(np.log2(1.0 + fused)))
    profiles = [build_profile(timeline, r) for r in rids]
    combine = combine_sc if config.scheme is Scheme.ECRA_SC else combine_mrc
    return combine(profiles, snr).mutual_information()


def sic_phase(window: WindowState, timeline: Timeline, config: SimConfig,
              order: Optional[Sequence[int]] = None) -> set[int]:
    """Scan undecoded replicas inside the window, decode and cancel, until a
    full scan decodes nobody or ``max_sic_iters`` scans have run.

    ``order`` overrides the ascending-start scan order.
    """
    decoded: set[int] = set()
    scan = list(order) if order is not None else timeline.ordered_ids()
    for _ in range(config.max_sic_iters):
        progress = False
        for rid in scan:
            rep = timeline.replicas[rid]
            if not timeline.active[rid] or rep.user_id not in window.undecoded:
                continue
            if not window.contains(rep.start):
                continue
            if decode_test(_replica_mi(timeline, rid, config), config.rate):
                window.undecoded.discard(rep.user_id)
                decoded.add(rep.user_id)
                deactivate_user(timeline, rep.user_id)
                progress = True
        if not progress:
            break
    return decoded


def combining_phase(window: WindowState, timeline: Timeline, config: SimConfig) -> set[int]:
    """One combining sweep over undecoded users fully inside the window,
    in order of first-replica start."""
    if not config.scheme.uses_combining:
        return set()
    decoded: set[int] = set()
    candidates = []
    for uid in window.undecoded:
        rids = timeline.replicas_of(uid)
        if all(window.contains(timeline.replicas[r].start) for r in rids):
            candidates.append((timeline.replicas[rids[0]].start, uid))
    for _, uid in sorted(candidates):
        if uid not in window.undecoded:
            continue
        rids = timeline.replicas_of(uid)
        if decode_test(_combined_mi(timeline, rids, config), config.rate):
            window.undecoded.discard(uid)
            decoded.add(uid)
            deactivate_user(timeline, uid)
    return decoded


def decode_window(window: WindowState, timeline: Timeline, config: SimConfig) -> dict[int, DecodePhase]:
    """SIC and combining alternated to a fixed point at one window position."""
    found: dict[int, DecodePhase] = {}
    for _ in range(config.max_sic_iters):
        for u in sic_phase(window, timeline, config):
            found[u] = DecodePhase.SIC
        if not config.scheme.uses_combining:
            break
        combined = combining_phase(window, timeline, config)
        for u in combined:
            found[u] = DecodePhase.COMBINING
        if not combined:
            break
    return found


def draw_traffic(config: SimConfig) -> ArrivalStream:
    """Arrivals and replica offsets for one cell, from independent child seeds."""
    arr_seed, place_seed = np.random.SeedSequence(config.seed).spawn(2)
    stream = generate_arrivals(config.g_load, config.duration(), np.random.default_rng(arr_seed))
    offsets = replica_offsets(len(stream), config.degree, config.vf_len,
                              np.random.default_rng(place_seed))
    return ArrivalStream(stream.t0, offsets)


def observed_mask(config: SimConfig, t0: np.ndarray) -> np.ndarray:
    """Users clear of the guard zone at both ends of the timeline."""
    dur = config.duration()
    return (t0 >= config.window_len) & (t0 + config.vf_len <= dur - config.window_len)


@dataclass
class DecodeResult:
    """Per-user arrays from one decoded timeline."""

    decoded: np.ndarray
    phase: np.ndarray
    window: np.ndarray
    finalized: np.ndarray
    observed: np.ndarray

    def counted(self) -> np.ndarray:
        return self.observed & self.finalized

    def outcomes(self) -> list[UserOutcome]:
        phases = {0: DecodePhase.NONE, 1: DecodePhase.SIC, 2: DecodePhase.COMBINING}
        return [
            UserOutcome(int(u), bool(self.decoded[u]), phases[int(self.phase[u])], int(self.window[u]))
            for u in np.flatnonzero(self.counted())
        ]


_MODES = {Scheme.ALOHA: 0, Scheme.CRA: 1, Scheme.ECRA_SC: 2, Scheme.ECRA_MRC: 3}


def _sorted_layout(stream: ArrivalStream, degree: int):
    starts = (stream.t0[:, None] + stream.offsets).ravel()
    n_users = len(stream)
    owner = np.repeat(np.arange(n_users), degree)
    order = np.argsort(starts, kind="stable")
    pos = np.empty_like(order)
    pos[order] = np.arange(len(order))
    return starts[order], owner[order], pos.reshape(n_users, degree)


def decode_stream(config: SimConfig, stream: ArrivalStream, engine: str = "fast") -> DecodeResult:
    if config.scheme is Scheme.CRDSA:
        raise ValueError("CRDSA is frame-synchronous; use ecrasim.slotted.simulate_crdsa")
    if stream.offsets is None:
        raise ValueError("stream has no replica offsets; use draw_traffic or ArrivalStream.with_offsets")
    observed = observed_mask(config, stream.t0)
    if engine == "reference":
        return _decode_reference(config, stream, observed)
    if engine != "fast":
        raise ValueError(f"unknown engine {engine!r}")
    starts, owner, user_reps = _sorted_layout(stream, config.degree)
    rule = config.stop_rule
    decoded, phase, window, finalized = _kernel.decode_timeline(
        starts, owner, user_reps, observed,
        config.snr, config.rate, _MODES[config.scheme],
        float(config.window_len), float(config.window_shift), config.max_sic_iters,
        config.grid_symbols or 0,
        rule.max_packets, rule.min_packet_errors or 0,
    )
    return DecodeResult(decoded.astype(bool), phase, window, finalized, observed)


def _decode_reference(config: SimConfig, stream: ArrivalStream, observed: np.ndarray) -> DecodeResult:
    n = len(stream)
    tl = Timeline()
    for u, t0 in enumerate(stream.t0.tolist()):
        tl.add_user(u, (t0 + stream.offsets[u]).tolist())
    decoded = np.zeros(n, dtype=bool)
    phase = np.zeros(n, dtype=np.int8)
    window_idx = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return DecodeResult(decoded, phase, window_idx, np.ones(0, bool), observed)
    if config.scheme is Scheme.ALOHA:
        for rid in tl.ordered_ids():
            u = tl.replicas[rid].user_id
            s = tl.replicas[rid].start
            window_idx[u] = max(0, math.ceil((s + 1.0 - config.window_len) / config.window_shift))
            if decode_test(_replica_mi(tl, rid, config), config.rate):
                decoded[u] = True
                phase[u] = 1
        return DecodeResult(decoded, phase, window_idx, np.ones(n, bool), observed)
    last = max(r.start for r in tl.replicas)
    undecoded = set(range(n))
    w = 0
    while w * config.window_shift <= last:
        lo = w * config.window_shift
        win = WindowState(lo, lo + config.window_len, w, undecoded)
        for u, ph in decode_window(win, tl, config).items():
            decoded[u] = True
            phase[u] = 1 if ph is DecodePhase.SIC else 2
            window_idx[u] = w
        w += 1
    for u in np.flatnonzero(~decoded):
        last_start = tl.replicas[tl.replicas_of(int(u))[-1]].start
        window_idx[u] = math.floor(last_start / config.window_shift)
    return DecodeResult(decoded, phase, window_idx, np.ones(n, bool), observed)


def run_window_decoder(config: SimConfig, stream: Optional[ArrivalStream] = None,
                       engine: str = "fast") -> list[UserOutcome]:
    """Decode one cell and return outcomes for the users counted in statistics.

    Draws traffic from ``config.seed`` when no stream is given.
    """
    if stream is None:
        stream = draw_traffic(config)
    return decode_stream(config, stream, engine).outcomes()
