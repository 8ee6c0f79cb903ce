"""Replica timeline with cancellation and exact interferer-count profiles."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import Replica


@dataclass(frozen=True)
class InterferenceProfile:
    """Piecewise-constant interferer count over a replica's local extent [0, 1).

    ``segments[k] = (offset, count)`` holds from ``offset`` up to the next
    segment's offset; the last segment runs to 1.
    """

    segments: tuple[tuple[float, int], ...]

    def __post_init__(self):
        segs = self.segments
        if not segs or segs[0][0] != 0.0:
            raise ValueError("profile must start at offset 0")
        for (a, ca), (b, cb) in zip(segs, segs[1:]):
            if not a < b:
                raise ValueError("profile offsets must be strictly increasing")
            if ca == cb:
                raise ValueError("adjacent segments must have different counts")
        for off, c in segs:
            if not 0.0 <= off < 1.0 or c < 0:
                raise ValueError(f"bad segment ({off}, {c})")

    @classmethod
    def clear(cls) -> "InterferenceProfile":
        return cls(((0.0, 0),))

    @classmethod
    def from_breakpoints(cls, pieces: Iterable[tuple[float, int]]) -> "InterferenceProfile":
        """Canonicalize (offset, count) pieces: drop empty pieces, merge equal runs."""
        out: list[tuple[float, int]] = []
        pieces = sorted(pieces)
        for i, (off, c) in enumerate(pieces):
            nxt = pieces[i + 1][0] if i + 1 < len(pieces) else 1.0
            if nxt <= off or off >= 1.0:
                continue
            if out and out[-1][1] == c:
                continue
            out.append((off, c))
        if out:
            out[0] = (0.0, out[0][1])
        return cls(tuple(out))

    def lengths(self) -> list[tuple[float, int]]:
        """(measure, count) for each segment."""
        offs = [s[0] for s in self.segments] + [1.0]
        return [(offs[k + 1] - offs[k], c) for k, (_, c) in enumerate(self.segments)]

    def count_at(self, x: float) -> int:
        k = bisect.bisect_right([s[0] for s in self.segments], x) - 1
        return self.segments[k][1]

    def integral(self) -> float:
        return sum(m * c for m, c in self.lengths())


def overlap_profile(target_start: float, others: Iterable[float]) -> InterferenceProfile:
    """Profile of a unit-length replica at ``target_start`` against unit replicas at ``others``."""
    events: list[tuple[float, int]] = []
    base = 0
    for s in others:
        delta = s - target_start
        if delta <= -1.0 or delta >= 1.0:
            continue
        if delta <= 0.0:
            base += 1
            events.append((1.0 + delta, -1))
        else:
            events.append((delta, +1))
    events.sort()
    pieces = [(0.0, base)]
    count = base
    for pos, step in events:
        count += step
        pieces.append((pos, count))
    # several events at one offset: keep the count after the last of them
    collapsed: dict[float, int] = {}
    for pos, c in pieces:
        collapsed[pos] = c
    return InterferenceProfile.from_breakpoints(collapsed.items())


class Timeline:
    """Set of replicas on the global time axis with per-replica activity flags.

    Replica ids are assigned in insertion order. Neighbor search walks a
    start-sorted index; only replicas starting less than one packet duration
    apart can overlap.
    """

    def __init__(self):
        self.replicas: list[Replica] = []
        self.active: list[bool] = []
        self._starts: list[float] = []
        self._ids: list[int] = []
        self._users: dict[int, list[int]] = {}

    @classmethod
    def from_users(cls, users: dict[int, Iterable[float]]) -> "Timeline":
        tl = cls()
        for uid, starts in users.items():
            tl.add_user(uid, starts)
        return tl

    def add_user(self, user_id: int, starts: Iterable[float]) -> list[int]:
        if user_id in self._users:
            raise ValueError(f"user {user_id} already present")
        starts = sorted(float(s) for s in starts)
        for a, b in zip(starts, starts[1:]):
            if b - a < 1.0:
                raise ValueError(f"replicas of user {user_id} overlap")
        rids = []
        for r, s in enumerate(starts):
            rid = len(self.replicas)
            self.replicas.append(Replica(user_id, s, r))
            self.active.append(True)
            k = bisect.bisect_right(self._starts, s)
            self._starts.insert(k, s)
            self._ids.insert(k, rid)
            rids.append(rid)
        self._users[user_id] = rids
        return rids

    @property
    def users(self) -> dict[int, list[int]]:
        return self._users

    def replicas_of(self, user_id: int) -> list[int]:
        return self._users[user_id]

    def ordered_ids(self) -> list[int]:
        """Replica ids by ascending start time (ties by id)."""
        return list(self._ids)

    def _check(self, rid: int) -> None:
        if not 0 <= rid < len(self.replicas):
            raise KeyError(f"unknown replica {rid}")

    def neighbors(self, rid: int) -> list[int]:
        """Active replicas of other users overlapping ``rid``."""
        self._check(rid)
        s = self.replicas[rid].start
        owner = self.replicas[rid].user_id
        lo = bisect.bisect_right(self._starts, s - 1.0)
        hi = bisect.bisect_left(self._starts, s + 1.0)
        return [
            j for j in self._ids[lo:hi]
            if j != rid and self.active[j] and self.replicas[j].user_id != owner
        ]


def build_profile(timeline: Timeline, rid: int) -> InterferenceProfile:
    """Interferer-count profile of replica ``rid`` against the active timeline."""
    timeline._check(rid)
    if not timeline.active[rid]:
        raise ValueError(f"replica {rid} is not active")
    starts = [timeline.replicas[j].start for j in timeline.neighbors(rid)]
    return overlap_profile(timeline.replicas[rid].start, starts)


def deactivate_user(timeline: Timeline, user_id: int) -> Optional[set[int]]:
    """Cancel every replica of ``user_id``.

    Returns the ids of other active replicas whose profile changed, or None if
    the user had already been cancelled (nothing is modified then).
    """
    rids = timeline.replicas_of(user_id)
    if not any(timeline.active[r] for r in rids):
        return None
    affected: set[int] = set()
    for r in rids:
        if timeline.active[r]:
            affected.update(timeline.neighbors(r))
    for r in rids:
        timeline.active[r] = False
    return affected
