"""Compiled sliding-window SIC/combining decoder.

Replicas arrive as start-sorted arrays. A replica is retested only when its
interference profile changed since its last failed test (``dirty``), and a
user's combined observation only when one of its replicas changed
(``cdirty``). A failed test on an unchanged profile fails again, so skipping
it leaves the scan semantics of ``decoder.sic_phase`` intact.
"""
import math

import numpy as np
from numba import njit

ALOHA, CRA, ECRA_SC, ECRA_MRC = 0, 1, 2, 3
PHASE_NONE, PHASE_SIC, PHASE_COMB = 0, 1, 2


@njit(cache=True)
def _mi_term(m, snr):
    return math.log2(1.0 + snr / (1.0 + m * snr))


@njit(cache=True)
def _collect(i, start, owner, active, ends, rstarts):
    """Fill left-neighbor end offsets (descending) and right-neighbor start
    offsets (ascending) for replica i; return (n_left, n_right, n_full)."""
    s = start[i]
    me = owner[i]
    n = start.shape[0]
    nl = 0
    nfull = 0
    j = i - 1
    while j >= 0 and s - start[j] < 1.0:
        if active[j] and owner[j] != me:
            ends[nl] = 1.0 + (start[j] - s)
            nl += 1
        j -= 1
    nr = 0
    j = i + 1
    while j < n and start[j] - s < 1.0:
        if active[j] and owner[j] != me:
            d = start[j] - s
            if d <= 0.0:
                nfull += 1
            else:
                rstarts[nr] = d
                nr += 1
        j += 1
    return nl, nr, nfull


@njit(cache=True)
def replica_mi(i, start, owner, active, snr, table, grid, ends, rstarts):
    nl, nr, nfull = _collect(i, start, owner, active, ends, rstarts)
    nt = table.shape[0]
    if grid > 0:
        acc = 0.0
        for k in range(grid):
            x = (k + 0.5) / grid
            m = nfull
            for q in range(nl):
                if x < ends[q]:
                    m += 1
            for q in range(nr):
                if x >= rstarts[q]:
                    m += 1
            acc += table[m] if m < nt else _mi_term(m, snr)
        return acc / grid
    count = nl + nfull
    pos = 0.0
    mi = 0.0
    li = nl - 1
    ri = 0
    while li >= 0 or ri < nr:
        if ri >= nr or (li >= 0 and ends[li] <= rstarts[ri]):
            nxt = ends[li]
            step = -1
            li -= 1
        else:
            nxt = rstarts[ri]
            step = 1
            ri += 1
        if nxt > pos:
            mi += (nxt - pos) * (table[count] if count < nt else _mi_term(count, snr))
            pos = nxt
        count += step
    if pos < 1.0:
        mi += (1.0 - pos) * (table[count] if count < nt else _mi_term(count, snr))
    return mi


@njit(cache=True)
def combined_mi(u, user_reps, start, owner, active, snr, mrc, grid, ends, rstarts, ev_pos, ev_rep, ev_step):
    d = user_reps.shape[1]
    counts = np.zeros(d, dtype=np.int64)
    ne = 0
    if grid > 0:
        # per-symbol counts, straight from the neighbor offsets
        lefts = np.zeros((d, ends.shape[0]))
        rights = np.zeros((d, rstarts.shape[0]))
        nls = np.zeros(d, dtype=np.int64)
        nrs = np.zeros(d, dtype=np.int64)
        nfs = np.zeros(d, dtype=np.int64)
        for r in range(d):
            nl, nr, nf = _collect(user_reps[u, r], start, owner, active, ends, rstarts)
            nls[r] = nl
            nrs[r] = nr
            nfs[r] = nf
            lefts[r, :nl] = ends[:nl]
            rights[r, :nr] = rstarts[:nr]
        acc = 0.0
        for k in range(grid):
            x = (k + 0.5) / grid
            g = 0.0
            for r in range(d):
                m = nfs[r]
                for q in range(nls[r]):
                    if x < lefts[r, q]:
                        m += 1
                for q in range(nrs[r]):
                    if x >= rights[r, q]:
                        m += 1
                sinr = snr / (1.0 + m * snr)
                if mrc:
                    g += sinr
                elif sinr > g:
                    g = sinr
            acc += math.log2(1.0 + g)
        return acc / grid
    for r in range(d):
        nl, nr, nf = _collect(user_reps[u, r], start, owner, active, ends, rstarts)
        counts[r] = nl + nf
        for q in range(nl):
            ev_pos[ne] = ends[q]
            ev_rep[ne] = r
            ev_step[ne] = -1
            ne += 1
        for q in range(nr):
            ev_pos[ne] = rstarts[q]
            ev_rep[ne] = r
            ev_step[ne] = 1
            ne += 1
    order = np.argsort(ev_pos[:ne])
    pos = 0.0
    mi = 0.0
    for k in range(ne + 1):
        nxt = 1.0 if k == ne else ev_pos[order[k]]
        if nxt > pos:
            g = 0.0
            for r in range(d):
                sinr = snr / (1.0 + counts[r] * snr)
                if mrc:
                    g += sinr
                elif sinr > g:
                    g = sinr
            mi += (nxt - pos) * math.log2(1.0 + g)
            pos = nxt
        if k < ne:
            e = order[k]
            counts[ev_rep[e]] += ev_step[e]
    return mi


@njit(cache=True)
def _cancel(u, user_reps, start, owner, active, dirty, cdirty):
    d = user_reps.shape[1]
    n = start.shape[0]
    for r in range(d):
        active[user_reps[u, r]] = False
    for r in range(d):
        i = user_reps[u, r]
        s = start[i]
        j = i - 1
        while j >= 0 and s - start[j] < 1.0:
            if active[j]:
                dirty[j] = True
                cdirty[owner[j]] = True
            j -= 1
        j = i + 1
        while j < n and start[j] - s < 1.0:
            if active[j]:
                dirty[j] = True
                cdirty[owner[j]] = True
            j += 1


@njit(cache=True)
def _max_neighbors(start):
    n = start.shape[0]
    best = 0
    lo = 0
    hi = 0
    for i in range(n):
        while start[i] - start[lo] >= 1.0:
            lo += 1
        if hi < i:
            hi = i
        while hi + 1 < n and start[hi + 1] - start[i] < 1.0:
            hi += 1
        if hi - lo > best:
            best = hi - lo
    return best


@njit(cache=True)
def decode_timeline(start, owner, user_reps, observed, snr, rate, mode, window_len, window_shift,
                    max_iters, grid, max_packets, min_errors):
    """Run the sliding-window receiver over one timeline.

    Returns per-user (decoded, phase, window index, finalized). Users are
    finalized once their last replica has left the window; counting stops
    when ``max_packets`` observed users are finalized or ``min_errors`` of
    them were lost (``min_errors = 0`` disables that limit).
    """
    n = start.shape[0]
    n_users, d = user_reps.shape
    decoded = np.zeros(n_users, dtype=np.int8)
    phase = np.zeros(n_users, dtype=np.int8)
    win = np.full(n_users, -1, dtype=np.int64)
    finalized = np.zeros(n_users, dtype=np.bool_)
    if n_users == 0:
        return decoded, phase, win, finalized

    nb = _max_neighbors(start) + 2
    ends = np.empty(nb)
    rstarts = np.empty(nb)
    ev_pos = np.empty(d * 2 * nb)
    ev_rep = np.empty(d * 2 * nb, dtype=np.int64)
    ev_step = np.empty(d * 2 * nb, dtype=np.int64)
    table = np.empty(nb + 1)
    for m in range(nb + 1):
        table[m] = _mi_term(m, snr)

    active = np.ones(n, dtype=np.bool_)
    last_start = np.empty(n_users)
    for u in range(n_users):
        last_start[u] = start[user_reps[u, d - 1]]

    if mode == ALOHA:
        # classical receiver: every replica against the full, uncancelled timeline
        packets = 0
        losses = 0
        for i in range(n):
            u = owner[i]
            w = int(math.ceil((start[i] + 1.0 - window_len) / window_shift))
            win[u] = max(w, 0)
            if replica_mi(i, start, owner, active, snr, table, grid, ends, rstarts) >= rate:
                decoded[u] = 1
                phase[u] = PHASE_SIC
            finalized[u] = True
            if observed[u]:
                packets += 1
                if decoded[u] == 0:
                    losses += 1
                if packets >= max_packets or (min_errors > 0 and losses >= min_errors):
                    break
        return decoded, phase, win, finalized

    combining = mode == ECRA_SC or mode == ECRA_MRC
    mrc = mode == ECRA_MRC
    dirty = np.ones(n, dtype=np.bool_)
    cdirty = np.ones(n_users, dtype=np.bool_)
    fin_order = np.argsort(last_start, kind="mergesort")
    f = 0
    packets = 0
    losses = 0
    a = 0
    b = 0
    w = 0
    stop = False
    while w * window_shift <= start[n - 1] and not stop:
        lo = w * window_shift
        hi = lo + window_len
        while a < n and start[a] < lo:
            a += 1
        while b < n and start[b] + 1.0 <= hi:
            b += 1
        for _round in range(max_iters):
            for _scan in range(max_iters):
                got = 0
                for i in range(a, b):
                    if dirty[i] and active[i]:
                        dirty[i] = False
                        if replica_mi(i, start, owner, active, snr, table, grid, ends, rstarts) >= rate:
                            u = owner[i]
                            decoded[u] = 1
                            phase[u] = PHASE_SIC
                            win[u] = w
                            _cancel(u, user_reps, start, owner, active, dirty, cdirty)
                            got += 1
                if got == 0:
                    break
            if not combining:
                break
            got = 0
            for i in range(a, b):
                u = owner[i]
                if active[i] and user_reps[u, 0] == i and cdirty[u] and user_reps[u, d - 1] < b:
                    cdirty[u] = False
                    if combined_mi(u, user_reps, start, owner, active, snr, mrc, grid,
                                   ends, rstarts, ev_pos, ev_rep, ev_step) >= rate:
                        decoded[u] = 1
                        phase[u] = PHASE_COMB
                        win[u] = w
                        _cancel(u, user_reps, start, owner, active, dirty, cdirty)
                        got += 1
            if got == 0:
                break
        nxt = lo + window_shift
        while f < n_users and last_start[fin_order[f]] < nxt:
            u = fin_order[f]
            finalized[u] = True
            if decoded[u] == 0:
                win[u] = int(math.floor(last_start[u] / window_shift))
            if observed[u]:
                packets += 1
                if decoded[u] == 0:
                    losses += 1
                if packets >= max_packets or (min_errors > 0 and losses >= min_errors):
                    stop = True
                    break
            f += 1
        w += 1
    if not stop:
        while f < n_users:
            u = fin_order[f]
            finalized[u] = True
            if decoded[u] == 0:
                win[u] = int(math.floor(last_start[u] / window_shift))
            f += 1
    return decoded, phase, win, finalized
