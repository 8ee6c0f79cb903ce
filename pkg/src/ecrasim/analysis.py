"""Closed-form low-load packet loss approximation.

Only unresolvable collision patterns between two users are counted. The loss
probability follows from how many disjoint vulnerable periods fit into one
virtual frame, and the vulnerable period length follows from the fraction of
a packet (or combined observation) that must be interference-free for the
chosen rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln

Infinite = float("inf")


@dataclass(frozen=True)
class RatePoints:
    """Mutual information of the canonical interference patterns.

    r_f, r_i: single replica, clean / one interferer throughout.
    r_f2, r_i1, r_i2: two-replica MRC with zero, one, or two replicas
    carrying one interferer.
    """

    r_f: float
    r_i: float
    r_f2: float
    r_i1: float
    r_i2: float


@dataclass(frozen=True)
class VulnerableParams:
    phi: float
    t_v: float
    n_v: Union[int, float]


def rate_points(snr: float) -> RatePoints:
    if not snr >= 0:
        raise ValueError("snr must be >= 0")
    one = snr / (1.0 + snr)
    return RatePoints(
        r_f=math.log2(1.0 + snr),
        r_i=math.log2(1.0 + one),
        r_f2=math.log2(1.0 + 2.0 * snr),
        r_i1=math.log2(1.0 + snr + one),
        r_i2=math.log2(1.0 + 2.0 * one),
    )


def vulnerable_fraction_fec(rate: float, snr: float) -> float:
    """Minimum interference-free fraction of a single replica that still decodes."""
    rp = rate_points(snr)
    if rate <= 0:
        raise ValueError("rate must be > 0")
    if rate > rp.r_f * (1 + 1e-12):
        raise ValueError(f"rate {rate} exceeds log2(1+snr) = {rp.r_f:.6f}")
    if rate < rp.r_i:
        return 0.0
    return min(1.0, (rate - rp.r_i) / (rp.r_f - rp.r_i))


def vulnerable_fraction_mrc(rate: float, snr: float, alpha: float) -> tuple[float, float]:
    """(phi_m, t_v) for two-replica MRC.

    ``alpha`` is the ratio of the singly-interfered portion to the clean
    portion of the combined observation.
    """
    rp = rate_points(snr)
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if rate <= 0:
        raise ValueError("rate must be > 0")
    if rate > rp.r_f2 * (1 + 1e-12):
        raise ValueError(f"rate {rate} exceeds log2(1+2 snr) = {rp.r_f2:.6f}")
    if rate < rp.r_i2:
        return 0.0, 0.0
    phi = (rate - rp.r_i2) / (rp.r_f2 - rp.r_i2 + alpha * (rp.r_i1 - rp.r_i2))
    return phi, 2.0 * phi * (1.0 + alpha / 2.0)


def n_vulnerable(vf_len: int, t_v: float) -> Union[int, float]:
    """Disjoint vulnerable periods per virtual frame; ``inf`` when t_v == 0."""
    if t_v < 0:
        raise ValueError("t_v must be >= 0")
    if t_v == 0:
        return Infinite
    return math.floor(vf_len / t_v)


def vulnerable_params_fec(rate: float, snr: float, vf_len: int) -> VulnerableParams:
    phi = vulnerable_fraction_fec(rate, snr)
    t_v = 2.0 * phi
    return VulnerableParams(phi, t_v, n_vulnerable(vf_len, t_v))


def vulnerable_params_mrc(rate: float, snr: float, alpha: float, vf_len: int) -> VulnerableParams:
    phi, t_v = vulnerable_fraction_mrc(rate, snr, alpha)
    return VulnerableParams(phi, t_v, n_vulnerable(vf_len, t_v))


def _log_comb(n: float, k: int) -> float:
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def default_m_max(lam: float) -> int:
    # Poisson tail beyond lam + 12 sqrt(lam) + 40 is far below 1e-12 of the mass
    return int(math.ceil(lam + 12.0 * math.sqrt(lam) + 40.0))


def plr_approximation(g_load: float, vf_len: int, n_v: Union[int, float], degree: int,
                      m_max: Optional[int] = None) -> float:
    """Two-user UCP approximation of the packet loss rate.

    Sums, over the Poisson number ``m`` of users active in a virtual frame,
    the chance that the tagged user and one other user put all their replicas
    into each other's vulnerable periods.
    """
    if g_load < 0 or not math.isfinite(g_load):
        raise ValueError("g_load must be finite and >= 0")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if math.isinf(n_v) or g_load == 0:
        return 0.0
    n_v = int(n_v)
    if n_v < degree:
        raise ValueError(f"n_v={n_v} < degree={degree}: approximation undefined")
    lam = vf_len * g_load
    if m_max is None:
        m_max = default_m_max(lam)
    m = np.arange(2, m_max + 1, dtype=float)
    log_pois = -lam + m * math.log(lam) - gammaln(m + 1)
    # C(m,2) * 2/m == m - 1
    log_terms = log_pois + np.log(m - 1.0) - math.log(degree) - _log_comb(n_v, degree)
    return float(np.exp(log_terms).sum())


def clean_fractions(delta1: np.ndarray, delta2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Measure where both replicas are clean (f0) and exactly one is hit (f1).

    Replica r of the tagged user is overlapped by one interfering replica
    starting ``delta_r`` later (|delta_r| < 1), i.e. on the local interval
    ``[max(0, delta_r), min(1, 1 + delta_r))``.
    """
    a1, b1 = np.maximum(0.0, delta1), np.minimum(1.0, 1.0 + delta1)
    a2, b2 = np.maximum(0.0, delta2), np.minimum(1.0, 1.0 + delta2)
    hit1 = b1 - a1
    hit2 = b2 - a2
    both = np.clip(np.minimum(b1, b2) - np.maximum(a1, a2), 0.0, None)
    union = hit1 + hit2 - both
    f0 = 1.0 - union
    f1 = union - both
    return f0, f1


def estimate_alpha(rate: float, snr: float, rng: np.random.Generator, n_samples: int = 100_000) -> float:
    """Mean ratio of singly-interfered to clean portion over two-user clusters.

    Each sample overlaps both replicas of the tagged user with one replica of
    the other user, at independent uniform relative offsets in (-1, 1). The
    raw ratio f1/f0 is heavy-tailed (f0 vanishes on a set of positive
    measure), so every sample is clipped to (1 - phi_m) / phi_m with phi_m
    taken at alpha = 0, the largest admissible clean fraction. Samples with
    no clean portion take the clip value, unless no singly-hit portion exists
    either, in which case they contribute 0.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    phi0, _ = vulnerable_fraction_mrc(rate, snr, 0.0)
    if phi0 == 0.0:
        return 0.0
    cap = (1.0 - phi0) / phi0
    delta = rng.uniform(-1.0, 1.0, size=(2, n_samples))
    f0, f1 = clean_fractions(delta[0], delta[1])
    return float(alpha_samples(f0, f1, cap).mean())


def alpha_samples(f0: np.ndarray, f1: np.ndarray, cap: float) -> np.ndarray:
    f0 = np.asarray(f0, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    clean = f0 > 0
    ratio = np.where(f1 > 0, cap, 0.0)
    ratio[clean] = np.minimum(f1[clean] / f0[clean], cap)
    return ratio


def plr_curve_fec(g_loads, rate: float, snr: float, vf_len: int, degree: int) -> list[float]:
    vp = vulnerable_params_fec(rate, snr, vf_len)
    return [plr_approximation(g, vf_len, vp.n_v, degree) for g in g_loads]


def plr_curve_mrc(g_loads, rate: float, snr: float, vf_len: int, alpha: float) -> list[float]:
    vp = vulnerable_params_mrc(rate, snr, alpha, vf_len)
    return [plr_approximation(g, vf_len, vp.n_v, 2) for g in g_loads]
