"""Figures of merit: PLR with confidence interval, throughput, spectral
efficiency, and the rate-optimized normalized capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .core import Scheme, SimConfig, StopRule, UserOutcome, linear_snr
from .decoder import decode_stream, draw_traffic
from .slotted import simulate_crdsa


@dataclass(frozen=True)
class CellResult:
    g_load: float
    rate: float
    packets_observed: int
    packets_lost: int
    plr: float
    plr_ci95: tuple[float, float]
    throughput: float
    spectral_eff: float

    @classmethod
    def from_counts(cls, packets: int, lost: int, g_load: float, rate: float) -> "CellResult":
        if packets < 0 or not 0 <= lost <= packets:
            raise ValueError("need 0 <= lost <= packets")
        if packets == 0:
            if g_load > 0:
                raise ValueError("no packets observed")
            return cls(g_load, rate, 0, 0, 0.0, (0.0, 0.0), 0.0, 0.0)
        plr = lost / packets
        s = (1.0 - plr) * g_load
        return cls(g_load, rate, packets, lost, plr, wilson_interval(lost, packets), s, s * rate)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(outcomes: Sequence[UserOutcome], config: SimConfig) -> CellResult:
    if not outcomes:
        raise ValueError("zero observed packets")
    lost = sum(1 for o in outcomes if not o.decoded)
    return CellResult.from_counts(len(outcomes), lost, config.g_load, config.rate)


def simulate_counts(config: SimConfig) -> tuple[int, int]:
    """(observed packets, lost packets) for one cell."""
    if config.g_load == 0:
        return 0, 0
    if config.scheme is Scheme.CRDSA:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        outs = simulate_crdsa(config, rng)
        return len(outs), sum(1 for o in outs if not o.decoded)
    res = decode_stream(config, draw_traffic(config))
    counted = res.counted()
    return int(counted.sum()), int((counted & ~res.decoded).sum())


def simulate(config: SimConfig) -> CellResult:
    packets, lost = simulate_counts(config)
    return CellResult.from_counts(packets, lost, config.g_load, config.rate)


@dataclass(frozen=True)
class CapacityPoint:
    g_load: float
    best_rate: float
    xi_star: float
    eta: float
    c_g: float
    p_t_over_n: float
    rates: tuple[float, ...] = ()
    xis: tuple[float, ...] = ()


def default_rate_grid(r_star: float, n: int = 40, lo: float = 0.05) -> np.ndarray:
    """``n`` log-spaced rates in (lo, r_star]."""
    return np.geomspace(lo, r_star, n + 1)[1:]


def capacity_sweep(scheme, g_load: float, pg_over_n_db: float,
                   rate_grid: Optional[Sequence[float]] = None,
                   packets_per_rate: int = 20_000,
                   rng: Optional[np.random.Generator] = None,
                   base: Optional[SimConfig] = None) -> CapacityPoint:
    """Grid-maximize spectral efficiency over the rate at fixed aggregate power.

    Each user transmits at ``P_t = P_g / (G d)``. Every grid rate reuses one
    seed, so rates are compared on identical traffic.
    """
    scheme = Scheme(scheme)
    base = base or SimConfig()
    degree = 1 if scheme is Scheme.ALOHA else base.degree
    if g_load <= 0:
        raise ValueError("g_load must be > 0")
    pg = linear_snr(pg_over_n_db)
    p_t = pg / (g_load * degree)
    r_star = math.log2(1.0 + p_t)
    grid = default_rate_grid(r_star) if rate_grid is None else np.asarray(rate_grid, dtype=float)
    grid = grid[(grid > 0) & (grid <= r_star * (1 + 1e-12))]
    if grid.size == 0:
        raise ValueError(f"no grid rate is admissible (R* = {r_star:.4f})")
    rng = rng or np.random.default_rng(base.seed)
    seed = int(rng.integers(2**63))
    esn0_db = 10.0 * math.log10(p_t)
    xis = []
    for rate in grid:
        cfg = base.replace(scheme=scheme, g_load=g_load, degree=degree, rate=float(min(rate, r_star)),
                           esn0_db=esn0_db, seed=seed, sim_duration=None,
                           stop_rule=StopRule(None, packets_per_rate))
        xis.append(simulate(cfg).spectral_eff)
    k = int(np.argmax(xis))
    c_g = math.log2(1.0 + pg)
    return CapacityPoint(g_load, float(grid[k]), xis[k], xis[k] / c_g, c_g, p_t,
                         tuple(float(r) for r in grid), tuple(xis))
