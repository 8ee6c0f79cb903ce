"""Declarative experiment runner: spec files in, CSV records out.

A spec is a flat TOML table. List-valued keys (``scheme``, ``g_load``,
``rate``, ``seeds``) span the cell set by cross product; each cell merges its
seeds into one record. Completed cells are journaled next to the CSV so an
interrupted run resumes where it stopped.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import analysis
from .core import ConfigError, Scheme, SimConfig, StopRule, linear_snr
from .metrics import CellResult, capacity_sweep, simulate_counts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

MODES = ("simulate", "sweep", "analyze", "alpha", "capacity")
CSV_FIELDS = (
    "scheme", "g_load", "rate", "esn0_db", "degree", "packets", "losses", "plr",
    "plr_ci_lo", "plr_ci_hi", "throughput", "spectral_eff", "seed_set", "wall_time_s",
)
CAPACITY_FIELDS = ("scheme", "g_load", "pg_over_n_db", "p_t_over_n", "best_rate", "xi_star", "c_g", "eta")
ALPHA_FIELDS = ("rate", "esn0_db", "alpha", "phi_m", "t_v", "n_v")
THREADS_ENV = "ECRASIM_THREADS"


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    mode: str = "sweep"
    scheme: list[str] = field(default_factory=lambda: ["ECRA_MRC"])
    g_load: list[float] = field(default_factory=lambda: [1.0])
    rate: list[float] = field(default_factory=lambda: [1.5])
    esn0_db: float = 6.0
    degree: int = 2
    vf_len: int = 200
    window_len: float = 600.0
    window_shift: float = 20.0
    max_sic_iters: int = 20
    seeds: list[int] = field(default_factory=lambda: [1])
    min_packet_errors: Optional[int] = None
    max_packets: int = 100_000
    output: Optional[str] = None
    pg_over_n_db: float = 6.0
    rate_points: int = 40
    alpha_samples: int = 1_000_000
    wall_time: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        if "g_load_range" in data:
            data["g_load"] = expand_range(data.pop("g_load_range"))
        if "rate_range" in data:
            data["rate"] = expand_range(data.pop("rate_range"))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        for key in ("scheme", "g_load", "rate", "seeds"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        spec = cls(**data)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise SpecError(f"cannot read spec {path}: {exc}") from exc
        data.setdefault("name", Path(path).stem)
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {MODES}")
        try:
            self.scheme = [Scheme(s).value for s in self.scheme]
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        if not self.seeds:
            raise SpecError("seeds must not be empty")
        if self.mode in ("simulate", "sweep"):
            self.cells()
        if self.mode == "analyze":
            bad = [s for s in self.scheme if s not in ("ALOHA", "CRA", "ECRA_MRC")]
            if bad:
                raise SpecError(f"no closed-form approximation for {bad}")
        if self.mode == "capacity" and any(g <= 0 for g in self.g_load):
            raise SpecError("capacity mode needs g_load > 0")

    def stop_rule(self) -> StopRule:
        return StopRule(self.min_packet_errors, self.max_packets)

    def config(self, scheme: str, g_load: float, rate: float, seed: int) -> SimConfig:
        return SimConfig(
            scheme=Scheme(scheme), g_load=float(g_load), degree=self.degree, rate=float(rate),
            esn0_db=float(self.esn0_db), vf_len=self.vf_len, window_len=float(self.window_len),
            window_shift=float(self.window_shift), max_sic_iters=self.max_sic_iters,
            seed=int(seed), stop_rule=self.stop_rule(),
        )

    def cells(self) -> list[tuple[SimConfig, list[SimConfig]]]:
        """(representative config, per-seed configs) for every cell."""
        out = []
        for scheme in self.scheme:
            for g in self.g_load:
                for r in self.rate:
                    try:
                        per_seed = [self.config(scheme, g, r, s) for s in self.seeds]
                    except ConfigError as exc:
                        raise SpecError(f"cell ({scheme}, G={g}, R={r}): {exc}") from exc
                    out.append((per_seed[0], per_seed))
        return out


def expand_range(spec) -> list[float]:
    """[start, stop, step] inclusive of stop, rounded to the step's decimals."""
    if not (isinstance(spec, list) and len(spec) == 3):
        raise SpecError("range must be [start, stop, step]")
    start, stop, step = (float(x) for x in spec)
    if step <= 0 or stop < start:
        raise SpecError("range needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    digits = max(0, -int(math.floor(math.log10(step))) + 1)
    return [round(start + k * step, digits) for k in range(n)]


@dataclass(frozen=True)
class ExperimentRecord:
    scheme: str
    g_load: float
    rate: float
    esn0_db: float
    degree: int
    packets: int
    losses: int
    plr: float
    plr_ci_lo: float
    plr_ci_hi: float
    throughput: float
    spectral_eff: float
    seed_set: str
    wall_time_s: float

    @classmethod
    def from_result(cls, cfg: SimConfig, res: CellResult, seeds: Iterable[int], wall: float) -> "ExperimentRecord":
        return cls(cfg.scheme.value, cfg.g_load, cfg.rate, cfg.esn0_db, cfg.degree,
                   res.packets_observed, res.packets_lost, res.plr, res.plr_ci95[0], res.plr_ci95[1],
                   res.throughput, res.spectral_eff, ";".join(str(s) for s in seeds), wall)

    def row(self) -> list[str]:
        return [format_value(getattr(self, f)) for f in CSV_FIELDS]


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cell_key(spec: ExperimentSpec, cfg: SimConfig) -> str:
    blob = json.dumps({"cfg": cfg.replace(seed=0).to_dict(), "seeds": list(spec.seeds), "mode": spec.mode},
                      sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise SpecError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _run_seed(cfg: SimConfig) -> tuple[int, int, float]:
    t = time.perf_counter()
    packets, lost = simulate_counts(cfg)
    return packets, lost, time.perf_counter() - t


def check_writable(path: Path) -> None:
    parent = path.resolve().parent
    if not parent.is_dir():
        raise SpecError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise SpecError(f"output {path} is not writable")


class _Journal:
    """Append-only record of completed cells, keyed by config hash."""

    def __init__(self, csv_path: Optional[Path], resume: bool):
        self.path = Path(str(csv_path) + ".cells.jsonl") if csv_path else None
        self.done: dict[str, dict] = {}
        if self.path and self.path.exists():
            if resume:
                for line in self.path.read_text().splitlines():
                    if line.strip():
                        item = json.loads(line)
                        self.done[item["key"]] = item["record"]
            else:
                self.path.unlink()

    def add(self, key: str, record: dict) -> None:
        self.done[key] = record
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(json.dumps({"key": key, "record": record}) + "\n")


def _write_header(path: Path, fields) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(fields)


def _append_row(path: Path, row) -> None:
    with open(path, "a", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(row)


def run_experiment(spec: ExperimentSpec, resume: bool = True, workers: Optional[int] = None) -> list[ExperimentRecord]:
    """Run every cell of ``spec`` and write records incrementally to ``spec.output``."""
    spec.validate()
    out = Path(spec.output) if spec.output else None
    if out:
        check_writable(out)
    if spec.mode == "analyze":
        return _run_analyze(spec, out)
    if spec.mode == "alpha":
        return _run_alpha(spec, out)
    if spec.mode == "capacity":
        return _run_capacity(spec, out)
    return _run_sweep(spec, out, resume, workers)


def _run_sweep(spec, out, resume, workers) -> list[ExperimentRecord]:
    cells = spec.cells()
    journal = _Journal(out, resume)
    records: list[Optional[ExperimentRecord]] = [None] * len(cells)
    pending = []
    for idx, (cfg, per_seed) in enumerate(cells):
        key = cell_key(spec, cfg)
        if key in journal.done:
            records[idx] = ExperimentRecord(**journal.done[key])
        else:
            pending.append((idx, key, cfg, per_seed))
    if out:
        _write_header(out, CSV_FIELDS)
    # rows go out in cell order: a finished prefix is flushed as soon as it is complete
    next_row = 0

    def flush():
        nonlocal next_row
        while next_row < len(records) and records[next_row] is not None:
            if out:
                _append_row(out, records[next_row].row())
            next_row += 1

    flush()
    tasks = [c for (_, _, _, per_seed) in pending for c in per_seed]
    n_workers = workers or thread_count()
    if n_workers > 1 and len(tasks) > 1:
        pool = ProcessPoolExecutor(max_workers=n_workers)
        results = pool.map(_run_seed, tasks)
    else:
        pool = None
        results = map(_run_seed, tasks)
    try:
        for idx, key, cfg, per_seed in pending:
            packets = lost = 0
            wall = 0.0
            for _ in per_seed:
                p, l, t = next(results)
                packets += p
                lost += l
                wall += t
            res = CellResult.from_counts(packets, lost, cfg.g_load, cfg.rate)
            rec = ExperimentRecord.from_result(cfg, res, spec.seeds, wall if spec.wall_time else 0.0)
            journal.add(key, dataclasses.asdict(rec))
            records[idx] = rec
            log.info("%s G=%s R=%s plr=%.3g", cfg.scheme.value, cfg.g_load, cfg.rate, res.plr)
            flush()
    finally:
        if pool:
            pool.shutdown()
    return records


def _run_analyze(spec, out) -> list[ExperimentRecord]:
    snr = linear_snr(spec.esn0_db)
    records = []
    seed_set = ";".join(str(s) for s in spec.seeds)
    for scheme in spec.scheme:
        for rate in spec.rate:
            if scheme == "ECRA_MRC":
                if spec.degree != 2:
                    raise SpecError("the MRC approximation is defined for degree 2 only")
                alpha = analysis.estimate_alpha(rate, snr, np.random.default_rng(spec.seeds[0]), spec.alpha_samples)
                curve = analysis.plr_curve_mrc(spec.g_load, rate, snr, spec.vf_len, alpha)
                degree = 2
            else:
                degree = 1 if scheme == "ALOHA" else spec.degree
                curve = analysis.plr_curve_fec(spec.g_load, rate, snr, spec.vf_len, degree)
            for g, plr in zip(spec.g_load, curve):
                s = (1.0 - plr) * g
                records.append(ExperimentRecord(scheme, float(g), float(rate), float(spec.esn0_db), degree,
                                                0, 0, plr, plr, plr, s, s * rate, seed_set, 0.0))
    if out:
        _write_header(out, CSV_FIELDS)
        for r in records:
            _append_row(out, r.row())
    return records


def _run_alpha(spec, out) -> list[dict]:
    snr = linear_snr(spec.esn0_db)
    rows = []
    for rate in spec.rate:
        alpha = analysis.estimate_alpha(rate, snr, np.random.default_rng(spec.seeds[0]), spec.alpha_samples)
        vp = analysis.vulnerable_params_mrc(rate, snr, alpha, spec.vf_len)
        rows.append({"rate": float(rate), "esn0_db": float(spec.esn0_db), "alpha": alpha,
                     "phi_m": float(vp.phi), "t_v": float(vp.t_v), "n_v": vp.n_v})
    if out:
        _write_header(out, ALPHA_FIELDS)
        for r in rows:
            _append_row(out, [format_value(r[f]) for f in ALPHA_FIELDS])
    return rows


def capacity_path(out: Path) -> Path:
    return out.with_name(out.stem + "_capacity" + out.suffix)


def _run_capacity(spec, out) -> list[ExperimentRecord]:
    base = SimConfig(degree=spec.degree, vf_len=spec.vf_len, window_len=float(spec.window_len),
                     window_shift=float(spec.window_shift), max_sic_iters=spec.max_sic_iters,
                     rate=0.01, esn0_db=spec.pg_over_n_db)
    records = []
    points = []
    for scheme in spec.scheme:
        for g in spec.g_load:
            t = time.perf_counter()
            cp = capacity_sweep(scheme, g, spec.pg_over_n_db, None, spec.max_packets,
                                np.random.default_rng(spec.seeds[0]), base)
            wall = time.perf_counter() - t if spec.wall_time else 0.0
            degree = 1 if scheme == "ALOHA" else spec.degree
            plr = 1.0 - cp.xi_star / (g * cp.best_rate)
            esn0 = 10.0 * math.log10(cp.p_t_over_n)
            records.append(ExperimentRecord(scheme, float(g), cp.best_rate, esn0, degree, 0, 0, plr, plr, plr,
                                            cp.xi_star / cp.best_rate, cp.xi_star,
                                            ";".join(str(s) for s in spec.seeds), wall))
            points.append((scheme, cp))
    if out:
        _write_header(out, CSV_FIELDS)
        for r in records:
            _append_row(out, r.row())
        cap = capacity_path(out)
        _write_header(cap, CAPACITY_FIELDS)
        for scheme, cp in points:
            _append_row(cap, [format_value(v) for v in (scheme, cp.g_load, spec.pg_over_n_db, cp.p_t_over_n,
                                                           cp.best_rate, cp.xi_star, cp.c_g, cp.eta)])
    return records


def records_to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()
