"""Render experiment CSVs to static vector figures."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGURES = (
    ("throughput", "Throughput S [packets/packet duration]", False),
    ("plr", "Packet loss rate", True),
    ("spectral_eff", "Spectral efficiency [bits/symbol]", False),
)


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _series(rows, ycol):
    groups = defaultdict(list)
    for r in rows:
        groups[(r["scheme"], float(r["rate"]))].append((float(r["g_load"]), float(r[ycol])))
    return {k: sorted(v) for k, v in sorted(groups.items())}


def plot_csv(path, out_dir, fmt: str = "svg") -> list[Path]:
    """Write one figure per metric; returns the written paths."""
    path = Path(path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_rows(path)
    written = []
    if rows and "throughput" in rows[0]:
        for col, label, log in FIGURES:
            fig, ax = plt.subplots(figsize=(6, 4))
            for (scheme, rate), pts in _series(rows, col).items():
                xs = [p[0] for p in pts]
                ys = [p[1] for p in pts]
                if log:
                    keep = [(x, y) for x, y in zip(xs, ys) if y > 0]
                    xs = [k[0] for k in keep]
                    ys = [k[1] for k in keep]
                ax.plot(xs, ys, marker="o", ms=3, label=f"{scheme} R={rate:g}")
            if log:
                ax.set_yscale("log")
            ax.set_xlabel("Channel load G")
            ax.set_ylabel(label)
            ax.grid(True, which="both", alpha=0.3)
            ax.legend(fontsize=8)
            target = out_dir / f"{path.stem}_{col}.{fmt}"
            fig.tight_layout()
            fig.savefig(target)
            plt.close(fig)
            written.append(target)
    cap = path.with_name(path.stem + "_capacity" + path.suffix)
    if cap.exists():
        crow = read_rows(cap)
        groups = defaultdict(list)
        for r in crow:
            groups[r["scheme"]].append((float(r["g_load"]), float(r["eta"])))
        fig, ax = plt.subplots(figsize=(6, 4))
        for scheme, pts in sorted(groups.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=scheme)
        ax.set_xlabel("Channel load G")
        ax.set_ylabel("Normalized capacity")
        ax.set_ylim(0, 1)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        target = out_dir / f"{path.stem}_eta.{fmt}"
        fig.tight_layout()
        fig.savefig(target)
        plt.close(fig)
        written.append(target)
    return written
