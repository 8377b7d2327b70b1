"""Distribution reports: binned CSV histograms plus rendered figures.

This is the only module that touches matplotlib; everything upstream stays
plotting-free. Figures are rendered headlessly with pinned size, dpi, and
metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "conflictkit"}  # pins the PNG text chunk

#: (metrics.csv column, output stem, axis label, bin lo, bin hi, bin width)
_HISTOGRAMS = (
    ("pet_s", "pet_hist", "PET [s]", 0.0, 5.0, 0.25),
    ("mrct_s", "mrct_hist", "MRCT [s]", 0.0, 30.0, 1.0),
    ("psd_min", "psd_hist", "minimum PSD [-]", 0.0, 10.0, 0.5),
    ("flow_vps", "flow_hist", "conflict-point flow [veh/s]", 0.0, 1.0, 0.05),
)


class ReportError(ValueError):
    """Missing or malformed pipeline artifact."""


def bin_values(values, lo: float, hi: float, width: float):
    """Histogram rows (bin_lo, bin_hi, count); values outside [lo, hi) clip
    into the end bins so no observation silently disappears."""
    edges = np.arange(lo, hi + 0.5 * width, width)
    if len(edges) < 2:
        raise ValueError("histogram needs at least one bin")
    v = np.asarray(values, dtype=float)
    counts = np.zeros(len(edges) - 1, dtype=int)
    if len(v):
        idx = np.clip(((v - lo) / width).astype(int), 0, len(counts) - 1)
        np.add.at(counts, idx, 1)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(len(counts))]


def _read_column(path: Path, column: str) -> list[float]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ReportError(f"{path.name}: missing column {column!r}")
        return [float(row[column]) for row in reader if row[column] != ""]


def _write_hist_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in rows:
            writer.writerow([f"{lo:.4f}", f"{hi:.4f}", str(count)])


def _hist_figure(path: Path, rows, xlabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.6), dpi=100)
    lefts = [r[0] for r in rows]
    widths = [r[1] - r[0] for r in rows]
    counts = [r[2] for r in rows]
    ax.bar(lefts, counts, width=widths, align="edge",
           color="#4878a8", edgecolor="white", linewidth=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cases")
    ax.margins(x=0)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def _regime_figure(path: Path, labels, counts) -> None:
    fig, ax = plt.subplots(figsize=(7.5, 3.6), dpi=100)
    ax.bar(range(len(labels)), counts, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("cases")
    ax.set_xlabel("conflict regime")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def write_report(out_dir: str | Path, make_figures: bool = True) -> list[Path]:
    """Derive histogram CSVs (and figures) from a pipeline output directory.

    Expects metrics.csv (and, for the regime figure, regimes.csv) in
    ``out_dir``; writes the binned CSVs and PNGs alongside them.
    """
    out = Path(out_dir)
    metrics_path = out / "metrics.csv"
    if not metrics_path.is_file():
        raise ReportError(f"{metrics_path} not found; run the metrics stage first")

    written: list[Path] = []
    for column, stem, xlabel, lo, hi, width in _HISTOGRAMS:
        rows = bin_values(_read_column(metrics_path, column), lo, hi, width)
        csv_path = out / f"{stem}.csv"
        _write_hist_csv(csv_path, rows)
        written.append(csv_path)
        if make_figures:
            png_path = out / f"{stem}.png"
            _hist_figure(png_path, rows, xlabel)
            written.append(png_path)

    regimes_path = out / "regimes.csv"
    if make_figures and regimes_path.is_file():
        with open(regimes_path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            labels, counts = [], []
            for row in reader:
                labels.append(row["regime"])
                counts.append(int(row["count"]))
        png_path = out / "regimes.png"
        _regime_figure(png_path, labels, counts)
        written.append(png_path)
    return written
