"""Dataset files, synthetic blobs, and run artifacts (CSV tables, reports,
SVG charts)."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .consensus import external_metrics
from .graph import Partition
from .kernel import ConfigurationError

MAGIC = b"SCMX"
_HEADER = struct.Struct("<4sQQ")


class DatasetError(ValueError):
    """Raised for unreadable or malformed dataset files."""


@dataclass(frozen=True)
class DatasetFile:
    path: Path
    format: str = "csv"  # "csv" | "binary"
    has_header: bool | None = None  # None: detect from the first row
    label_column: int | None = None


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_csv(path: Path, has_header: bool | None, label_column: int | None):
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh))
                if row and any(c.strip() for c in row)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    if has_header is None:
        has_header = not all(_is_number(c.strip()) for c in rows[0][1])
    if has_header:
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"{path}: header but no data rows")

    width = len(rows[0][1])
    if label_column is not None and not -width <= label_column < width:
        raise DatasetError(f"{path}: label column {label_column} out of range for {width} columns")
    lab_idx = None if label_column is None else label_column % width

    data, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DatasetError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
        values = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if j == lab_idx:
                labels.append(cell)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric value {cell!r} in column {j}") from None
        data.append(values)
    x = np.array(data, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DatasetError(f"{path}: NaN or infinite values")
    truth = None
    if lab_idx is not None:
        keys = [float(v) if _is_number(v) else v for v in labels]
        if all(isinstance(k, float) for k in keys):
            truth = Partition.from_any(np.array(keys))
        else:
            truth = Partition.from_any(np.array(labels))
    return x, truth


def write_binary(path: Path | str, x: np.ndarray) -> None:
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.ndim != 2:
        raise ConfigurationError("binary datasets hold a 2-D matrix")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, x.shape[0], x.shape[1]))
        fh.write(x.tobytes(order="C"))


def read_binary(path: Path | str) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DatasetError(f"{path}: file too short for header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DatasetError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise DatasetError(f"{path}: expected {expected} bytes, found {len(raw)}")
    if rows == 0 or cols == 0:
        raise DatasetError(f"{path}: empty matrix")
    return np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def load_dataset(file: DatasetFile) -> tuple[np.ndarray, Partition | None]:
    """Read features and optional ground truth; truth never enters clustering."""
    path = Path(file.path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    if file.format == "csv":
        return _read_csv(path, file.has_header, file.label_column)
    if file.format == "binary":
        x = read_binary(path)
        if file.label_column is None:
            return x, None
        col = file.label_column % x.shape[1]
        truth = Partition.from_any(x[:, col])
        return np.delete(x, col, axis=1), truth
    raise DatasetError(f"unknown format {file.format!r}")


def generate_blobs(n: int, k: int, dim: int, separation: float, seed: int,
                   max_tries: int = 10_000) -> tuple[np.ndarray, Partition, np.ndarray]:
    """Isotropic unit-variance Gaussian clusters with well-separated centers.

    Returns ``(x, truth, centers)``. Cluster sizes differ by at most one and
    every pair of centers is at least ``separation`` apart.
    """
    if k < 2 or n < k:
        raise ConfigurationError("need k >= 2 and n >= k")
    if not separation > 0 or dim < 1:
        raise ConfigurationError("separation and dim must be positive")
    rng = np.random.default_rng(seed)
    half_width = separation * max(1.0, k ** (1.0 / dim))
    centers: list[np.ndarray] = []
    tries = 0
    while len(centers) < k:
        tries += 1
        if tries > max_tries:
            raise ConfigurationError(f"could not place {k} centers {separation} apart in {dim}-D")
        c = rng.uniform(-half_width, half_width, size=dim)
        if all(np.linalg.norm(c - o) >= separation for o in centers):
            centers.append(c)
    center_arr = np.array(centers)
    labels = rng.permutation(np.arange(n) % k)
    x = center_arr[labels] + rng.standard_normal((n, dim))
    return x, Partition(labels), center_arr


def write_csv_dataset(path: Path | str, x: np.ndarray, truth: Partition | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"x{j}" for j in range(x.shape[1])] + (["label"] if truth is not None else [])
        w.writerow(header)
        for i, row in enumerate(x):
            cells = [repr(float(v)) for v in row]
            if truth is not None:
                cells.append(str(int(truth.labels[i])))
            w.writerow(cells)


# ----------------------------------------------------------------------------
# run artifacts


def _fmt(v: float) -> str:
    return repr(float(v))


def write_labels(path: Path, labels: Partition) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label"])
        for i, lab in enumerate(labels.labels.tolist()):
            w.writerow([i, lab])


def write_nnc_curve(path: Path, records, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "k", "k_perturbed", "nnc", "seconds"])
        for r in records:
            w.writerow([r.level, r.k, r.k_perturbed, _fmt(r.nnc),
                        f"{r.seconds:.6f}" if timing else ""])


def write_ae_loss(path: Path, trace: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for i, v in enumerate(trace, 1):
            w.writerow([i, _fmt(v)])


def write_cl_loss(path: Path, records, traces: Sequence[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "k", "epoch", "loss"])
        for rec, trace in zip(records, traces):
            for i, v in enumerate(trace, 1):
                w.writerow([rec.level, rec.k, i, _fmt(v)])


def build_report(result, truth: Partition | None, settings: dict, timing: bool = True) -> dict:
    report = {
        "k_star": result.k_star,
        "select_from": result.config.select_from,
        "perturbation": result.config.perturbation.mode,
        "seed": result.config.seed,
        "chosen_level": result.chosen.level if result.chosen else None,
        "chosen_nnc": result.chosen.nnc if result.chosen else None,
        "z_dim": result.z_dim,
        "levels": [
            {"level": r.level, "k": r.k, "k_perturbed": r.k_perturbed, "nnc": r.nnc,
             **({"seconds": round(r.seconds, 6)} if timing else {})}
            for r in result.records
        ],
        "hierarchy_k": [p.k for p in result.hierarchy],
        "config": settings,
        "warnings": list(result.warnings),
    }
    if truth is not None:
        report["metrics"] = external_metrics(result.labels, truth)
    return report


def format_report(report: dict) -> str:
    """Line-oriented ``key=value`` text followed by the per-level table."""
    lines = [
        f"k_star={report['k_star']}",
        f"chosen_level={report['chosen_level']}",
        f"chosen_nnc={report['chosen_nnc']}",
        f"select_from={report['select_from']}",
        f"perturbation={report['perturbation']}",
        f"seed={report['seed']}",
        f"z_dim={report['z_dim']}",
        "hierarchy_k=" + ",".join(str(k) for k in report["hierarchy_k"]),
    ]
    for key, value in sorted(report["config"].items()):
        lines.append(f"config.{key}={value}")
    for key, value in report.get("metrics", {}).items():
        lines.append(f"metric.{key}={value:.6f}")
    for w in report["warnings"]:
        lines.append(f"warning={w}")
    lines.append("")
    lines.append(f"{'level':>5} {'K':>7} {'K_prime':>7} {'NNC':>8} {'seconds':>9}")
    for row in report["levels"]:
        secs = f"{row['seconds']:9.3f}" if "seconds" in row else f"{'-':>9}"
        lines.append(f"{row['level']:>5} {row['k']:>7} {row['k_perturbed']:>7} {row['nnc']:8.4f} {secs}")
    return "\n".join(lines) + "\n"


def write_report(out_dir: Path, report: dict) -> None:
    (out_dir / "report.txt").write_text(format_report(report))
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# SVG


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi):
        out.append(round(v, 12))
        v += step
    return out


def line_chart_svg(xs: Sequence[float], ys: Sequence[float], title: str,
                   x_label: str, y_label: str, x_tick_labels: Sequence[str] | None = None,
                   width: int = 800, height: int = 500) -> str:
    """Minimal single-series line chart. ``x_tick_labels`` switches to one
    evenly spaced categorical tick per point."""
    left, right, top, bottom = 80, 30, 50, 60
    pw, ph = width - left - right, height - top - bottom
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if x_tick_labels is not None:
        xs = list(range(len(ys)))
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="28" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    if x_tick_labels is not None:
        xticks = list(zip(xs, x_tick_labels))
    else:
        xticks = [(t, f"{t:g}") for t in _ticks(x0, x1)]
    for t, lab in xticks:
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 20}" text-anchor="middle">{lab}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + ph / 2})">{y_label}</text>')
    if xs:
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
        if len(xs) <= 60:
            for a, b in zip(xs, ys):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3.5" fill="#1f77b4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
