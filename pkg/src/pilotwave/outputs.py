"""Atomic file output and CSV plot-data emitters."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

TRAJECTORY_HEADER = ("t", "q", "node_flag")
HISTOGRAM_HEADER = ("bin_left", "bin_right", "count", "density")
NORMALITY_HEADER = ("k", "block", "freq", "expected", "flagged")


def atomic_write_text(path, text: str) -> Path:
    """Write via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trajectory_rows(trajectories):
    for traj in trajectories:
        for t, q, e in traj.rows():
            yield repr(t), repr(q), e


def histogram(samples, bins) -> dict:
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins)
    widths = np.diff(edges)
    dens = counts / (counts.sum() * widths) if counts.sum() else np.zeros_like(widths)
    return {"edges": edges, "counts": counts, "density": dens}


def histogram_rows(hist: dict):
    e = hist["edges"]
    for i, c in enumerate(hist["counts"]):
        yield repr(float(e[i])), repr(float(e[i + 1])), int(c), repr(float(hist["density"][i]))


def normality_rows(results):
    for r in results:
        for block, count in r.counts.items():
            yield r.k, block, repr(count / r.n_blocks), repr(r.expected), int(block in r.flagged)


def emit_plot_data(result, kind: str, path) -> Path:
    """Write ``result`` as CSV with the fixed header for ``kind``.

    ``trajectories``: iterable of Trajectory; ``histogram``: dict from
    :func:`histogram`; ``normality``: list of NormalityResult.
    """
    if kind == "trajectories":
        text = _csv(TRAJECTORY_HEADER, trajectory_rows(result))
    elif kind == "histogram":
        text = _csv(HISTOGRAM_HEADER, histogram_rows(result))
    elif kind == "normality":
        text = _csv(NORMALITY_HEADER, normality_rows(result))
    else:
        raise ValueError(f"unknown plot-data kind {kind!r}")
    return atomic_write_text(path, text)
