"""Fixed-length multivariate time-series encoding of cursor trajectories.

Each cleaned session becomes a 50x2 matrix of (x, y) coordinates in
temporal order: x divided by the user's viewport width, y divided by the
design canvas height for numerical conditioning.  Shorter trajectories are
zero-padded after the sequence; longer ones keep their first 50 steps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidValueError
from .sessions import LabeledSession

SEQ_LEN = 50

#: Constant vertical scale (design canvas height in px).
Y_SCALE = 900.0


@dataclass(frozen=True, slots=True)
class TimeSeriesSample:
    matrix: np.ndarray  # (SEQ_LEN, 2) float64, rows >= valid_len are zero
    valid_len: int
    label: int


def encode_timeseries(labeled: LabeledSession) -> TimeSeriesSample:
    """Encode a cleaned session as a padded/truncated coordinate series."""
    session = labeled.session
    if session.viewport_w <= 0:
        raise InvalidValueError(f"viewport_w must be positive, got {session.viewport_w}")
    coords = session.mouse_coords()
    n = min(len(coords), SEQ_LEN)
    matrix = np.zeros((SEQ_LEN, 2), dtype=np.float64)
    for i in range(n):
        x, y = coords[i]
        matrix[i, 0] = x / session.viewport_w
        matrix[i, 1] = y / Y_SCALE
    return TimeSeriesSample(matrix=matrix, valid_len=n, label=labeled.label)


def encode_dataset(labeled: Iterable[LabeledSession]) -> tuple[np.ndarray, np.ndarray]:
    """Stack encoded sessions into (N, 50, 2) inputs and (N,) labels."""
    samples = [encode_timeseries(ls) for ls in labeled]
    if not samples:
        return np.zeros((0, SEQ_LEN, 2)), np.zeros((0,))
    x = np.stack([s.matrix for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    return x, y


def dump_csv(samples: Sequence[TimeSeriesSample], path: Path | str) -> None:
    """Write samples as CSV rows x1,y1,...,x50,y50,label for external tools."""
    header = [f"{axis}{i + 1}" for i in range(SEQ_LEN) for axis in ("x", "y")] + ["label"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in samples:
            writer.writerow([repr(float(v)) for v in s.matrix.reshape(-1)] + [s.label])
