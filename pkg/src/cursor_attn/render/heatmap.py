"""Gaussian heat accumulation and colormapping.

Each cursor coordinate stamps a 2D Gaussian (sigma = radius/3, hard cutoff
at 25 px, so >99% of the mass is kept) into an accumulation grid.  The grid
is stored in 2^32 fixed point: integer addition is exactly associative, so
the field of a concatenated point list equals the elementwise sum of the
individual fields, bit for bit.
"""

from __future__ import annotations

import numpy as np

from .canvas import HEIGHT, WIDTH, ImageBuffer

KERNEL_RADIUS = 25
SIGMA = KERNEL_RADIUS / 3.0

_SCALE = 2 ** 32


def _build_kernel() -> np.ndarray:
    span = np.arange(-KERNEL_RADIUS, KERNEL_RADIUS + 1, dtype=np.float64)
    d2 = span[:, None] ** 2 + span[None, :] ** 2
    return np.exp(-d2 / (2.0 * SIGMA * SIGMA))


_KERNEL_INT = np.round(_build_kernel() * _SCALE).astype(np.int64)


class HeatField:
    """Non-negative accumulation grid over the canvas, pre-colormap."""

    def __init__(self) -> None:
        self._grid = np.zeros((HEIGHT, WIDTH), dtype=np.int64)

    def add_point(self, x: int, y: int) -> None:
        x0 = max(x - KERNEL_RADIUS, 0)
        x1 = min(x + KERNEL_RADIUS + 1, WIDTH)
        y0 = max(y - KERNEL_RADIUS, 0)
        y1 = min(y + KERNEL_RADIUS + 1, HEIGHT)
        if x0 >= x1 or y0 >= y1:
            return
        kx0 = x0 - (x - KERNEL_RADIUS)
        ky0 = y0 - (y - KERNEL_RADIUS)
        self._grid[y0:y1, x0:x1] += _KERNEL_INT[ky0 : ky0 + (y1 - y0), kx0 : kx0 + (x1 - x0)]

    @property
    def accum(self) -> np.ndarray:
        """Accumulated kernel values as float64 (exact: scale is a power of 2)."""
        return self._grid / _SCALE

    def __add__(self, other: "HeatField") -> "HeatField":
        out = HeatField()
        out._grid = self._grid + other._grid
        return out


def render_heatmap(points: list[tuple[int, int]]) -> HeatField:
    """Accumulate one Gaussian kernel per canvas point; overlaps add."""
    field = HeatField()
    for x, y in points:
        field.add_point(x, y)
    return field


#: Equally spaced gradient stops: white -> blue -> yellow -> red.
GRADIENT_STOPS = (
    (255, 255, 255),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 0),
)


def gradient_color(t: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] through the gradient; bytes rounded half up.

    The segment index and within-segment fraction come from decomposing
    t * 3, so dyadic inputs (0, 0.5, 1) hit exact interpolation points.
    """
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    scaled = t * (len(GRADIENT_STOPS) - 1)
    seg = np.minimum(scaled.astype(np.int64), len(GRADIENT_STOPS) - 2)
    u = scaled - seg
    stops = np.asarray(GRADIENT_STOPS, dtype=np.float64)
    c0 = stops[seg]
    c1 = stops[seg + 1]
    out = c0 + u[..., None] * (c1 - c0)
    return np.floor(out + 0.5).astype(np.uint8)


def colorize_onto(buf: ImageBuffer, field: HeatField) -> ImageBuffer:
    """Paint gradient colors where the field is positive; zero cells keep
    whatever the canvas already shows (background or ad placeholder)."""
    grid = field._grid
    peak = grid.max()
    if peak <= 0:
        return buf
    mask = grid > 0
    t = grid[mask] / peak
    buf.pixels[..., :3][mask] = gradient_color(t)
    return buf


def colorize_heatfield(field: HeatField) -> ImageBuffer:
    """Render a field on a white background, normalized by its maximum."""
    return colorize_onto(ImageBuffer(), field).finalize()
