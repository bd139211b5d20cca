"""Fixed-size RGBA canvas and hard-edged drawing primitives.

Everything here is deterministic and anti-aliasing free: a pixel is either
painted or untouched, which keeps rendered output byte-stable across runs
and makes pixel-exact tests possible.
"""

from __future__ import annotations

import numpy as np

WIDTH = 1280
HEIGHT = 900

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)
GREEN = (0, 255, 0)
RED = (255, 0, 0)


def round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


class ImageBuffer:
    """Row-major RGBA canvas, 1280x900, 8 bits per channel."""

    def __init__(self, pixels: np.ndarray | None = None):
        if pixels is None:
            pixels = np.empty((HEIGHT, WIDTH, 4), dtype=np.uint8)
            pixels[..., :3] = 255
            pixels[..., 3] = 255
        if pixels.shape != (HEIGHT, WIDTH, 4) or pixels.dtype != np.uint8:
            raise ValueError(f"canvas must be {HEIGHT}x{WIDTH}x4 uint8, got {pixels.shape} {pixels.dtype}")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return WIDTH

    @property
    def height(self) -> int:
        return HEIGHT

    def finalize(self) -> "ImageBuffer":
        self.pixels[..., 3] = 255
        return self

    def rgb01(self) -> np.ndarray:
        """RGB channels as float64 in [0, 1]."""
        return self.pixels[..., :3].astype(np.float64) / 255.0


def project_x(x_px: float, viewport_w: int) -> int:
    """Scale a page x coordinate to canvas space, rounding half up."""
    return min(max(round_half_up(x_px * WIDTH / viewport_w), 0), WIDTH - 1)

def clamp_y(y_px: float) -> int:
    return min(max(round_half_up(y_px), 0), HEIGHT - 1)


def draw_disc(buf: ImageBuffer, cx: int, cy: int, radius: float, color: tuple[int, int, int]) -> None:
    """Paint a filled circle; pixels at center distance <= radius."""
    r = int(np.ceil(radius))
    x0, x1 = max(cx - r, 0), min(cx + r + 1, WIDTH)
    y0, y1 = max(cy - r, 0), min(cy + r + 1, HEIGHT)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    buf.pixels[y0:y1, x0:x1][mask] = (*color, 255)


def draw_segment(
    buf: ImageBuffer,
    p0: tuple[int, int],
    p1: tuple[int, int],
    width: float,
    color: tuple[int, int, int],
) -> None:
    """Paint a thick segment with round caps (capsule of the given width)."""
    rad = width / 2.0
    r = int(np.ceil(rad))
    x0 = max(min(p0[0], p1[0]) - r, 0)
    x1 = min(max(p0[0], p1[0]) + r + 1, WIDTH)
    y0 = max(min(p0[1], p1[1]) - r, 0)
    y1 = min(max(p0[1], p1[1]) + r + 1, HEIGHT)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        d2 = (xs - p0[0]) ** 2 + (ys - p0[1]) ** 2
    else:
        t = ((xs - p0[0]) * dx + (ys - p0[1]) * dy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        d2 = (xs - (p0[0] + t * dx)) ** 2 + (ys - (p0[1] + t * dy)) ** 2
    mask = d2 <= rad * rad
    buf.pixels[y0:y1, x0:x1][mask] = (*color, 255)


def blend_rect_gray(buf: ImageBuffer, x0: int, y0: int, x1: int, y1: int) -> None:
    """50%-blend gray(128) into the half-open rectangle [x0,x1) x [y0,y1)."""
    x0, x1 = max(x0, 0), min(x1, WIDTH)
    y0, y1 = max(y0, 0), min(y1, HEIGHT)
    if x0 >= x1 or y0 >= y1:
        return
    region = buf.pixels[y0:y1, x0:x1, :3].astype(np.uint16)
    buf.pixels[y0:y1, x0:x1, :3] = ((region + 129) >> 1).astype(np.uint8)


def outline_rect(buf: ImageBuffer, x0: int, y0: int, x1: int, y1: int, thickness: int, color: tuple[int, int, int]) -> None:
    """Draw a border of the given thickness just inside the rectangle."""
    x0, x1 = max(x0, 0), min(x1, WIDTH)
    y0, y1 = max(y0, 0), min(y1, HEIGHT)
    if x0 >= x1 or y0 >= y1:
        return
    t = thickness
    c = (*color, 255)
    buf.pixels[y0 : min(y0 + t, y1), x0:x1] = c
    buf.pixels[max(y1 - t, y0) : y1, x0:x1] = c
    buf.pixels[y0:y1, x0 : min(x0 + t, x1)] = c
    buf.pixels[y0:y1, max(x1 - t, x0) : x1] = c


def downscale_area(buf: ImageBuffer, factor: int = 10) -> np.ndarray:
    """Area-average the RGB canvas by an integer factor, scaled to [0, 1]."""
    if WIDTH % factor or HEIGHT % factor:
        raise ValueError(f"factor {factor} must divide {WIDTH}x{HEIGHT}")
    rgb = buf.pixels[..., :3].astype(np.float64)
    h, w = HEIGHT // factor, WIDTH // factor
    return rgb.reshape(h, factor, w, factor, 3).mean(axis=(1, 3)) / 255.0
