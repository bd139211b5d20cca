"""The five visual encodings of a cursor trajectory.

Trajectory family interpolation rules (the documented contract the tests
pin down):

* Segment i carries the time fraction f_i = (t_i - t_0) / (t_last - t_0)
  of its starting coordinate, from recorded wall-clock timestamps.  A
  trajectory whose timestamps are all equal uses f_i = 0 throughout.
* Color variants: segment color = green (0,255,0) at f=0 linearly to red
  (255,0,0) at f=1, each channel rounded half up.
* Thickness variants: segment width = 8 - 7*f px, rounded half up
  (8 px at the start of the interaction down to 1 px at the end).
* Fixed variants use black strokes of width 3 px.
* Every trajectory style draws a green start disc and a red end disc of
  radius 6 px on top of the strokes (end drawn last).

The ad placeholder, when requested, is blended into the canvas before any
strokes so the cursor marks stay visible.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidValueError, MissingAdBoxError
from ..sessions import AdBox, LabeledSession
from .canvas import (
    BLACK,
    GREEN,
    HEIGHT,
    RED,
    WIDTH,
    ImageBuffer,
    blend_rect_gray,
    clamp_y,
    draw_disc,
    draw_segment,
    outline_rect,
    project_x,
    round_half_up,
)
from .heatmap import colorize_onto, render_heatmap

HEATMAP = "heatmap"
TRAJ = "traj"
TRAJ_COLOR = "traj-color"
TRAJ_THICK = "traj-thick"
TRAJ_COLOR_THICK = "traj-color-thick"

STYLE_KINDS = (HEATMAP, TRAJ, TRAJ_COLOR, TRAJ_THICK, TRAJ_COLOR_THICK)

MARKER_RADIUS = 6.0
BASE_WIDTH = 3.0
THICK_START = 8.0
THICK_END = 1.0


@dataclass(frozen=True, slots=True)
class RenderStyle:
    kind: str
    with_ad_placeholder: bool = False

    def __post_init__(self) -> None:
        if self.kind not in STYLE_KINDS:
            raise InvalidValueError(f"unknown style {self.kind!r}; expected one of {STYLE_KINDS}")

    @property
    def token(self) -> str:
        return self.kind + ("-ad" if self.with_ad_placeholder else "")


def all_styles() -> list[RenderStyle]:
    return [RenderStyle(kind, ad) for kind in STYLE_KINDS for ad in (False, True)]


def project_to_canvas(labeled: LabeledSession) -> list[tuple[int, int]]:
    """Scale trajectory coordinates to canvas space, preserving order.

    x is scaled by canvas_width / viewport_w and rounded half up; y is
    clamped to the canvas (below-the-fold coordinates pin to the bottom row).
    """
    vw = labeled.session.viewport_w
    return [(project_x(x, vw), clamp_y(y)) for x, y in labeled.session.mouse_coords()]


def time_fractions(t_ms: list[int]) -> list[float]:
    """Cumulative wall-clock fraction of each coordinate, in [0, 1]."""
    if not t_ms:
        return []
    total = t_ms[-1] - t_ms[0]
    if total <= 0:
        return [0.0] * len(t_ms)
    return [(t - t_ms[0]) / total for t in t_ms]


def _segment_color(f: float, colored: bool) -> tuple[int, int, int]:
    if not colored:
        return BLACK
    return (round_half_up(255 * f), round_half_up(255 * (1.0 - f)), 0)


def _segment_width(f: float, thick: bool) -> float:
    if not thick:
        return BASE_WIDTH
    return float(round_half_up(THICK_START + f * (THICK_END - THICK_START)))


def render_trajectory(
    points: list[tuple[int, int]],
    style: RenderStyle,
    t_ms: list[int] | None = None,
    buf: ImageBuffer | None = None,
) -> ImageBuffer:
    """Draw a polyline trajectory onto a canvas per the style rules."""
    if not points:
        raise InvalidValueError("cannot render an empty trajectory")
    if style.kind == HEATMAP:
        raise InvalidValueError("render_trajectory does not handle the heatmap style")
    if buf is None:
        buf = ImageBuffer()
    colored = style.kind in (TRAJ_COLOR, TRAJ_COLOR_THICK)
    thick = style.kind in (TRAJ_THICK, TRAJ_COLOR_THICK)
    if t_ms is None:
        t_ms = list(range(len(points)))
    fractions = time_fractions(t_ms)
    for i in range(len(points) - 1):
        f = fractions[i]
        draw_segment(buf, points[i], points[i + 1], _segment_width(f, thick), _segment_color(f, colored))
    draw_disc(buf, *points[0], MARKER_RADIUS, GREEN)
    draw_disc(buf, *points[-1], MARKER_RADIUS, RED)
    return buf.finalize()


def overlay_ad_placeholder(buf: ImageBuffer, ad_box: AdBox | None, viewport_w: int) -> ImageBuffer:
    """Blend the projected ad rectangle (gray fill, 2 px black border)."""
    if ad_box is None:
        raise MissingAdBoxError("style requests an ad placeholder but the session has no ad_box")
    x0 = min(max(round_half_up(ad_box.x * WIDTH / viewport_w), 0), WIDTH - 1)
    x1 = min(max(round_half_up((ad_box.x + ad_box.w) * WIDTH / viewport_w), x0), WIDTH)
    y0 = min(max(ad_box.y, 0), HEIGHT - 1)
    y1 = min(max(ad_box.y + ad_box.h, y0), HEIGHT)
    blend_rect_gray(buf, x0, y0, x1, y1)
    outline_rect(buf, x0, y0, x1, y1, 2, BLACK)
    return buf


def render_session(labeled: LabeledSession, style: RenderStyle) -> ImageBuffer:
    """Render one session into a finalized canvas for the given style."""
    buf = ImageBuffer()
    if style.with_ad_placeholder:
        overlay_ad_placeholder(buf, labeled.session.ad_box, labeled.session.viewport_w)
    points = project_to_canvas(labeled)
    if style.kind == HEATMAP:
        colorize_onto(buf, render_heatmap(points))
        return buf.finalize()
    t_ms = [e.t_ms for e in labeled.session.mouse_events()]
    return render_trajectory(points, style, t_ms=t_ms, buf=buf)


def render_filename(session_id: str, style: RenderStyle) -> str:
    return f"{session_id}-{style.token}.png"
