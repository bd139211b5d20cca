from .canvas import HEIGHT, WIDTH, ImageBuffer, downscale_area
from .heatmap import HeatField, colorize_heatfield, gradient_color, render_heatmap
from .png import encode_png
from .styles import (
    HEATMAP,
    STYLE_KINDS,
    TRAJ,
    TRAJ_COLOR,
    TRAJ_COLOR_THICK,
    TRAJ_THICK,
    RenderStyle,
    all_styles,
    overlay_ad_placeholder,
    project_to_canvas,
    render_filename,
    render_session,
    render_trajectory,
)

__all__ = [
    "HEIGHT",
    "WIDTH",
    "ImageBuffer",
    "downscale_area",
    "HeatField",
    "colorize_heatfield",
    "gradient_color",
    "render_heatmap",
    "encode_png",
    "HEATMAP",
    "STYLE_KINDS",
    "TRAJ",
    "TRAJ_COLOR",
    "TRAJ_COLOR_THICK",
    "TRAJ_THICK",
    "RenderStyle",
    "all_styles",
    "overlay_ad_placeholder",
    "project_to_canvas",
    "render_filename",
    "render_session",
    "render_trajectory",
]
