"""PNG renderings of fields, divergence images and boundary strengths."""

from __future__ import annotations

import numpy as np
from matplotlib import colormaps
from matplotlib.colors import hsv_to_rgb
from PIL import Image, ImageDraw

from .grids import BoundaryImage, VectorField


def field_rgb(field: VectorField) -> np.ndarray:
    """Colour wheel: hue = direction angle, full saturation and value."""
    hue = (np.arctan2(field.vy, field.vx) / (2.0 * np.pi)) % 1.0
    hsv = np.stack([hue, np.ones_like(hue), np.ones_like(hue)], axis=-1)
    return (hsv_to_rgb(hsv) * 255.0 + 0.5).astype(np.uint8)


def draw_quiver(rgb: np.ndarray, field: VectorField, stride: int = 8, length: float | None = None) -> np.ndarray:
    """Overlay black arrows every ``stride`` pixels."""
    im = Image.fromarray(rgb)
    draw = ImageDraw.Draw(im)
    L = 0.8 * stride if length is None else length
    h, w = field.shape
    for y in range(stride // 2, h, stride):
        for x in range(stride // 2, w, stride):
            dx, dy = field.vx[y, x] * L, field.vy[y, x] * L
            tip = (x + dx, y + dy)
            draw.line([(x, y), tip], fill=(0, 0, 0), width=1)
            # short barbs at +-150 degrees from the shaft
            for s in (-1, 1):
                c, sn = np.cos(s * 2.618), np.sin(s * 2.618)
                bx = 0.3 * (c * dx - sn * dy)
                by = 0.3 * (sn * dx + c * dy)
                draw.line([tip, (tip[0] + bx, tip[1] + by)], fill=(0, 0, 0), width=1)
    return np.asarray(im)


def divergence_rgb(div: np.ndarray, limit: float = 2.0, cmap: str = "RdBu_r") -> np.ndarray:
    """Diverging colormap centred at zero, clipped to ``[-limit, limit]``."""
    z = (np.clip(np.asarray(div, dtype=np.float64), -limit, limit) + limit) / (2.0 * limit)
    return (colormaps[cmap](z)[..., :3] * 255.0 + 0.5).astype(np.uint8)


def boundary_gray(b) -> np.ndarray:
    s = b.strength if isinstance(b, BoundaryImage) else np.asarray(b, dtype=np.float64)
    top = float(s.max()) if s.size else 0.0
    scaled = s / top if top > 0 else s
    return (np.clip(scaled, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(path, img: np.ndarray) -> None:
    Image.fromarray(np.asarray(img)).save(path)


def visualize(obj, path, *, quiver_stride: int = 0, limit: float = 2.0) -> np.ndarray:
    """Render a field, divergence image (2-D float array) or boundary to ``path``."""
    if isinstance(obj, VectorField):
        img = field_rgb(obj)
        if quiver_stride > 0:
            img = draw_quiver(img, obj, quiver_stride)
    elif isinstance(obj, BoundaryImage) or np.asarray(obj).dtype == bool:
        img = boundary_gray(np.asarray(obj, dtype=np.float64) if not isinstance(obj, BoundaryImage) else obj)
    else:
        img = divergence_rgb(obj, limit)
    save_png(path, img)
    return img
