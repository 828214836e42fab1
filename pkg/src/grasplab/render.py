"""Synthetic top-down camera.

Pixel ``(row, col)`` covers the continuous square ``[col, col+1) x [row, row+1)``;
its centre sits at ``col + 0.5, row + 0.5``. World ``x`` grows with columns and
world ``y`` with rows, so angles mean the same thing in both frames.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeMismatch
from .scene import Scene, Workspace

IMG_MAGIC = b"IMG1"
BACKGROUND = 1.0


@dataclass(frozen=True)
class CameraModel:
    scale: float  # px per mm
    x0: float  # world coordinate imaged at column 0 (left edge)
    y0: float
    width: int
    height: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("camera scale must be > 0")
        if self.width < 1 or self.height < 1:
            raise ConfigError("image must be at least 1x1")

    def covers(self, ws: Workspace, eps=1e-9):
        c0, r0 = world_to_pixel(self, (ws.x0, ws.y0))
        c1, r1 = world_to_pixel(self, (ws.x1, ws.y1))
        return c0 >= -eps and r0 >= -eps and c1 <= self.width + eps and r1 <= self.height + eps

    def to_dict(self):
        return {"scale": self.scale, "x0": self.x0, "y0": self.y0, "width": self.width, "height": self.height}


def camera_for(ws: Workspace, scale: float) -> CameraModel:
    """Camera whose image exactly spans ``ws`` at ``scale`` px/mm."""
    return CameraModel(scale, ws.x0, ws.y0, int(math.ceil(ws.width * scale - 1e-9)),
                       int(math.ceil(ws.height * scale - 1e-9)))


def world_to_pixel(cam: CameraModel, p):
    """Continuous ``(col, row)`` image coordinate of world point ``p`` (mm)."""
    return (p[0] - cam.x0) * cam.scale, (p[1] - cam.y0) * cam.scale


def pixel_to_world(cam: CameraModel, q):
    return q[0] / cam.scale + cam.x0, q[1] / cam.scale + cam.y0


def render(scene: Scene, cam: CameraModel, noise_sigma=0.0, seed=0) -> np.ndarray:
    """Render ``scene`` to an ``H x W x 3`` float32 image on a white background."""
    img = np.full((cam.height, cam.width, 3), BACKGROUND, dtype=np.float32)
    for placed, fp in zip(scene.objects, scene.footprints):
        x0, y0, x1, y1 = fp.bbox()
        c0 = max(int(math.floor((x0 - cam.x0) * cam.scale - 0.5)), 0)
        c1 = min(int(math.ceil((x1 - cam.x0) * cam.scale + 0.5)), cam.width)
        r0 = max(int(math.floor((y0 - cam.y0) * cam.scale - 0.5)), 0)
        r1 = min(int(math.ceil((y1 - cam.y0) * cam.scale + 0.5)), cam.height)
        if c1 <= c0 or r1 <= r0:
            continue
        xs = (np.arange(c0, c1) + 0.5) / cam.scale + cam.x0
        ys = (np.arange(r0, r1) + 0.5) / cam.scale + cam.y0
        gx, gy = np.meshgrid(xs, ys)
        inside = fp.contains(gx.ravel(), gy.ravel()).reshape(gx.shape)
        img[r0:r1, c0:c1][inside] = np.asarray(placed.obj.color, dtype=np.float32)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        img = np.clip(img + rng.normal(0.0, noise_sigma, img.shape).astype(np.float32), 0.0, 1.0)
    return img


def foreground_mask(img, threshold=0.98):
    return (img < threshold).any(axis=2)


def crop_patch(img, center_px, crop: int) -> np.ndarray:
    """``crop x crop`` window spanning ``[c - crop/2, c + crop/2)`` on both axes, white-padded.

    ``center_px`` is an integer ``(col, row)``.
    """
    if crop < 2 or crop % 2:
        raise ConfigError("crop must be even and >= 2")
    cx, cy = int(center_px[0]), int(center_px[1])
    h, w = img.shape[:2]
    out = np.full((crop, crop) + img.shape[2:], BACKGROUND, dtype=img.dtype)
    a0, b0 = cy - crop // 2, cx - crop // 2
    ra, rb = max(a0, 0), min(a0 + crop, h)
    ca, cb = max(b0, 0), min(b0 + crop, w)
    if ra < rb and ca < cb:
        out[ra - a0 : rb - a0, ca - b0 : cb - b0] = img[ra:rb, ca:cb]
    return out


def _lerp2(img, rows, cols, pad):
    """Bilinear samples at index positions ``rows x cols``.

    ``pad=None`` clamps to the edge; otherwise out-of-range neighbours read ``pad``.
    The ``a + w * (b - a)`` form keeps constant regions bit-exact.
    """
    h, w = img.shape[:2]
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    wr = (rows - r0).astype(img.dtype)[:, None, None]
    wc = (cols - c0).astype(img.dtype)[None, :, None]
    if pad is None:
        src = img
        ri = np.clip(np.stack([r0, r0 + 1]), 0, h - 1)
        ci = np.clip(np.stack([c0, c0 + 1]), 0, w - 1)
    else:
        lo_r = min(int(r0.min()), 0)
        lo_c = min(int(c0.min()), 0)
        hi_r = max(int(r0.max()) + 2 - h, 0)
        hi_c = max(int(c0.max()) + 2 - w, 0)
        src = img
        if lo_r or lo_c or hi_r or hi_c:
            src = np.pad(img, ((-lo_r, hi_r), (-lo_c, hi_c), (0, 0)), constant_values=pad)
        ri = np.stack([r0, r0 + 1]) - lo_r
        ci = np.stack([c0, c0 + 1]) - lo_c
    top = src[ri[0]][:, ci[0]]
    top_r = src[ri[0]][:, ci[1]]
    bot = src[ri[1]][:, ci[0]]
    bot_r = src[ri[1]][:, ci[1]]
    t = top + wc * (top_r - top)
    b = bot + wc * (bot_r - bot)
    return np.clip(t + wr * (b - t), 0.0, 1.0)


def resize(img, out_size) -> np.ndarray:
    """Bilinear resize with half-pixel centres and edge clamping."""
    if isinstance(out_size, int):
        out_size = (out_size, out_size)
    oh, ow = out_size
    if oh < 1 or ow < 1:
        raise ConfigError("output size must be >= 1")
    h, w = img.shape[:2]
    rows = (np.arange(oh) + 0.5) * (h / oh) - 0.5
    cols = (np.arange(ow) + 0.5) * (w / ow) - 0.5
    return _lerp2(img, rows, cols, None).astype(img.dtype, copy=False)


def _positions(start: int, n: int, crop: int, out: int):
    """Source index positions for ``n`` outputs sampling ``crop`` inputs onto ``out`` pixels.

    Position = integer base + entry of a periodic fractional table, so windows
    starting at different integer offsets reuse bit-identical weights.
    """
    g = math.gcd(crop, out)
    a, b = out // g, crop // g
    table = (np.arange(a) + 0.5) * (crop / out) - 0.5
    idx = np.arange(n)
    return start + b * (idx // a) + table[idx % a]


def extract_patch(img, center_px, crop: int, out: int) -> np.ndarray:
    """Crop ``crop`` px around integer ``center_px`` and resample to ``out x out``.

    Equivalent to :func:`crop_patch` then a half-pixel bilinear resize, except that
    the bilinear footprint may read the (white-padded) pixels just outside the crop.
    """
    if crop < 2 or crop % 2:
        raise ConfigError("crop must be even and >= 2")
    cx, cy = int(center_px[0]), int(center_px[1])
    if crop == out:
        return crop_patch(img, (cx, cy), crop)
    rows = _positions(cy - crop // 2, out, crop, out)
    cols = _positions(cx - crop // 2, out, crop, out)
    return _lerp2(img, rows, cols, BACKGROUND).astype(img.dtype, copy=False)


def rescale_for_net(img, crop: int, out: int) -> np.ndarray:
    """Whole image resampled by ``out / crop``; dense cells then match :func:`extract_patch`."""
    if crop == out:
        return img
    h, w = img.shape[:2]
    oh, ow = (h * out) // crop, (w * out) // crop
    rows = _positions(0, oh, crop, out)
    cols = _positions(0, ow, crop, out)
    return _lerp2(img, rows, cols, BACKGROUND).astype(img.dtype, copy=False)


def patch_center(cam: CameraModel, x, y):
    """Integer pixel at which a grasp centred at world ``(x, y)`` is cropped."""
    c, r = world_to_pixel(cam, (x, y))
    return int(math.floor(c + 0.5)), int(math.floor(r + 0.5))


# --- persistence -------------------------------------------------------------


def image_to_bytes(img) -> bytes:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeMismatch(f"expected H x W x 3, got {img.shape}")
    h, w = img.shape[:2]
    if h > 0xFFFF or w > 0xFFFF:
        raise ShapeMismatch("image too large for IMG1 header")
    return IMG_MAGIC + struct.pack("<HH", h, w) + img.astype("<f4").tobytes()


def image_from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < 8 or blob[:4] != IMG_MAGIC:
        raise ShapeMismatch("not an IMG1 image")
    h, w = struct.unpack("<HH", blob[4:8])
    n = h * w * 3 * 4
    if len(blob) - 8 != n:
        raise ShapeMismatch(f"IMG1 payload is {len(blob) - 8} bytes, header implies {n}")
    return np.frombuffer(blob, dtype="<f4", offset=8).reshape(h, w, 3).astype(np.float32)


def save_image(img, path):
    Path(path).write_bytes(image_to_bytes(img))


def load_image(path) -> np.ndarray:
    return image_from_bytes(Path(path).read_bytes())
