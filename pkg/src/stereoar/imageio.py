"""Image I/O and sampling helpers.

Every image in this package is an RGBA uint8 numpy array of shape
``(height, width, 4)``.  PNG files are read and written through Pillow;
binary PPM (P6, RGB, maxval 255) is handled directly.  Continuous pixel
coordinates put integer values at pixel centers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ReadError

__all__ = ["load_image", "save_image", "bilinear_sample", "to_rgba"]


def to_rgba(arr: np.ndarray) -> np.ndarray:
    """Coerce an (h, w), (h, w, 3) or (h, w, 4) uint8 array to RGBA."""
    a = np.asarray(arr, dtype=np.uint8)
    if a.ndim == 2:
        a = np.stack([a, a, a], axis=-1)
    if a.ndim != 3 or a.shape[2] not in (3, 4):
        raise ValueError(f"expected (h, w[, 3|4]) image, got shape {a.shape}")
    if a.shape[2] == 3:
        alpha = np.full(a.shape[:2] + (1,), 255, dtype=np.uint8)
        a = np.concatenate([a, alpha], axis=2)
    return a


def load_image(path) -> np.ndarray:
    """Read a PNG or binary PPM file as an (h, w, 4) uint8 array."""
    p = Path(path)
    if not p.exists():
        raise ReadError(f"no such image: {p}")
    if p.suffix.lower() == ".ppm":
        return _read_ppm(p)
    try:
        with Image.open(p) as im:
            return np.asarray(im.convert("RGBA"), dtype=np.uint8)
    except ReadError:
        raise
    except Exception as exc:
        raise ReadError(f"cannot read image {p}: {exc}") from exc


def save_image(path, rgba: np.ndarray) -> None:
    """Write an RGBA array as PNG, or as binary PPM (alpha dropped)."""
    p = Path(path)
    a = to_rgba(rgba)
    if p.suffix.lower() == ".ppm":
        _write_ppm(p, a)
    else:
        Image.fromarray(a, mode="RGBA").save(p)


def _read_ppm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    fields: list[bytes] = []
    i = 0
    # header: magic, width, height, maxval; '#' comments run to end of line
    while len(fields) < 4 and i < len(data):
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            fields.append(data[i:j])
            i = j
    if len(fields) < 4 or fields[0] != b"P6":
        raise ReadError(f"{path}: not a binary P6 PPM file")
    try:
        width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError as exc:
        raise ReadError(f"{path}: malformed PPM header") from exc
    if maxval != 255:
        raise ReadError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    i += 1  # single whitespace byte after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=i)
    if pixels.size != width * height * 3:
        raise ReadError(f"{path}: truncated PPM pixel data")
    return to_rgba(pixels.reshape(height, width, 3))


def _write_ppm(path: Path, rgba: np.ndarray) -> None:
    h, w = rgba.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    path.write_bytes(header + rgba[:, :, :3].tobytes())


def bilinear_sample(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample an image at subpixel coordinates with bilinear weights.

    ``x``/``y`` are arrays of continuous pixel coordinates (integers hit
    pixel centers).  Neighbors are clamped at the borders (edge extend);
    callers that want a fill value mask coordinates beforehand.  Returns
    float64 samples with a trailing channel axis.
    """
    h, w = image.shape[:2]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    jx = x0.astype(np.int64)
    jy = y0.astype(np.int64)
    ix0 = np.clip(jx, 0, w - 1)
    iy0 = np.clip(jy, 0, h - 1)
    ix1 = np.clip(jx + 1, 0, w - 1)
    iy1 = np.clip(jy + 1, 0, h - 1)
    fx = fx[..., None]
    fy = fy[..., None]
    # gather in the source dtype, blend in float64
    c00 = image[iy0, ix0].astype(np.float64)
    c01 = image[iy0, ix1].astype(np.float64)
    c10 = image[iy1, ix0].astype(np.float64)
    c11 = image[iy1, ix1].astype(np.float64)
    top = c00 * (1.0 - fx) + c01 * fx
    bot = c10 * (1.0 - fx) + c11 * fx
    return top * (1.0 - fy) + bot * fy
