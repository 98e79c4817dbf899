"""Omnidirectional (fisheye) camera model and perspective undistortion.

A pixel maps to a viewing ray in three steps: subtract the image center,
undo the affine sensor skew ``[[c, d], [e, 1]]``, and lift the centered
coordinate (u', v') to the ray ``(u', v', f(rho))`` where
``rho = sqrt(u'^2 + v'^2)`` and ``f`` is a polynomial with coefficients
stored low order first.  The polynomial coefficients, the affine
parameters and the center are the camera's intrinsics.

Conventions:

* pixel coordinates are continuous with integer values at pixel centers;
  ``u`` runs along the width axis, ``v`` along the height axis;
* the sign of the constant coefficient picks the visible half-space:
  rays satisfy ``sign(ray_z) == sign(poly[0])``.

A :class:`VirtualPinhole` describes the ideal perspective view used for
undistortion: ``z`` is the focal distance of the virtual image plane in
pixels (the view looks along +z when ``z`` is positive, along -z when
negative) and ``nxc``/``nyc`` shift the virtual principal point.  This
interpretation of the three knobs is this library's own model of the
original calibration workflow, which never documented them; the bundled
defaults should be read with that caveat.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, NoProjection, ParseError, RankDeficient
from .imageio import bilinear_sample
from .mathcore import Vec3

__all__ = [
    "OmniIntrinsics",
    "VirtualPinhole",
    "UndistortionLut",
    "FitResult",
    "eval_poly",
    "cam_to_world",
    "world_to_cam",
    "project_rays",
    "pixel_rays",
    "build_undistortion_lut",
    "remap",
    "fit_poly",
    "load_calibration",
    "save_calibration",
]

_MIN_AFFINE_DET = 1e-12
_RHO_TOL = 1e-10
_BRACKET_STEPS = 96


@dataclass(frozen=True)
class OmniIntrinsics:
    """Calibration of one fisheye camera.

    ``poly`` holds the radial polynomial coefficients a0..aN, low order
    first.  ``c, d, e`` form the affine skew matrix ``[[c, d], [e, 1]]``;
    ``xc, yc`` is the image point of the optical axis in pixels.
    """

    poly: tuple[float, ...]
    c: float
    d: float
    e: float
    xc: float
    yc: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if len(self.poly) == 0:
            raise ValueError("polynomial must have at least one coefficient")
        if abs(self.affine_det) <= _MIN_AFFINE_DET:
            raise ValueError("affine matrix [[c, d], [e, 1]] is singular")
        object.__setattr__(self, "poly", tuple(float(a) for a in self.poly))

    @property
    def affine_det(self) -> float:
        return self.c - self.d * self.e

    def max_rho(self) -> float:
        """Largest centered radius covered by the sensor, with margin."""
        corners_u = np.array([-0.5, self.width - 0.5, -0.5, self.width - 0.5])
        corners_v = np.array([-0.5, -0.5, self.height - 0.5, self.height - 0.5])
        du = corners_u - self.xc
        dv = corners_v - self.yc
        det = self.affine_det
        up = (du - self.d * dv) / det
        vp = (-self.e * du + self.c * dv) / det
        return float(np.max(np.hypot(up, vp))) * 1.02


@dataclass(frozen=True)
class VirtualPinhole:
    """Ideal perspective view parameters for undistortion (see module docs)."""

    nxc: float = 0.0
    nyc: float = 0.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if self.z == 0.0:
            raise ValueError("virtual pinhole focal distance z must be nonzero")


@dataclass(frozen=True)
class UndistortionLut:
    """Per-output-pixel source coordinates; NaN marks out-of-view pixels."""

    out_width: int
    out_height: int
    src_width: int
    src_height: int
    src_x: np.ndarray
    src_y: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.src_x, self.src_y):
            if arr.shape != (self.out_height, self.out_width):
                raise ValueError("LUT array shape does not match output size")
            arr.setflags(write=False)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.src_x) & np.isfinite(self.src_y)


class FitResult(NamedTuple):
    coefficients: tuple[float, ...]
    rms_residual: float


def eval_poly(intr: OmniIntrinsics, rho):
    """Evaluate the radial polynomial at ``rho`` (scalar or array, >= 0)."""
    acc = 0.0
    for a in reversed(intr.poly):
        acc = acc * rho + a
    return acc


def _eval_poly_deriv(poly: Sequence[float], rho):
    acc = 0.0
    n = len(poly) - 1
    for k in range(n, 0, -1):
        acc = acc * rho + k * poly[k]
    return acc


def pixel_rays(intr: OmniIntrinsics, u, v) -> np.ndarray:
    """Unit viewing rays for pixel coordinate arrays; shape (..., 3)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    du = u - intr.xc
    dv = v - intr.yc
    det = intr.affine_det
    up = (du - intr.d * dv) / det
    vp = (-intr.e * du + intr.c * dv) / det
    rho = np.hypot(up, vp)
    z = eval_poly(intr, rho)
    ray = np.stack([up, vp, np.broadcast_to(z, up.shape)], axis=-1)
    norm = np.linalg.norm(ray, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise ValueError("degenerate intrinsics: zero-length ray")
    return ray / norm


def cam_to_world(intr: OmniIntrinsics, pixel: tuple[float, float]) -> Vec3:
    """Unit viewing ray for one pixel."""
    ray = pixel_rays(intr, np.float64(pixel[0]), np.float64(pixel[1]))
    return Vec3.from_array(ray)


def _solve_rho(intr: OmniIntrinsics, r: np.ndarray, z: np.ndarray, rho_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Smallest radius with ``f(rho) * r == z * rho``, per element.

    Brackets the first sign change of ``g(rho) = f(rho) * r - z * rho`` on
    a fixed grid over [0, rho_max], then bisects and polishes with guarded
    Newton steps.  Returns (rho, found); rho is NaN where no root exists.
    """
    grid = np.linspace(0.0, rho_max, _BRACKET_STEPS + 1)
    poly_grid = eval_poly(intr, grid)
    # scan rows incrementally; a (grid x points) array would thrash memory
    found = np.zeros(r.shape, dtype=bool)
    lo = np.zeros_like(r)
    hi = np.zeros_like(r)
    g_lo = poly_grid[0] * r  # g(0) = a0 * r
    prev = g_lo
    for k in range(1, grid.size):
        cur = poly_grid[k] * r - grid[k] * z
        newly = (prev * cur <= 0.0) & ~((prev == 0.0) & (cur == 0.0)) & ~found
        if newly.any():
            lo[newly] = grid[k - 1]
            hi[newly] = grid[k]
            g_lo[newly] = prev[newly]
            found |= newly
        prev = cur
    if not found.any():
        return np.full(r.shape, np.nan), found

    has_root = found
    active = has_root.copy()
    for _ in range(40):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        g_mid = eval_poly(intr, mid) * r - z * mid
        go_left = (g_lo * g_mid <= 0.0) & active
        hi = np.where(go_left, mid, hi)
        lo = np.where(~go_left & active, mid, lo)
        g_lo = np.where(~go_left & active, g_mid, g_lo)
        active &= (hi - lo) > _RHO_TOL
    sol = 0.5 * (lo + hi)
    for _ in range(4):
        g_sol = eval_poly(intr, sol) * r - z * sol
        dg = _eval_poly_deriv(intr.poly, sol) * r - z
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg != 0.0, g_sol / dg, 0.0)
        nxt = sol - step
        ok = has_root & np.isfinite(nxt) & (nxt >= lo) & (nxt <= hi)
        sol = np.where(ok, nxt, sol)
        if np.all(np.abs(np.where(ok, step, 0.0)) <= _RHO_TOL):
            break
    return np.where(has_root, sol, np.nan), has_root


def project_rays(intr: OmniIntrinsics, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project an (N, 3) array of 3D points/rays into the image.

    Returns ``(u, v, valid)``.  A point is invalid when no radius in
    ``[0, max_rho]`` aligns the model ray with it (outside the field of
    view); its u/v entries are NaN.  Projection depends only on ray
    direction, so any positive rescaling of a point gives the same pixel.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    r = np.hypot(x, y)
    n = pts.shape[0]
    if np.any((r == 0.0) & (z == 0.0)):
        raise ValueError("cannot project the zero vector")

    a0 = intr.poly[0]
    rho_max = intr.max_rho()
    rho = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)

    axial = r == 0.0
    axial_ok = axial & (np.sign(z) == np.sign(a0))
    rho[axial_ok] = 0.0
    valid |= axial_ok

    general = np.flatnonzero(~axial)
    # chunked to bound peak memory on LUT-sized batches
    chunk = 1 << 16
    for start in range(0, general.size, chunk):
        idx = general[start : start + chunk]
        rho_c, found = _solve_rho(intr, r[idx], z[idx], rho_max)
        rho[idx] = rho_c
        valid[idx] = found

    u = np.full(n, np.nan)
    v = np.full(n, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0.0, rho / np.where(r > 0.0, r, 1.0), 0.0)
    up = x * scale
    vp = y * scale
    u[valid] = (intr.c * up + intr.d * vp + intr.xc)[valid]
    v[valid] = (intr.e * up + vp + intr.yc)[valid]
    return u, v, valid


def world_to_cam(intr: OmniIntrinsics, point: Vec3) -> tuple[float, float]:
    """Image point of a 3D point; raises :class:`NoProjection` outside the FOV."""
    u, v, valid = project_rays(intr, point.as_array()[None, :])
    if not valid[0]:
        raise NoProjection(f"point {point} is outside the camera's field of view")
    return float(u[0]), float(v[0])


def build_undistortion_lut(
    intr: OmniIntrinsics, pin: VirtualPinhole, out_size: tuple[int, int]
) -> UndistortionLut:
    """Precompute source coordinates for a perspective view of the fisheye.

    For each output pixel the virtual-pinhole ray
    ``(x - cx - nxc, y - cy - nyc, z)`` (x, y at pixel centers, (cx, cy)
    the output center) is projected through the camera model; pixels whose
    ray leaves the source image get NaN.  The construction is pure: equal
    inputs give bit-identical tables.
    """
    out_w, out_h = int(out_size[0]), int(out_size[1])
    if out_w <= 0 or out_h <= 0:
        raise ValueError("output size must be positive")
    cx = out_w / 2.0
    cy = out_h / 2.0
    xs = np.arange(out_w, dtype=np.float64) + 0.5
    ys = np.arange(out_h, dtype=np.float64) + 0.5
    rx = np.broadcast_to(xs[None, :] - cx - pin.nxc, (out_h, out_w))
    ry = np.broadcast_to(ys[:, None] - cy - pin.nyc, (out_h, out_w))
    rz = np.full((out_h, out_w), pin.z)
    rays = np.stack([rx.ravel(), ry.ravel(), rz.ravel()], axis=1)
    u, v, valid = project_rays(intr, rays)
    # a small tolerance keeps true boundary pixels that the root refinement
    # left an ulp below zero; stored entries still lie in [0, width)
    eps = 1e-6
    valid &= (u > -eps) & (u < intr.width) & (v > -eps) & (v < intr.height)
    u = np.clip(u, 0.0, None)
    v = np.clip(v, 0.0, None)
    u[~valid] = np.nan
    v[~valid] = np.nan
    return UndistortionLut(
        out_width=out_w,
        out_height=out_h,
        src_width=intr.width,
        src_height=intr.height,
        src_x=u.reshape(out_h, out_w),
        src_y=v.reshape(out_h, out_w),
    )


def remap(image: np.ndarray, lut: UndistortionLut) -> np.ndarray:
    """Resample an image through a LUT; out-of-view pixels become opaque black."""
    img = np.asarray(image)
    if img.shape[:2] != (lut.src_height, lut.src_width):
        raise DimensionMismatch(
            f"image is {img.shape[1]}x{img.shape[0]}, "
            f"LUT expects {lut.src_width}x{lut.src_height}"
        )
    valid = lut.valid
    if valid.all():
        samples = bilinear_sample(img, lut.src_x, lut.src_y)
        return np.clip(np.round(samples), 0, 255).astype(np.uint8)
    out = np.zeros((lut.out_height, lut.out_width, img.shape[2]), dtype=np.uint8)
    out[:, :, 3:] = 255
    if valid.any():
        sx = lut.src_x[valid]
        sy = lut.src_y[valid]
        samples = bilinear_sample(img, sx, sy)
        out[valid] = np.clip(np.round(samples), 0, 255).astype(np.uint8)
    return out


def fit_poly(
    correspondences: Sequence[tuple[Vec3, tuple[float, float]]],
    center: tuple[float, float],
    degree: int = 4,
) -> FitResult:
    """Least-squares fit of the radial polynomial from ray/pixel pairs.

    Assumes identity affine skew.  Each pair contributes the residual
    ``f(rho_i) * r_i - z_i * rho_i`` with ``rho_i`` the pixel radius about
    ``center`` and ``(r_i, z_i)`` the transverse/axial components of the
    unit ray.  Raises :class:`RankDeficient` when the system cannot
    determine all ``degree + 1`` coefficients.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if len(correspondences) < degree + 1:
        raise RankDeficient(
            f"need at least {degree + 1} correspondences for degree {degree}, "
            f"got {len(correspondences)}"
        )
    rays = np.array([[r.x, r.y, r.z] for r, _ in correspondences], dtype=np.float64)
    pix = np.array([[p[0], p[1]] for _, p in correspondences], dtype=np.float64)
    norms = np.linalg.norm(rays, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("correspondence rays must be nonzero")
    rays = rays / norms
    r = np.hypot(rays[:, 0], rays[:, 1])
    z = rays[:, 2]
    rho = np.hypot(pix[:, 0] - center[0], pix[:, 1] - center[1])
    design = np.vander(rho, degree + 1, increasing=True) * r[:, None]
    target = z * rho
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < degree + 1:
        raise RankDeficient(
            f"design matrix rank {rank} < {degree + 1}; geometry does not "
            "constrain all coefficients"
        )
    residual = design @ coeffs - target
    rms = float(np.sqrt(np.mean(residual**2)))
    return FitResult(tuple(float(a) for a in coeffs), rms)


def save_calibration(path, intr: OmniIntrinsics) -> None:
    """Write a calibration file (one value per line, '#' comments)."""
    lines = [
        "# fisheye camera calibration",
        "# polynomial degree",
        str(len(intr.poly) - 1),
        "# polynomial coefficients, low order first",
    ]
    lines += [repr(a) for a in intr.poly]
    lines += [
        "# affine skew c, d, e",
        repr(intr.c),
        repr(intr.d),
        repr(intr.e),
        "# image center xc, yc (pixels)",
        repr(intr.xc),
        repr(intr.yc),
        "# image width, height (pixels)",
        str(intr.width),
        str(intr.height),
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def load_calibration(path) -> OmniIntrinsics:
    """Parse a calibration file written by :func:`save_calibration`."""
    p = Path(path)
    values: list[tuple[float, int]] = []
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            values.append((float(text), lineno))
        except ValueError:
            raise ParseError(f"expected a number, got {text!r}", path=str(p), line=lineno)
    if not values:
        raise ParseError("empty calibration file", path=str(p))
    degree = int(values[0][0])
    if degree < 0 or values[0][0] != degree:
        raise ParseError("degree must be a non-negative integer", path=str(p), line=values[0][1])
    expected = 1 + (degree + 1) + 3 + 2 + 2
    if len(values) != expected:
        raise ParseError(
            f"expected {expected} values for degree {degree}, got {len(values)}",
            path=str(p),
        )
    nums = [v for v, _ in values[1:]]
    poly = tuple(nums[: degree + 1])
    c, d, e, xc, yc, width, height = nums[degree + 1 :]
    return OmniIntrinsics(
        poly=poly, c=c, d=d, e=e, xc=xc, yc=yc, width=int(width), height=int(height)
    )
