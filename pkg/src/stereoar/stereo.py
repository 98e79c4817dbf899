"""Per-frame stereo orchestration.

One frame renders the scene twice: the head camera is rotated by the pose,
shifted half the interpupillary distance along its local x-axis per eye,
and each eye pass composites its (already undistorted) camera background
behind the lit models under a skewed per-eye projection.  Each eye image
is then barrel distorted (pre-compensating an HMD lens's pincushion) and
the two are concatenated side by side, left half first.

Distortion is applied per eye *before* composition.  The default
coefficients are a plausible DK1-style curve chosen for reproducible
output; they are a configuration default, not a measured property of any
headset, and every knob is overridable per eye.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionMismatch
from .imageio import bilinear_sample
from .mathcore import (
    HeadPose,
    StereoParams,
    perspective_projection,
    stereo_projection,
    view_for_eye,
)
from .raster import Framebuffer, clear, draw_background, rasterize_mesh

if TYPE_CHECKING:
    from .scene import SceneConfig

__all__ = [
    "StereoRigConfig",
    "StereoFrame",
    "DEFAULT_BARREL_K",
    "render_stereo_frame",
    "barrel_distort",
    "compose_side_by_side",
]

DEFAULT_BARREL_K = (1.0, 0.22, 0.24, 0.0)


@dataclass(frozen=True)
class StereoRigConfig:
    """Everything the per-frame stereo pass needs besides scene content."""

    half_ipd: float = 0.032
    separation: float = 0.02
    convergence: float = 2.5
    eye_width: int = 640
    eye_height: int = 800
    barrel_k: tuple[float, float, float, float] = DEFAULT_BARREL_K
    barrel_scale: float = 1.0
    center_left: tuple[float, float] = (0.0, 0.0)   # NDC
    center_right: tuple[float, float] = (0.0, 0.0)  # NDC

    def __post_init__(self) -> None:
        if self.half_ipd < 0:
            raise ValueError("half_ipd must be >= 0")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if self.convergence <= 0:
            raise ValueError("convergence must be > 0")
        if self.eye_width <= 0 or self.eye_height <= 0:
            raise ValueError("eye render target size must be positive")
        if len(self.barrel_k) != 4:
            raise ValueError("barrel_k needs exactly 4 coefficients")
        if self.barrel_k[0] <= 0:
            raise ValueError("barrel_k[0] must be positive")


@dataclass(frozen=True)
class StereoFrame:
    """Output of one stereo render.

    ``left``/``right`` are the post-distortion eye images; ``combined`` is
    their side-by-side concatenation (twice the eye width).  The raw eye
    framebuffers before distortion are kept for debugging dumps.
    """

    left: np.ndarray
    right: np.ndarray
    combined: np.ndarray
    raw_left: Framebuffer
    raw_right: Framebuffer


def barrel_distort(
    image: np.ndarray,
    k: tuple[float, float, float, float],
    center: tuple[float, float] = (0.0, 0.0),
    scale: float = 1.0,
) -> np.ndarray:
    """Radial distortion by inverse mapping.

    An output pixel at normalized radius r (NDC, center given in NDC)
    samples the source at radius ``r * (k0 + k1 r^2 + k2 r^4 + k3 r^6) *
    scale``.  With growing magnification the sampled content is pulled
    inward at large radii, which is exactly the barrel look: straight
    lines bow away from the center.  Pixels sampling outside the source
    become opaque black.  ``k = (1, 0, 0, 0)`` with scale 1 is the
    identity up to bilinear rounding; the center pixel is always a fixed
    point.
    """
    if k[0] <= 0:
        raise ValueError("k[0] must be positive")
    img = np.asarray(image)
    h, w = img.shape[:2]
    ndc_x = (np.arange(w, dtype=np.float64) + 0.5) * (2.0 / w) - 1.0
    ndc_y = (np.arange(h, dtype=np.float64) + 0.5) * (2.0 / h) - 1.0
    dx = ndc_x[None, :] - center[0]
    dy = ndc_y[:, None] - center[1]
    r2 = dx * dx + dy * dy
    factor = (k[0] + r2 * (k[1] + r2 * (k[2] + r2 * k[3]))) * scale
    src_x_ndc = center[0] + dx * factor
    src_y_ndc = center[1] + dy * factor
    src_x = (src_x_ndc + 1.0) * (w / 2.0) - 0.5
    src_y = (src_y_ndc + 1.0) * (h / 2.0) - 0.5
    # anything within the image support stays; sampling clamps at the border
    valid = (src_x >= -0.5) & (src_x <= w - 0.5) & (src_y >= -0.5) & (src_y <= h - 0.5)
    out = np.zeros_like(img)
    out[:, :, 3:] = 255
    if valid.any():
        samples = bilinear_sample(img, src_x[valid], src_y[valid])
        out[valid] = np.clip(np.round(samples), 0, 255).astype(np.uint8)
    return out


def compose_side_by_side(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Concatenate the two eye images horizontally, left first."""
    if left.shape != right.shape:
        raise DimensionMismatch(
            f"eye images differ: left {left.shape}, right {right.shape}"
        )
    return np.concatenate([left, right], axis=1)


def render_stereo_frame(
    scene: "SceneConfig",
    pose: HeadPose,
    bg_left: np.ndarray,
    bg_right: np.ndarray,
    rig: StereoRigConfig,
    distort: bool = True,
    timings: dict[str, float] | None = None,
) -> StereoFrame:
    """Render one stereo frame.

    Steps: apply the head pose, render the scene once per eye (eye view
    offset, matching background, skewed projection) into per-eye targets
    sized exactly ``rig.eye_width x rig.eye_height``, barrel distort each
    eye, then compose side by side.  The whole frame is a pure function of
    its inputs.  ``timings`` (optional) accumulates per-stage seconds
    under the keys ``left_pass``, ``right_pass``, ``distortion`` and
    ``compose``.
    """
    aspect = rig.eye_width / rig.eye_height
    mono = perspective_projection(scene.fov_y, aspect, scene.near, scene.far)
    eyes: dict[int, Framebuffer] = {}
    for side, bg, stage in ((-1, bg_left, "left_pass"), (1, bg_right, "right_pass")):
        t0 = time.perf_counter()
        view = view_for_eye(pose, scene.head_position, side, rig.half_ipd)
        proj = stereo_projection(
            mono, StereoParams(side=side, separation=rig.separation, convergence=rig.convergence)
        )
        fb = Framebuffer(rig.eye_width, rig.eye_height)
        clear(fb)
        draw_background(fb, bg)
        for model in scene.models:
            rasterize_mesh(fb, model.mesh, model.texture, (model.transform, view, proj), scene.light)
        eyes[side] = fb
        if timings is not None:
            timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - t0

    t0 = time.perf_counter()
    if distort:
        left = barrel_distort(eyes[-1].color, rig.barrel_k, rig.center_left, rig.barrel_scale)
        right = barrel_distort(eyes[1].color, rig.barrel_k, rig.center_right, rig.barrel_scale)
    else:
        left = eyes[-1].color.copy()
        right = eyes[1].color.copy()
    t1 = time.perf_counter()
    combined = compose_side_by_side(left, right)
    t2 = time.perf_counter()
    if timings is not None:
        timings["distortion"] = timings.get("distortion", 0.0) + t1 - t0
        timings["compose"] = timings.get("compose", 0.0) + t2 - t1
    return StereoFrame(left=left, right=right, combined=combined, raw_left=eyes[-1], raw_right=eyes[1])
