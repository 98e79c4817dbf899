import math
from pathlib import Path

import numpy as np
import pytest

from stereoar.capture import CaptureConfig
from stereoar.errors import DimensionMismatch
from stereoar.mathcore import HeadPose, Vec3
from stereoar.omnicam import VirtualPinhole
from stereoar.scene import Light, MaterialTexture, SceneConfig, SceneModel, make_cube, model_matrix
from stereoar.stereo import (
    StereoRigConfig,
    barrel_distort,
    compose_side_by_side,
    render_stereo_frame,
)


def white_texture():
    return MaterialTexture(pixels=np.full((1, 1, 4), 255, dtype=np.uint8))


def make_test_scene(model_z=2.5, model_scale=0.3):
    model = SceneModel(
        mesh=make_cube(1.0),
        texture=white_texture(),
        transform=model_matrix(Vec3(0, 0, model_z), HeadPose(), Vec3(model_scale, model_scale, model_scale)),
    )
    return SceneConfig(
        models=(model,),
        light=Light(direction=Vec3(0, 0, 1), diffuse=(0, 0, 0), ambient=(1, 1, 1)),
        head_position=Vec3(),
        initial_pose=HeadPose(),
        near=0.1,
        far=100.0,
        fov_y=math.radians(60.0),
        rig=StereoRigConfig(),
        pinhole=VirtualPinhole(z=1.0),
        calibration_left=None,
        calibration_right=None,
        capture=CaptureConfig(),
        base_dir=Path("."),
    )


def gray_bg(w, h, value=110):
    img = np.full((h, w, 4), value, dtype=np.uint8)
    img[:, :, 3] = 255
    return img


def model_centroid_x(eye_img):
    mask = eye_img[:, :, 0] == 255
    assert mask.any(), "model not visible in the eye image"
    return np.nonzero(mask)[1].mean()


# ---------------------------------------------------------------------------
# barrel distortion

def test_barrel_unit_coefficients_near_identity():
    ys, xs = np.mgrid[0:60, 0:80]
    img = np.stack([xs * 3 % 256, ys * 4 % 256, (xs + ys) % 256, np.full_like(xs, 255)], axis=-1).astype(np.uint8)
    out = barrel_distort(img, (1.0, 0.0, 0.0, 0.0), (0.0, 0.0), 1.0)
    diff = np.abs(out.astype(int) - img.astype(int))
    assert diff.max() <= 1


def test_barrel_center_pixel_fixed_point():
    rng = np.random.default_rng(41)
    img = rng.integers(0, 256, (65, 65, 4), dtype=np.uint8)
    for k in ((1.0, 0.3, 0.1, 0.05), (0.8, 0.5, 0.0, 0.0), (1.2, 0.0, 0.4, 0.0)):
        out = barrel_distort(img, k, (0.0, 0.0), 1.0)
        assert np.array_equal(out[32, 32], img[32, 32])


def test_barrel_preserves_dimensions():
    img = np.zeros((37, 53, 4), dtype=np.uint8)
    out = barrel_distort(img, (1.0, 0.2, 0.0, 0.0))
    assert out.shape == img.shape


def test_barrel_line_bows_away_from_center():
    # vertical bright line right of center on a black field
    h = w = 129
    img = np.zeros((h, w, 4), dtype=np.uint8)
    img[:, :, 3] = 255
    line_x = 96
    img[:, line_x, :3] = 255
    k = (1.0, 0.2, 0.0, 0.0)
    out = barrel_distort(img, k, (0.0, 0.0), 1.0)

    def line_pos(row):
        r = out[row, :, 0].astype(float)
        assert r.max() > 0, f"line not visible at row {row}"
        return int(np.argmax(r))

    def forward_x(row):
        # output pixel (m, row) samples src x = m * (k0 + k1 * r^2); invert
        # for the line's source column to predict where it lands
        ndc_y = (row + 0.5) * 2.0 / h - 1.0
        src_x_ndc = (line_x + 0.5) * 2.0 / w - 1.0
        lo, hi = 0.0, 1.5
        for _ in range(80):
            m = 0.5 * (lo + hi)
            f = k[0] + k[1] * (m * m + ndc_y * ndc_y)
            if m * f < src_x_ndc:
                lo = m
            else:
                hi = m
        return (0.5 * (lo + hi) + 1.0) * w / 2.0 - 0.5

    rows = [h // 2, h // 2 - 16, h // 2 - 30]
    positions = [line_pos(r) for r in rows]
    # bowed away from center: the middle bulges farthest right
    assert positions[0] > positions[1] > positions[2]
    for row, got in zip(rows, positions):
        assert abs(got - forward_x(row)) <= 1.5


def test_barrel_not_idempotent_with_k1():
    ys, xs = np.mgrid[0:64, 0:64]
    img = (((xs // 8) + (ys // 8)) % 2 * 255).astype(np.uint8)
    img = np.stack([img, img, img, np.full_like(img, 255)], axis=-1)
    k = (1.0, 0.4, 0.0, 0.0)
    once = barrel_distort(img, k)
    twice = barrel_distort(once, k)
    assert not np.array_equal(once, twice)


def test_barrel_rejects_nonpositive_k0():
    with pytest.raises(ValueError):
        barrel_distort(np.zeros((4, 4, 4), dtype=np.uint8), (0.0, 0.2, 0.0, 0.0))


# ---------------------------------------------------------------------------
# composition

def test_compose_dimensions():
    left = np.zeros((800, 640, 4), dtype=np.uint8)
    right = np.zeros((800, 640, 4), dtype=np.uint8)
    out = compose_side_by_side(left, right)
    assert out.shape == (800, 1280, 4)


def test_compose_right_pixel_offset():
    rng = np.random.default_rng(42)
    left = rng.integers(0, 256, (8, 10, 4), dtype=np.uint8)
    right = rng.integers(0, 256, (8, 10, 4), dtype=np.uint8)
    out = compose_side_by_side(left, right)
    assert np.array_equal(out[3, 4], left[3, 4])
    assert np.array_equal(out[3, 4 + 10], right[3, 4])
    swapped = compose_side_by_side(right, left)
    assert np.array_equal(swapped[:, :10], right)
    assert np.array_equal(swapped[:, 10:], left)


def test_compose_rejects_mismatched_sizes():
    with pytest.raises(DimensionMismatch):
        compose_side_by_side(np.zeros((4, 4, 4), np.uint8), np.zeros((4, 5, 4), np.uint8))


# ---------------------------------------------------------------------------
# full frame

def make_rig(**kw):
    base = dict(eye_width=160, eye_height=200, half_ipd=0.0, separation=0.1, convergence=2.5)
    base.update(kw)
    return StereoRigConfig(**base)


def test_degenerate_rig_gives_bit_identical_halves():
    scene = make_test_scene()
    rig = make_rig(half_ipd=0.0, separation=0.0)
    bg = gray_bg(160, 200)
    frame = render_stereo_frame(scene, HeadPose(), bg, bg, rig)
    w = rig.eye_width
    assert frame.combined.shape == (200, 320, 4)
    assert np.array_equal(frame.combined[:, :w], frame.combined[:, w:])
    assert np.array_equal(frame.left, frame.right)


def test_frame_is_pure_function():
    scene = make_test_scene()
    rig = make_rig(half_ipd=0.02, separation=0.05)
    bg = gray_bg(160, 200)
    a = render_stereo_frame(scene, HeadPose(10, 5, 0), bg, bg, rig)
    b = render_stereo_frame(scene, HeadPose(10, 5, 0), bg, bg, rig)
    assert a.combined.tobytes() == b.combined.tobytes()


def test_eye_targets_honor_rig_size():
    scene = make_test_scene()
    rig = make_rig(eye_width=144, eye_height=176)
    bg = gray_bg(144, 176)
    frame = render_stereo_frame(scene, HeadPose(), bg, bg, rig)
    assert frame.raw_left.width == 144 and frame.raw_left.height == 176
    assert frame.raw_right.width == 144 and frame.raw_right.height == 176
    assert frame.combined.shape == (176, 288, 4)


def test_model_at_convergence_has_matching_eye_position():
    # projection skew only (eyes co-located): zero disparity at convergence
    scene = make_test_scene(model_z=2.5)
    rig = make_rig(half_ipd=0.0, separation=0.1, convergence=2.5)
    bg = gray_bg(160, 200)
    frame = render_stereo_frame(scene, HeadPose(), bg, bg, rig, distort=False)
    xl = model_centroid_x(frame.left)
    xr = model_centroid_x(frame.right)
    assert abs(xl - xr) <= 1.0


def test_model_nearer_than_convergence_is_crossed():
    scene = make_test_scene(model_z=1.2)
    rig = make_rig(half_ipd=0.0, separation=0.1, convergence=2.5)
    bg = gray_bg(160, 200)
    frame = render_stereo_frame(scene, HeadPose(), bg, bg, rig, distort=False)
    # crossed disparity: the left eye sees the model farther right
    assert model_centroid_x(frame.left) > model_centroid_x(frame.right) + 1.0


def test_model_farther_than_convergence_is_uncrossed():
    scene = make_test_scene(model_z=8.0, model_scale=0.8)
    rig = make_rig(half_ipd=0.0, separation=0.1, convergence=2.5)
    bg = gray_bg(160, 200)
    frame = render_stereo_frame(scene, HeadPose(), bg, bg, rig, distort=False)
    assert model_centroid_x(frame.left) < model_centroid_x(frame.right) - 1.0


def test_rig_validation():
    with pytest.raises(ValueError):
        make_rig(half_ipd=-0.1)
    with pytest.raises(ValueError):
        make_rig(eye_width=0)
    with pytest.raises(ValueError):
        StereoRigConfig(barrel_k=(0.0, 0.1, 0.0, 0.0))
