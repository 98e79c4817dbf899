import math

import numpy as np
import pytest

from stereoar.mathcore import (
    HeadPose,
    Mat4,
    StereoParams,
    Vec3,
    Vec4,
    euler_to_rotation,
    eye_position,
    mvp_transform,
    orthographic_projection,
    perspective_divide,
    perspective_projection,
    stereo_projection,
    view_for_eye,
)

from oracles import composed_euler_oracle, naive_chain_transform

PROJ = perspective_projection(math.radians(70.0), 0.8, 0.5, 100.0)


def random_mat(rng):
    return Mat4(rng.uniform(-2, 2, (4, 4)))


def test_identity_roundtrips_vec4():
    rng = np.random.default_rng(7)
    ident = Mat4.identity()
    for _ in range(20):
        v = Vec4(*rng.uniform(-10, 10, 4))
        assert ident.transform(v) == v


def test_matmul_associativity():
    rng = np.random.default_rng(8)
    for _ in range(50):
        a, b, c = (random_mat(rng) for _ in range(3))
        left = (a @ b) @ c
        right = a @ (b @ c)
        assert np.max(np.abs(left.a - right.a)) < 1e-9


def test_euler_zero_is_identity():
    r = euler_to_rotation(HeadPose(0, 0, 0))
    assert np.array_equal(r.a, np.eye(4))


def test_euler_yaw90_turns_forward_to_lateral():
    r = euler_to_rotation(HeadPose(yaw=90))
    out = r.transform_direction(Vec3(0, 0, 1))
    oracle = naive_chain_transform([0, 0, 1, 0], [composed_euler_oracle(90, 0, 0)])
    assert abs(out.x - 1.0) < 1e-12 and abs(out.y) < 1e-12 and abs(out.z) < 1e-12
    assert np.allclose([out.x, out.y, out.z], oracle[:3], atol=1e-12)


def test_euler_roll180_flips_up():
    r = euler_to_rotation(HeadPose(roll=180))
    out = r.transform_direction(Vec3(0, 1, 0))
    oracle = naive_chain_transform([0, 1, 0, 0], [composed_euler_oracle(0, 0, 180)])
    assert abs(out.y + 1.0) < 1e-12
    assert np.allclose([out.x, out.y, out.z], oracle[:3], atol=1e-12)


def test_euler_matches_composition_oracle():
    rng = np.random.default_rng(9)
    for _ in range(200):
        yaw, pitch, roll = rng.uniform(-360, 360, 3)
        lib = euler_to_rotation(HeadPose(yaw, pitch, roll)).a
        ref = np.array(composed_euler_oracle(yaw, pitch, roll))
        assert np.max(np.abs(lib - ref)) < 1e-12


def test_rotations_orthonormal_unit_determinant():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        yaw, pitch, roll = rng.uniform(-720, 720, 3)
        r = euler_to_rotation(HeadPose(yaw, pitch, roll)).a
        assert np.max(np.abs(r @ r.T - np.eye(4))) < 1e-9
        assert abs(np.linalg.det(r) - 1.0) < 1e-9


def test_perspective_axial_point_centered():
    for depth in (0.6, 1.0, 7.5, 99.0):
        ndc = perspective_divide(PROJ.transform(Vec4.point(Vec3(0, 0, depth))))
        assert ndc.x == 0.0 and ndc.y == 0.0


def test_perspective_depth_range():
    near = perspective_divide(PROJ.transform(Vec4.point(Vec3(0, 0, 0.5))))
    far = perspective_divide(PROJ.transform(Vec4.point(Vec3(0, 0, 100.0))))
    assert abs(near.z - 0.0) < 1e-9
    assert abs(far.z - 1.0) < 1e-9


def test_perspective_top_frustum_edge():
    fov = math.radians(70.0)
    for d in (0.7, 3.0, 42.0):
        y = math.tan(fov / 2.0) * d
        ndc = perspective_divide(PROJ.transform(Vec4.point(Vec3(0, y, d))))
        assert abs(ndc.y - 1.0) < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(fov_y=1.0, aspect=1.0, near=0.0, far=10.0),
        dict(fov_y=1.0, aspect=1.0, near=-1.0, far=10.0),
        dict(fov_y=1.0, aspect=0.0, near=0.1, far=10.0),
        dict(fov_y=1.0, aspect=-2.0, near=0.1, far=10.0),
        dict(fov_y=0.0, aspect=1.0, near=0.1, far=10.0),
        dict(fov_y=math.pi, aspect=1.0, near=0.1, far=10.0),
        dict(fov_y=1.0, aspect=1.0, near=5.0, far=5.0),
    ],
)
def test_perspective_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        perspective_projection(**kwargs)


def test_orthographic_viewport_mapping():
    w, h = 640.0, 480.0
    ortho = orthographic_projection(w, h, 0.0, 1.0)

    def ndc_of(x, y, z=0.5):
        return perspective_divide(ortho.transform(Vec4.point(Vec3(x, y, z))))

    center = ndc_of(w / 2, h / 2)
    assert center.x == 0.0 and center.y == 0.0
    corner = ndc_of(0.0, 0.0)
    assert corner.x == -1.0 and corner.y == 1.0
    mid_right = ndc_of(w, h / 2)
    assert mid_right.x == 1.0 and mid_right.y == 0.0


def test_orthographic_rejects_zero_extents():
    with pytest.raises(ValueError):
        orthographic_projection(0.0, 480.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        orthographic_projection(640.0, 0.0, 0.0, 1.0)


def test_stereo_zero_separation_bit_identical():
    out = stereo_projection(PROJ, StereoParams(side=1, separation=0.0, convergence=2.0))
    assert out.a.tobytes() == PROJ.a.tobytes()


def test_stereo_modifies_exactly_two_entries():
    sep, conv = 0.07, 3.0
    left = stereo_projection(PROJ, StereoParams(-1, sep, conv))
    right = stereo_projection(PROJ, StereoParams(1, sep, conv))
    for side, mat in ((-1, left), (1, right)):
        diff = mat.a != PROJ.a
        assert diff.sum() == 2
        assert mat.a[2, 0] == PROJ.a[2, 0] + side * sep
        assert mat.a[3, 0] == -side * sep * conv
    # left and right differ only in the sign of the two modified terms
    assert left.a[2, 0] == -right.a[2, 0]
    assert left.a[3, 0] == -right.a[3, 0]
    mask = np.ones((4, 4), dtype=bool)
    mask[2, 0] = mask[3, 0] = False
    assert np.array_equal(left.a[mask], right.a[mask])


def test_stereo_zero_disparity_at_convergence():
    rng = np.random.default_rng(11)
    for _ in range(100):
        fov = rng.uniform(0.4, 2.4)
        aspect = rng.uniform(0.4, 2.5)
        near = rng.uniform(0.01, 1.0)
        far = near + rng.uniform(5.0, 500.0)
        mono = perspective_projection(fov, aspect, near, far)
        sep = rng.uniform(0.001, 0.3)
        conv = rng.uniform(near * 1.5, far * 0.5)
        point = Vec4.point(Vec3(0, 0, conv))
        xl = perspective_divide(stereo_projection(mono, StereoParams(-1, sep, conv)).transform(point)).x
        xr = perspective_divide(stereo_projection(mono, StereoParams(1, sep, conv)).transform(point)).x
        assert abs(xl - xr) < 1e-6


def test_stereo_disparity_sign_flips_across_convergence():
    rng = np.random.default_rng(12)
    for _ in range(100):
        conv = rng.uniform(1.0, 10.0)
        sep = rng.uniform(0.01, 0.3)
        left = stereo_projection(PROJ, StereoParams(-1, sep, conv))
        right = stereo_projection(PROJ, StereoParams(1, sep, conv))
        nearer = Vec4.point(Vec3(0, 0, conv * rng.uniform(0.2, 0.9)))
        farther = Vec4.point(Vec3(0, 0, conv * rng.uniform(1.2, 5.0)))
        # crossed: left image point right of the right image point
        assert perspective_divide(left.transform(nearer)).x > perspective_divide(right.transform(nearer)).x
        # uncrossed: the other way around
        assert perspective_divide(left.transform(farther)).x < perspective_divide(right.transform(farther)).x


def test_stereo_params_validation():
    with pytest.raises(ValueError):
        StereoParams(side=0, separation=0.1, convergence=1.0)
    with pytest.raises(ValueError):
        StereoParams(side=1, separation=-0.1, convergence=1.0)
    with pytest.raises(ValueError):
        StereoParams(side=1, separation=0.1, convergence=0.0)


def test_mvp_identity_passthrough():
    ident = Mat4.identity()
    v = Vec4.point(Vec3(0.3, -0.2, 4.0))
    assert mvp_transform(v, ident, ident, PROJ) == PROJ.transform(v)


def test_mvp_translation_cancellation():
    from stereoar.mathcore import translation

    t = Vec3(1.5, -2.0, 3.25)
    model = translation(t)
    view = translation(-t)
    v = Vec4.point(Vec3(0.1, 0.2, 5.0))
    direct = PROJ.transform(v)
    chained = mvp_transform(v, model, view, PROJ)
    assert np.allclose(
        [chained.x, chained.y, chained.z, chained.w],
        [direct.x, direct.y, direct.z, direct.w],
        atol=1e-12,
    )


def test_mvp_matches_naive_chain_oracle():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        v = Vec4(*rng.uniform(-5, 5, 4))
        mats = [rng.uniform(-2, 2, (4, 4)) for _ in range(3)]
        lib = mvp_transform(v, Mat4(mats[0]), Mat4(mats[1]), Mat4(mats[2]))
        ref = naive_chain_transform([v.x, v.y, v.z, v.w], [m.tolist() for m in mats])
        assert np.max(np.abs(np.array([lib.x, lib.y, lib.z, lib.w]) - ref)) < 1e-9


def test_view_for_eye_degenerate_ipd():
    pose = HeadPose(25, -10, 5)
    head = Vec3(0.4, 1.2, -0.3)
    left = view_for_eye(pose, head, -1, 0.0)
    right = view_for_eye(pose, head, 1, 0.0)
    assert np.array_equal(left.a, right.a)


def test_eye_positions_at_half_ipd():
    left = eye_position(HeadPose(), Vec3(), -1, 0.032)
    right = eye_position(HeadPose(), Vec3(), 1, 0.032)
    assert (left.x, left.y, left.z) == (-0.032, 0.0, 0.0)
    assert (right.x, right.y, right.z) == (0.032, 0.0, 0.0)


def test_eye_offset_axis_rotates_with_head():
    pose = HeadPose(yaw=90)
    half = 0.032
    sep_vec = eye_position(pose, Vec3(), 1, half) - eye_position(pose, Vec3(), -1, half)
    local_x = euler_to_rotation(pose).transform_direction(Vec3(1, 0, 0))
    expect = local_x * (2 * half)
    assert np.allclose([sep_vec.x, sep_vec.y, sep_vec.z], [expect.x, expect.y, expect.z], atol=1e-12)


def test_view_places_eye_at_origin():
    rng = np.random.default_rng(14)
    for _ in range(50):
        pose = HeadPose(*rng.uniform(-180, 180, 3))
        head = Vec3(*rng.uniform(-3, 3, 3))
        side = int(rng.choice([-1, 1]))
        half = float(rng.uniform(0, 0.1))
        eye = eye_position(pose, head, side, half)
        view = view_for_eye(pose, head, side, half)
        at_origin = view.transform_point(eye)
        assert np.allclose([at_origin.x, at_origin.y, at_origin.z], 0.0, atol=1e-9)
