"""Hardware-free stereoscopic AR rendering.

The pipeline: fisheye camera frames are undistorted through an
omnidirectional camera model (:mod:`stereoar.omnicam`), composited behind
software-rasterized, lit 3D models (:mod:`stereoar.raster`), rendered once
per eye with an off-axis stereo projection (:mod:`stereoar.mathcore`,
:mod:`stereoar.stereo`), barrel distorted for an HMD lens and packed side
by side.  :mod:`stereoar.capture` provides frame-pair sources and the
cross-thread mailbox; :mod:`stereoar.cli` is the command-line driver.
"""

from .capture import (
    FilePairSource,
    FrameMailbox,
    SinglePairSource,
    SyntheticSource,
    flip_180,
)
from .mathcore import (
    HeadPose,
    Mat4,
    StereoParams,
    Vec3,
    Vec4,
    euler_to_rotation,
    mvp_transform,
    orthographic_projection,
    perspective_projection,
    stereo_projection,
    view_for_eye,
)
from .omnicam import (
    OmniIntrinsics,
    UndistortionLut,
    VirtualPinhole,
    build_undistortion_lut,
    cam_to_world,
    eval_poly,
    fit_poly,
    load_calibration,
    remap,
    save_calibration,
    world_to_cam,
)
from .raster import Framebuffer, FragmentInput, clear, draw_background, rasterize_mesh, sample_texture, shade_fragment
from .scene import (
    Light,
    MaterialTexture,
    Mesh,
    SceneConfig,
    checker_texture,
    load_obj,
    load_scene,
    make_cube,
    make_uv_sphere,
    model_matrix,
    save_obj,
)
from .stereo import (
    StereoFrame,
    StereoRigConfig,
    barrel_distort,
    compose_side_by_side,
    render_stereo_frame,
)

__version__ = "0.1.0"
