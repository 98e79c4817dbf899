"""Bundled fixtures: demo calibration, scene and assets.

The fisheye intrinsics here come from the original hardware rig's
published right-camera calibration.  Only the constant and the highest
coefficient of its degree-9 polynomial were ever disclosed; the middle
coefficients are stored as 0.0 placeholders, which degenerates the model
to an ideal pinhole of focal length ~712.9 px.  That makes the fixture
exact and convenient for round-trip testing, but it is *not* a usable
calibration of the physical camera.  The left camera's values were never
published at all, so demo scenes reuse the right-camera file for both
eyes.

The virtual pinhole offsets (nxc=79.4, nyc=67.2) also come from that rig
(they roughly recenter the skewed calibration center).  The original
listed a focal distance of -177, which pairs with the undisclosed full
polynomial; with the placeholder polynomial the camera sees the +z
half-space and -177 would leave every ray out of frame, so the bundled
default uses a positive focal distance chosen so the 640x800 eye view is
fully covered by the 752x480 source.
"""

from __future__ import annotations

import json
from pathlib import Path

from .imageio import save_image
from .omnicam import OmniIntrinsics, VirtualPinhole, save_calibration
from .scene import checker_texture, make_cube, make_uv_sphere, save_obj

__all__ = [
    "demo_intrinsics",
    "demo_pinhole",
    "write_demo_calibration",
    "write_demo_scene",
]


def demo_intrinsics() -> OmniIntrinsics:
    """752x480 fisheye fixture; middle polynomial coefficients are placeholders."""
    return OmniIntrinsics(
        poly=(712.870100, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        c=1.000052,
        d=0.000060,
        e=-0.000032,
        xc=236.646089,
        yc=394.135741,
        width=752,
        height=480,
    )


def demo_pinhole() -> VirtualPinhole:
    return VirtualPinhole(nxc=79.4, nyc=67.2, z=2851.4804)


def write_demo_calibration(path) -> Path:
    p = Path(path)
    save_calibration(p, demo_intrinsics())
    return p


def write_demo_scene(directory, eye_width: int = 640, eye_height: int = 800, frames: int = 1) -> Path:
    """Write a self-contained demo scene; returns the config path.

    Creates cube/sphere meshes, checker textures, the fixture calibration
    and a scene config wired to a synthetic frame source.  The default eye
    size matches the DK1-class 1280x800 split screen.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_obj(d / "cube.obj", make_cube(1.0))
    save_obj(d / "sphere.obj", make_uv_sphere(0.45, rings=12, segments=18))
    save_image(d / "checker.png", checker_texture(64, 64, 8).pixels)
    save_image(
        d / "checker_warm.png",
        checker_texture(64, 64, 8, color_a=(240, 200, 120, 255), color_b=(150, 60, 30, 255)).pixels,
    )
    write_demo_calibration(d / "fisheye_752x480.txt")
    pin = demo_pinhole()
    config = {
        "models": [
            {
                "mesh": "cube.obj",
                "texture": "checker.png",
                "translation": [-0.35, 0.0, 2.5],
                "rotation": [30.0, 20.0, 0.0],
                "scale": 1.0,
            },
            {
                "mesh": "sphere.obj",
                "texture": "checker_warm.png",
                "translation": [0.6, 0.2, 3.2],
                "rotation": [0.0, 0.0, 0.0],
                "scale": 1.0,
            },
        ],
        "light": {
            "direction": [0.0, 0.0, 1.0],
            "diffuse": [1.0, 1.0, 1.0],
            "ambient": [0.15, 0.15, 0.15],
        },
        "camera": {
            "position": [0.0, 0.0, 0.0],
            "pose": [0.0, 0.0, 0.0],
            "near": 0.1,
            "far": 100.0,
            "fov_y_deg": 75.0,
        },
        "stereo": {
            "half_ipd": 0.032,
            "separation": 0.02,
            "convergence": 2.5,
            "eye_width": eye_width,
            "eye_height": eye_height,
            "barrel": {"k": [1.0, 0.22, 0.24, 0.0], "scale": 1.0},
        },
        "calibration": {
            "left": "fisheye_752x480.txt",
            "right": "fisheye_752x480.txt",
        },
        "pinhole": {"nxc": pin.nxc, "nyc": pin.nyc, "z": pin.z},
        "capture": {"kind": "synthetic", "width": 752, "height": 480, "count": frames},
    }
    cfg_path = d / "scene.json"
    cfg_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return cfg_path
