"""Command-line driver: ``stereoar render|undistort|fit``.

Exit codes are a stable contract: 0 on success, 1 for internal errors,
2 for user/config errors (bad flags, missing files, invalid configs).
``STEREOAR_THREADS`` caps internal parallelism; the current pipeline is
single-threaded, so any cap >= 1 is honored trivially, but the value is
still validated so configs stay portable.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .capture import open_source
from .errors import (
    ConfigError,
    DimensionMismatch,
    EndOfStream,
    NoProjection,
    ParseError,
    RankDeficient,
    ReadError,
    UnsupportedFeature,
)
from .imageio import load_image, save_image
from .mathcore import Vec3
from .omnicam import (
    VirtualPinhole,
    build_undistortion_lut,
    fit_poly,
    load_calibration,
    remap,
    save_calibration,
    OmniIntrinsics,
)
from .scene import load_scene
from .stereo import render_stereo_frame

__all__ = ["main", "RunStats", "cmd_render", "cmd_undistort", "cmd_fit"]

_USER_ERRORS = (
    ConfigError,
    ParseError,
    ReadError,
    RankDeficient,
    DimensionMismatch,
    UnsupportedFeature,
    NoProjection,
    FileNotFoundError,
    ValueError,
)


@dataclass
class RunStats:
    """Wall-clock accounting for a render run."""

    undistort: float = 0.0
    left_pass: float = 0.0
    right_pass: float = 0.0
    distortion: float = 0.0
    compose: float = 0.0
    frames: int = 0
    total: float = 0.0

    @property
    def fps(self) -> float:
        return self.frames / self.total if self.total > 0 else 0.0

    def report(self) -> str:
        lines = [
            f"undistort : {self.undistort:8.4f} s",
            f"left pass : {self.left_pass:8.4f} s",
            f"right pass: {self.right_pass:8.4f} s",
            f"distortion: {self.distortion:8.4f} s",
            f"compose   : {self.compose:8.4f} s",
            f"frames    : {self.frames}",
            f"fps       : {self.fps:.3f}",
        ]
        return "\n".join(lines)


def _thread_cap() -> int:
    raw = os.environ.get("STEREOAR_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"STEREOAR_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigError(f"STEREOAR_THREADS must be >= 1, got {cap}")
    return cap


def _numbered_output(base: Path, index: int) -> Path:
    return base.with_name(f"{base.stem}_{index:06d}{base.suffix}")


def cmd_render(args: argparse.Namespace) -> int:
    _thread_cap()
    scene = load_scene(args.config)
    source = open_source(scene.capture, scene.base_dir)
    out_path = Path(args.output)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)

    luts = None
    if scene.calibration_left is not None and scene.calibration_right is not None:
        eye_size = (scene.rig.eye_width, scene.rig.eye_height)
        lut_left = build_undistortion_lut(scene.calibration_left, scene.pinhole, eye_size)
        if scene.calibration_right == scene.calibration_left:
            lut_right = lut_left
        else:
            lut_right = build_undistortion_lut(scene.calibration_right, scene.pinhole, eye_size)
        luts = (lut_left, lut_right)

    # outputs are numbered when more than one frame can be produced
    if args.frames == 1 or scene.capture.kind == "pair":
        multi = False
    elif scene.capture.kind == "synthetic":
        limit = scene.capture.count if args.frames is None else min(scene.capture.count, args.frames)
        multi = limit > 1
    else:
        multi = True

    stats = RunStats()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    frame_index = 0
    while True:
        if args.frames is not None and frame_index >= args.frames:
            break
        try:
            left, right = source.next_pair()
        except EndOfStream:
            break
        t0 = time.perf_counter()
        if luts is not None:
            bg_left = remap(left, luts[0])
            bg_right = remap(right, luts[1])
        else:
            bg_left, bg_right = left, right
        stats.undistort += time.perf_counter() - t0

        frame = render_stereo_frame(
            scene,
            scene.initial_pose,
            bg_left,
            bg_right,
            scene.rig,
            distort=not args.no_distortion,
            timings=timings,
        )
        target = _numbered_output(out_path, frame_index) if multi else out_path
        save_image(target, frame.combined)
        if args.dump_eyes:
            save_image(target.with_name(f"{target.stem}_left{target.suffix}"), frame.raw_left.color)
            save_image(target.with_name(f"{target.stem}_right{target.suffix}"), frame.raw_right.color)
        frame_index += 1
    stats.frames = frame_index
    stats.left_pass = timings.get("left_pass", 0.0)
    stats.right_pass = timings.get("right_pass", 0.0)
    stats.distortion = timings.get("distortion", 0.0)
    stats.compose = timings.get("compose", 0.0)
    stats.total = time.perf_counter() - t_start
    if frame_index == 0:
        print("error: input source produced no frames", file=sys.stderr)
        return 2
    if args.stats:
        print(stats.report())
    return 0


def cmd_undistort(args: argparse.Namespace) -> int:
    _thread_cap()
    calib_path = Path(args.calibration)
    if not calib_path.exists():
        raise ReadError(f"calibration file not found: {calib_path}")
    intr = load_calibration(calib_path)
    image = load_image(args.input)
    if args.out_size is not None:
        out_size = _parse_size(args.out_size)
    else:
        out_size = (image.shape[1], image.shape[0])
    z = args.z if args.z is not None else intr.poly[0]
    pin = VirtualPinhole(nxc=args.nxc, nyc=args.nyc, z=z)
    lut = build_undistortion_lut(intr, pin, out_size)
    save_image(args.output, remap(image, lut))
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    _thread_cap()
    corr_path = Path(args.correspondences)
    if not corr_path.exists():
        raise ReadError(f"correspondence file not found: {corr_path}")
    pairs = _load_correspondences(corr_path)
    width, height = _parse_size(args.size)
    if args.center is not None:
        center = (float(args.center[0]), float(args.center[1]))
    else:
        center = (width / 2.0, height / 2.0)
    result = fit_poly(pairs, center, degree=args.degree)
    intr = OmniIntrinsics(
        poly=result.coefficients,
        c=1.0,
        d=0.0,
        e=0.0,
        xc=center[0],
        yc=center[1],
        width=width,
        height=height,
    )
    save_calibration(args.output, intr)
    print(f"rms residual: {result.rms_residual:.6e}")
    return 0


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ConfigError(f"expected WIDTHxHEIGHT, got {text!r}")


def _load_correspondences(path: Path):
    """Lines of 'ray_x ray_y ray_z pixel_u pixel_v'; '#' comments allowed."""
    pairs = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 5:
            raise ParseError("expected 5 numbers: ray xyz and pixel uv", path=str(path), line=lineno)
        try:
            x, y, z, u, v = (float(t) for t in parts)
        except ValueError:
            raise ParseError("expected numeric fields", path=str(path), line=lineno)
        pairs.append((Vec3(x, y, z), (u, v)))
    return pairs


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereoar",
        description="Stereoscopic AR rendering over recorded or synthetic frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render stereo frame(s) from a scene config")
    p_render.add_argument("config", help="scene config JSON path")
    p_render.add_argument("-o", "--output", required=True, help="output image path (.png or .ppm)")
    p_render.add_argument("--frames", type=int, default=None, help="max number of frames to render")
    p_render.add_argument("--stats", action="store_true", help="print per-stage timing stats")
    p_render.add_argument("--dump-eyes", action="store_true",
                          help="also write per-eye pre-distortion images")
    p_render.add_argument("--no-distortion", action="store_true",
                          help="skip the barrel-distortion post-process")
    p_render.set_defaults(func=cmd_render)

    p_und = sub.add_parser("undistort", help="undistort a fisheye image to a perspective view")
    p_und.add_argument("calibration", help="calibration text file")
    p_und.add_argument("input", help="input image (.png or .ppm)")
    p_und.add_argument("-o", "--output", required=True, help="output image path")
    p_und.add_argument("--nxc", type=float, default=0.0, help="virtual principal point x offset (px)")
    p_und.add_argument("--nyc", type=float, default=0.0, help="virtual principal point y offset (px)")
    p_und.add_argument("--z", type=float, default=None,
                       help="virtual focal distance in px (default: the calibration's constant coefficient)")
    p_und.add_argument("--out-size", default=None, help="output size WIDTHxHEIGHT (default: input size)")
    p_und.set_defaults(func=cmd_undistort)

    p_fit = sub.add_parser("fit", help="fit a radial polynomial from ray/pixel correspondences")
    p_fit.add_argument("correspondences", help="text file: ray_x ray_y ray_z pixel_u pixel_v per line")
    p_fit.add_argument("output", help="output calibration file")
    p_fit.add_argument("--degree", type=int, default=4, help="polynomial degree (default 4)")
    p_fit.add_argument("--size", default="752x480", help="image size WIDTHxHEIGHT for the calibration")
    p_fit.add_argument("--center", nargs=2, type=float, default=None,
                       help="image center (default: size/2)")
    p_fit.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
