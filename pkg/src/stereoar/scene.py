"""Scene content: meshes, textures, lights, model transforms, config loading.

Meshes are triangle soups with per-vertex position, texture coordinate and
unit normal; texture coordinates use a top-left origin (v grows downward,
matching the image layout).  Only a small Wavefront OBJ subset is
supported: ``v``, ``vt``, ``vn``, ``f`` and comments.  Scene configs are
JSON files whose schema is documented in the project README; all paths in
a config are resolved relative to the config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import capture as capture_mod
from .errors import ConfigError, ParseError, UnsupportedFeature
from .imageio import load_image, to_rgba
from .mathcore import HeadPose, Mat4, Vec3, euler_to_rotation, scaling, translation
from .omnicam import OmniIntrinsics, VirtualPinhole, load_calibration
from .stereo import StereoRigConfig

__all__ = [
    "Mesh",
    "MaterialTexture",
    "Light",
    "SceneModel",
    "SceneConfig",
    "load_obj",
    "save_obj",
    "model_matrix",
    "load_scene",
    "make_cube",
    "make_uv_sphere",
    "checker_texture",
]

_UNIT_TOL = 1e-6

# OBJ statements for free-form geometry, deliberately unsupported
_FREEFORM_KEYWORDS = {
    "cstype", "deg", "bmat", "step", "curv", "curv2", "surf",
    "parm", "trim", "hole", "scrv", "sp", "end", "con",
}


@dataclass(frozen=True)
class Mesh:
    """Indexed triangle mesh with per-vertex uv and unit normal."""

    positions: np.ndarray  # (n, 3) float64
    uvs: np.ndarray        # (n, 2) float64
    normals: np.ndarray    # (n, 3) float64, unit length
    indices: np.ndarray    # (m, 3) int32

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=np.float64))
        object.__setattr__(self, "uvs", np.asarray(self.uvs, dtype=np.float64))
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=np.float64))
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int32))
        n = self.positions.shape[0]
        if self.positions.shape != (n, 3) or self.uvs.shape != (n, 2) or self.normals.shape != (n, 3):
            raise ValueError("inconsistent vertex attribute shapes")
        if self.indices.ndim != 2 or self.indices.shape[1] != 3:
            raise ValueError("indices must be an (m, 3) triangle list")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("triangle index out of range")
        lengths = np.linalg.norm(self.normals, axis=1)
        if n and np.any(np.abs(lengths - 1.0) > _UNIT_TOL):
            raise ValueError("normals must be unit length")
        for arr in (self.positions, self.uvs, self.normals, self.indices):
            arr.setflags(write=False)

    @property
    def triangle_count(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class MaterialTexture:
    """RGBA8 texture image."""

    pixels: np.ndarray  # (h, w, 4) uint8

    def __post_init__(self) -> None:
        px = to_rgba(self.pixels)
        if px.size == 0:
            raise ValueError("texture must be non-empty")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class Light:
    """One directional light plus an ambient term.

    ``direction`` is the unit direction light travels (the surface-to-source
    vector is its negation); colors are RGB in [0, 1].
    """

    direction: Vec3 = Vec3(0.0, 0.0, 1.0)
    diffuse: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ambient: tuple[float, float, float] = (0.15, 0.15, 0.15)

    def __post_init__(self) -> None:
        if abs(self.direction.norm() - 1.0) > _UNIT_TOL:
            raise ValueError("light direction must be unit length")


@dataclass(frozen=True)
class SceneModel:
    mesh: Mesh
    texture: MaterialTexture
    transform: Mat4


@dataclass(frozen=True)
class SceneConfig:
    """A fully resolved scene: every referenced asset is loaded."""

    models: tuple[SceneModel, ...]
    light: Light
    head_position: Vec3
    initial_pose: HeadPose
    near: float
    far: float
    fov_y: float  # radians
    rig: StereoRigConfig
    pinhole: VirtualPinhole
    calibration_left: OmniIntrinsics | None
    calibration_right: OmniIntrinsics | None
    capture: capture_mod.CaptureConfig
    base_dir: Path


def _parse_face_vertex(token: str, lineno: int, path: str) -> tuple[int, int, int]:
    parts = token.split("/")
    if len(parts) > 3 or parts[0] == "":
        raise ParseError(f"malformed face vertex {token!r}", path=path, line=lineno)
    try:
        vi = int(parts[0])
        ti = int(parts[1]) if len(parts) > 1 and parts[1] else 0
        ni = int(parts[2]) if len(parts) > 2 and parts[2] else 0
    except ValueError:
        raise ParseError(f"malformed face vertex {token!r}", path=path, line=lineno)
    return vi, ti, ni


def _resolve_index(idx: int, count: int, lineno: int, path: str, what: str) -> int:
    if idx > 0:
        res = idx - 1
    elif idx < 0:
        res = count + idx
    else:
        return -1  # absent
    if not 0 <= res < count:
        raise ParseError(f"{what} index {idx} out of range (have {count})", path=path, line=lineno)
    return res


def load_obj(path) -> Mesh:
    """Load a Wavefront OBJ file.

    Polygon faces are fan-triangulated; flat normals are generated for
    faces without ``vn`` references.  Zero-area faces are dropped.
    """
    p = Path(path)
    pstr = str(p)
    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    normals: list[list[float]] = []
    tris: list[tuple[tuple[int, int, int], ...]] = []

    with open(p, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            kw = tokens[0]
            if kw == "v":
                if len(tokens) < 4:
                    raise ParseError("vertex needs 3 coordinates", path=pstr, line=lineno)
                positions.append([float(t) for t in tokens[1:4]])
            elif kw == "vt":
                if len(tokens) < 3:
                    raise ParseError("texture coordinate needs 2 values", path=pstr, line=lineno)
                texcoords.append([float(t) for t in tokens[1:3]])
            elif kw == "vn":
                if len(tokens) < 4:
                    raise ParseError("normal needs 3 components", path=pstr, line=lineno)
                normals.append([float(t) for t in tokens[1:4]])
            elif kw == "f":
                if len(tokens) < 4:
                    raise ParseError("face needs at least 3 vertices", path=pstr, line=lineno)
                corners = []
                for tok in tokens[1:]:
                    vi, ti, ni = _parse_face_vertex(tok, lineno, pstr)
                    corners.append(
                        (
                            _resolve_index(vi, len(positions), lineno, pstr, "vertex"),
                            _resolve_index(ti, len(texcoords), lineno, pstr, "texture"),
                            _resolve_index(ni, len(normals), lineno, pstr, "normal"),
                        )
                    )
                for k in range(1, len(corners) - 1):
                    tris.append((corners[0], corners[k], corners[k + 1]))
            elif kw in _FREEFORM_KEYWORDS:
                raise UnsupportedFeature(f"{pstr}:{lineno}: free-form geometry ({kw}) is not supported")
            # anything else (o, g, s, usemtl, mtllib, ...) is ignored

    pos_arr = np.asarray(positions, dtype=np.float64)
    out_pos: list[list[float]] = []
    out_uv: list[list[float]] = []
    out_nrm: list[list[float]] = []
    out_idx: list[list[int]] = []
    vertex_cache: dict[tuple, int] = {}

    for tri in tris:
        p0, p1, p2 = (pos_arr[c[0]] for c in tri)
        flat = np.cross(p1 - p0, p2 - p0)
        area = np.linalg.norm(flat)
        if area == 0.0:
            continue  # degenerate face
        flat = flat / area
        tri_idx = []
        for vi, ti, ni in tri:
            if ni >= 0:
                nrm = tuple(normals[ni])
            else:
                nrm = (float(flat[0]), float(flat[1]), float(flat[2]))
            uv = tuple(texcoords[ti]) if ti >= 0 else (0.0, 0.0)
            key = (vi, uv, nrm)
            cached = vertex_cache.get(key)
            if cached is None:
                cached = len(out_pos)
                vertex_cache[key] = cached
                out_pos.append(list(pos_arr[vi]))
                out_uv.append(list(uv))
                n = np.asarray(nrm, dtype=np.float64)
                ln = np.linalg.norm(n)
                if ln == 0.0:
                    raise ParseError("zero-length normal", path=pstr)
                out_nrm.append(list(n / ln))
            tri_idx.append(cached)
        out_idx.append(tri_idx)

    return Mesh(
        positions=np.asarray(out_pos, dtype=np.float64).reshape(-1, 3),
        uvs=np.asarray(out_uv, dtype=np.float64).reshape(-1, 2),
        normals=np.asarray(out_nrm, dtype=np.float64).reshape(-1, 3),
        indices=np.asarray(out_idx, dtype=np.int32).reshape(-1, 3),
    )


def save_obj(path, mesh: Mesh) -> None:
    """Write a mesh as OBJ with per-vertex positions, uvs and normals."""
    lines = []
    for x, y, z in mesh.positions:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for u, v in mesh.uvs:
        lines.append(f"vt {float(u)!r} {float(v)!r}")
    for x, y, z in mesh.normals:
        lines.append(f"vn {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in mesh.indices:
        lines.append(f"f {a+1}/{a+1}/{a+1} {b+1}/{b+1}/{b+1} {c+1}/{c+1}/{c+1}")
    lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def model_matrix(translation_v: Vec3 = Vec3(), rotation: HeadPose = HeadPose(), scale: Vec3 = Vec3(1, 1, 1)) -> Mat4:
    """World transform composed scale -> rotate -> translate."""
    if scale.x <= 0 or scale.y <= 0 or scale.z <= 0:
        raise ValueError("scale must be positive per axis")
    return scaling(scale) @ euler_to_rotation(rotation) @ translation(translation_v)


# ---------------------------------------------------------------------------
# Procedural fixture geometry (the original demo assets are not
# redistributable, so tests and demos build content from these).

def make_cube(size: float = 1.0) -> Mesh:
    """Axis-aligned cube centered at the origin with per-face uvs/normals."""
    h = size / 2.0
    faces = [
        # normal, corner order (CCW seen from outside along -normal)
        ((0, 0, -1), [(-h, -h, -h), (h, -h, -h), (h, h, -h), (-h, h, -h)]),
        ((0, 0, 1), [(h, -h, h), (-h, -h, h), (-h, h, h), (h, h, h)]),
        ((-1, 0, 0), [(-h, -h, h), (-h, -h, -h), (-h, h, -h), (-h, h, h)]),
        ((1, 0, 0), [(h, -h, -h), (h, -h, h), (h, h, h), (h, h, -h)]),
        ((0, 1, 0), [(-h, h, -h), (h, h, -h), (h, h, h), (-h, h, h)]),
        ((0, -1, 0), [(-h, -h, h), (h, -h, h), (h, -h, -h), (-h, -h, -h)]),
    ]
    uv_quad = [(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)]
    positions, uvs, normals, indices = [], [], [], []
    for nrm, quad in faces:
        base = len(positions)
        for corner, uv in zip(quad, uv_quad):
            positions.append(corner)
            uvs.append(uv)
            normals.append(nrm)
        indices.append([base, base + 1, base + 2])
        indices.append([base, base + 2, base + 3])
    return Mesh(
        positions=np.array(positions, dtype=np.float64),
        uvs=np.array(uvs, dtype=np.float64),
        normals=np.array(normals, dtype=np.float64),
        indices=np.array(indices, dtype=np.int32),
    )


def make_uv_sphere(radius: float = 0.5, rings: int = 12, segments: int = 24) -> Mesh:
    """Latitude/longitude sphere with smooth normals."""
    if rings < 2 or segments < 3:
        raise ValueError("need at least 2 rings and 3 segments")
    positions, uvs, normals = [], [], []
    for i in range(rings + 1):
        theta = math.pi * i / rings
        for j in range(segments + 1):
            phi = 2.0 * math.pi * j / segments
            nx = math.sin(theta) * math.cos(phi)
            ny = math.cos(theta)
            nz = math.sin(theta) * math.sin(phi)
            positions.append((radius * nx, radius * ny, radius * nz))
            normals.append((nx, ny, nz))
            uvs.append((j / segments, i / rings))
    indices = []
    stride = segments + 1
    for i in range(rings):
        for j in range(segments):
            a = i * stride + j
            b = a + stride
            if i != 0:
                indices.append([a, a + 1, b])
            if i != rings - 1:
                indices.append([a + 1, b + 1, b])
    return Mesh(
        positions=np.array(positions, dtype=np.float64),
        uvs=np.array(uvs, dtype=np.float64),
        normals=np.array(normals, dtype=np.float64),
        indices=np.array(indices, dtype=np.int32),
    )


def checker_texture(
    width: int = 64,
    height: int = 64,
    cells: int = 8,
    color_a: tuple[int, int, int, int] = (235, 235, 235, 255),
    color_b: tuple[int, int, int, int] = (40, 60, 180, 255),
) -> MaterialTexture:
    ys, xs = np.mgrid[0:height, 0:width]
    cell_w = max(1, width // cells)
    cell_h = max(1, height // cells)
    mask = ((xs // cell_w) + (ys // cell_h)) % 2 == 0
    px = np.where(mask[..., None], np.array(color_a, dtype=np.uint8), np.array(color_b, dtype=np.uint8))
    return MaterialTexture(pixels=px.astype(np.uint8))


# ---------------------------------------------------------------------------
# Scene config loading

def _get(cfg: dict, key: str, default, kind, context: str):
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"missing required key '{context}{key}'")
    try:
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for key '{context}{key}': {exc}") from exc


def _vec3(val, key: str) -> Vec3:
    try:
        x, y, z = (float(t) for t in val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{key}' must be a 3-number list") from exc
    return Vec3(x, y, z)


def _rgb(val, key: str) -> tuple[float, float, float]:
    try:
        r, g, b = (float(t) for t in val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{key}' must be a 3-number list") from exc
    for t in (r, g, b):
        if not 0.0 <= t <= 1.0:
            raise ConfigError(f"key '{key}' components must lie in [0, 1]")
    return (r, g, b)


def load_scene(path) -> SceneConfig:
    """Load and fully resolve a JSON scene config.

    Missing optional sections fall back to documented defaults (65 mm IPD
    halved to 0.032 m, light direction (0,0,1) with ambient 0.15, DK1-class
    640x800 eyes).  Raises :class:`ConfigError` naming the offending key,
    or the underlying asset error for missing files.
    """
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"scene config not found: {p}")
    base = p.parent
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("scene config must be a JSON object")

    models_cfg = cfg.get("models", [])
    if not isinstance(models_cfg, list):
        raise ConfigError("key 'models' must be a list")
    models = []
    for i, mc in enumerate(models_cfg):
        ctx = f"models[{i}]."
        mesh_path = base / _get(mc, "mesh", None, str, ctx)
        tex_path = base / _get(mc, "texture", None, str, ctx)
        if not mesh_path.exists():
            raise ConfigError(f"mesh file not found: {mesh_path}")
        if not tex_path.exists():
            raise ConfigError(f"texture file not found: {tex_path}")
        mesh = load_obj(mesh_path)
        texture = MaterialTexture(pixels=load_image(tex_path))
        tr = _vec3(mc.get("translation", (0, 0, 0)), ctx + "translation")
        rot = _vec3(mc.get("rotation", (0, 0, 0)), ctx + "rotation")
        sc = mc.get("scale", (1, 1, 1))
        if isinstance(sc, (int, float)):
            sc = (sc, sc, sc)
        scale = _vec3(sc, ctx + "scale")
        try:
            transform = model_matrix(tr, HeadPose(rot.x, rot.y, rot.z), scale)
        except ValueError as exc:
            raise ConfigError(f"bad value for key '{ctx}scale': {exc}") from exc
        models.append(SceneModel(mesh=mesh, texture=texture, transform=transform))

    lc = cfg.get("light", {})
    try:
        light = Light(
            direction=_vec3(lc.get("direction", (0, 0, 1)), "light.direction").normalized(),
            diffuse=_rgb(lc.get("diffuse", (1, 1, 1)), "light.diffuse"),
            ambient=_rgb(lc.get("ambient", (0.15, 0.15, 0.15)), "light.ambient"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad value for key 'light.direction': {exc}") from exc

    cam = cfg.get("camera", {})
    head_position = _vec3(cam.get("position", (0, 0, 0)), "camera.position")
    pose_v = _vec3(cam.get("pose", (0, 0, 0)), "camera.pose")
    initial_pose = HeadPose(yaw=pose_v.x, pitch=pose_v.y, roll=pose_v.z)
    near = _get(cam, "near", 0.1, float, "camera.")
    far = _get(cam, "far", 100.0, float, "camera.")
    if near <= 0:
        raise ConfigError("key 'camera.near' must be positive")
    if near >= far:
        raise ConfigError("key 'camera.near' must be less than 'camera.far'")
    fov_deg = _get(cam, "fov_y_deg", 75.0, float, "camera.")
    if not 0.0 < fov_deg < 180.0:
        raise ConfigError("key 'camera.fov_y_deg' must be in (0, 180)")

    st = cfg.get("stereo", {})
    barrel = st.get("barrel", {})
    k = barrel.get("k", (1.0, 0.22, 0.24, 0.0))
    try:
        k = tuple(float(t) for t in k)
    except (TypeError, ValueError) as exc:
        raise ConfigError("key 'stereo.barrel.k' must be a 4-number list") from exc
    if len(k) != 4:
        raise ConfigError("key 'stereo.barrel.k' must have exactly 4 coefficients")

    def _center(key: str) -> tuple[float, float]:
        val = barrel.get(key, (0.0, 0.0))
        try:
            cx, cy = (float(t) for t in val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key 'stereo.barrel.{key}' must be a 2-number list") from exc
        return (cx, cy)

    try:
        rig = StereoRigConfig(
            half_ipd=_get(st, "half_ipd", 0.032, float, "stereo."),
            separation=_get(st, "separation", 0.02, float, "stereo."),
            convergence=_get(st, "convergence", 2.5, float, "stereo."),
            eye_width=_get(st, "eye_width", 640, int, "stereo."),
            eye_height=_get(st, "eye_height", 800, int, "stereo."),
            barrel_k=k,
            barrel_scale=_get(barrel, "scale", 1.0, float, "stereo.barrel."),
            center_left=_center("center_left"),
            center_right=_center("center_right"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad value in 'stereo' section: {exc}") from exc

    calib = cfg.get("calibration", {})
    calibration_left = calibration_right = None
    if calib:
        for side in ("left", "right"):
            rel = _get(calib, side, None, str, "calibration.")
            cpath = base / rel
            if not cpath.exists():
                raise ConfigError(f"calibration file not found: {cpath}")
            intr = load_calibration(cpath)
            if side == "left":
                calibration_left = intr
            else:
                calibration_right = intr

    ph = cfg.get("pinhole", {})
    default_z = calibration_left.poly[0] if calibration_left is not None else 1.0
    try:
        pinhole = VirtualPinhole(
            nxc=_get(ph, "nxc", 0.0, float, "pinhole."),
            nyc=_get(ph, "nyc", 0.0, float, "pinhole."),
            z=_get(ph, "z", default_z, float, "pinhole."),
        )
    except ValueError as exc:
        raise ConfigError(f"bad value in 'pinhole' section: {exc}") from exc

    cap = cfg.get("capture", {})
    kind = _get(cap, "kind", "synthetic", str, "capture.")
    if kind not in ("synthetic", "files", "pair"):
        raise ConfigError("key 'capture.kind' must be one of: synthetic, files, pair")
    capture_cfg = capture_mod.CaptureConfig(
        kind=kind,
        width=_get(cap, "width", 752, int, "capture."),
        height=_get(cap, "height", 480, int, "capture."),
        count=_get(cap, "count", 1, int, "capture."),
        directory=cap.get("directory"),
        left=cap.get("left"),
        right=cap.get("right"),
    )

    return SceneConfig(
        models=tuple(models),
        light=light,
        head_position=head_position,
        initial_pose=initial_pose,
        near=near,
        far=far,
        fov_y=math.radians(fov_deg),
        rig=rig,
        pinhole=pinhole,
        calibration_left=calibration_left,
        calibration_right=calibration_right,
        capture=capture_cfg,
        base_dir=base,
    )
