"""Deterministic CPU rasterizer.

Implements the two-pass scene render: an orthographic background blit that
never touches the depth buffer, then z-buffered, textured, Lambertian-lit
triangle meshes.  Pixels sample at centers (x + 0.5, y + 0.5); coverage
ties on shared edges follow the top-left rule, so adjacent triangles cover
each edge pixel exactly once.  Triangles are processed in submission order
and all arithmetic is sequential numpy, so identical input produces a
bit-identical framebuffer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .imageio import bilinear_sample
from .mathcore import Mat4, Vec3

if TYPE_CHECKING:
    from .scene import Light, MaterialTexture, Mesh

__all__ = [
    "Framebuffer",
    "FragmentInput",
    "clear",
    "draw_background",
    "rasterize_mesh",
    "shade_fragment",
    "sample_texture",
]


class Framebuffer:
    """Color (RGBA8) plus depth ([0, 1], cleared to the far value 1.0)."""

    def __init__(self, width: int, height: int) -> None:
        if width <= 0 or height <= 0:
            raise ValueError("framebuffer dimensions must be positive")
        self.color = np.zeros((height, width, 4), dtype=np.uint8)
        self.depth = np.ones((height, width), dtype=np.float64)

    @property
    def width(self) -> int:
        return int(self.color.shape[1])

    @property
    def height(self) -> int:
        return int(self.color.shape[0])


@dataclass(frozen=True)
class FragmentInput:
    """Interpolated values entering the shading stage."""

    uv: tuple[float, float]
    normal: Vec3
    depth: float


def clear(fb: Framebuffer, color=(0.0, 0.0, 0.0, 1.0)) -> None:
    """Fill color with an RGBA value in [0, 1] and depth with 1.0."""
    rgba = np.clip(np.round(np.asarray(color, dtype=np.float64) * 255.0), 0, 255)
    fb.color[:, :] = rgba.astype(np.uint8)
    fb.depth[:, :] = 1.0


def draw_background(fb: Framebuffer, image: np.ndarray) -> None:
    """Scale an image over the whole viewport without touching depth.

    Functionally the orthographic screen-quad path with z-test and z-write
    disabled: anything drawn afterwards wins visibility regardless of its
    depth.  An image already at viewport size is copied pixel-exactly.
    """
    img = np.asarray(image)
    src_h, src_w = img.shape[:2]
    if (src_h, src_w) == (fb.height, fb.width):
        fb.color[:, :, : img.shape[2]] = img
        return
    scale_x = src_w / fb.width
    scale_y = src_h / fb.height
    xs = (np.arange(fb.width, dtype=np.float64) + 0.5) * scale_x - 0.5
    ys = (np.arange(fb.height, dtype=np.float64) + 0.5) * scale_y - 0.5
    samples = bilinear_sample(img, xs[None, :].repeat(fb.height, axis=0), ys[:, None].repeat(fb.width, axis=1))
    fb.color[:, :, : img.shape[2]] = np.clip(np.round(samples), 0, 255).astype(np.uint8)


def _sample_texture_arrays(texture: MaterialTexture, u, v, mode: str = "bilinear") -> np.ndarray:
    """Sample with repeat wrapping; returns float RGBA in [0, 1]."""
    w, h = texture.width, texture.height
    px = texture.pixels
    uu = u - np.floor(u)
    vv = v - np.floor(v)
    if mode == "nearest":
        ix = np.minimum(np.floor(uu * w).astype(np.int64), w - 1)
        iy = np.minimum(np.floor(vv * h).astype(np.int64), h - 1)
        return px[iy, ix].astype(np.float64) / 255.0
    if mode != "bilinear":
        raise ValueError(f"unknown sampling mode {mode!r}")
    tx = uu * w - 0.5
    ty = vv * h - 0.5
    ix0 = np.floor(tx).astype(np.int64)
    iy0 = np.floor(ty).astype(np.int64)
    fx = (tx - ix0)[..., None]
    fy = (ty - iy0)[..., None]
    ix0m = ix0 % w
    ix1m = (ix0 + 1) % w
    iy0m = iy0 % h
    iy1m = (iy0 + 1) % h
    pf = px.astype(np.float64)
    top = pf[iy0m, ix0m] * (1.0 - fx) + pf[iy0m, ix1m] * fx
    bot = pf[iy1m, ix0m] * (1.0 - fx) + pf[iy1m, ix1m] * fx
    return (top * (1.0 - fy) + bot * fy) / 255.0


def sample_texture(texture: MaterialTexture, uv: tuple[float, float], mode: str = "bilinear"):
    """Sample one texel (repeat wrap); returns an RGBA tuple in [0, 1]."""
    res = _sample_texture_arrays(texture, np.float64(uv[0]), np.float64(uv[1]), mode)
    return tuple(float(c) for c in res)


def _shade_texels(texels: np.ndarray, nx, ny, nz, light: Light) -> np.ndarray:
    """Lambertian shading of float texels; normals are renormalized here.

    The diffuse irradiance is applied directly (the 1/pi of the ideal
    diffuse reflector is folded into the light color, so a (1,1,1) light
    gives full brightness at normal incidence).
    """
    s = -light.direction
    ln = np.sqrt(nx * nx + ny * ny + nz * nz)
    safe = np.where(ln > 0.0, ln, 1.0)
    ndots = (nx * s.x + ny * s.y + nz * s.z) / safe
    ndots = np.maximum(ndots, 0.0)
    amb = np.asarray(light.ambient, dtype=np.float64)
    dif = np.asarray(light.diffuse, dtype=np.float64)
    rgb = texels[..., :3] * (amb + dif * ndots[..., None])
    rgb = np.clip(rgb, 0.0, 1.0)
    alpha = np.clip(texels[..., 3:], 0.0, 1.0)
    return np.concatenate([rgb, alpha], axis=-1)


def shade_fragment(frag: FragmentInput, texture: MaterialTexture, light: Light):
    """Shade one fragment: ``texel * (ambient + diffuse * max(n.s, 0))``.

    Channels clamp to [0, 1]; a back-facing normal leaves only the
    ambient term.  Returns an RGBA tuple.
    """
    texel = np.array(sample_texture(texture, frag.uv, "bilinear"), dtype=np.float64)
    n = frag.normal
    out = _shade_texels(
        texel[None, :],
        np.float64([n.x]),
        np.float64([n.y]),
        np.float64([n.z]),
        light,
    )[0]
    return tuple(float(c) for c in out)


def _is_top_left(ax, ay, bx, by) -> bool:
    # For edges whose positive side is the triangle interior (y grows down):
    # a horizontal edge with dx > 0 runs along the top; dy < 0 marks a left edge.
    dx = bx - ax
    dy = by - ay
    return (dy == 0.0 and dx > 0.0) or dy < 0.0


def _clip_near(verts: list[tuple[np.ndarray, np.ndarray, np.ndarray]]):
    """Sutherland-Hodgman clip of a polygon against the z=0 clip plane."""
    out = []
    n = len(verts)
    for i in range(n):
        cur = verts[i]
        nxt = verts[(i + 1) % n]
        cz = cur[0][2]
        nz = nxt[0][2]
        cur_in = cz >= 0.0
        nxt_in = nz >= 0.0
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = cz / (cz - nz)
            out.append(tuple(a + (b - a) * t for a, b in zip(cur, nxt)))
    return out


def rasterize_mesh(
    fb: Framebuffer,
    mesh: Mesh,
    texture: MaterialTexture,
    mvp: tuple[Mat4, Mat4, Mat4],
    light: Light,
) -> None:
    """Transform, clip, rasterize and shade a mesh into the framebuffer.

    ``mvp`` is the (model, view, projection) triple; vertices go through
    the composed row-vector product.  Triangles entirely outside any
    frustum plane are rejected; those crossing the near plane are clipped;
    the remaining side planes rely on viewport scissoring plus a
    per-fragment depth window.  Depth test is strict less-than, so the
    earlier fragment wins ties.  Backfaces are not culled.
    """
    model, view, proj = mvp
    combined = model.a @ view.a @ proj.a
    nrm_to_world = np.linalg.inv(model.a[:3, :3])

    n = mesh.positions.shape[0]
    hom = np.concatenate([mesh.positions, np.ones((n, 1))], axis=1)
    clip = hom @ combined
    world_n = mesh.normals @ nrm_to_world

    for tri in mesh.indices:
        c = clip[tri]
        x, y, z, w = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        # trivial rejection: all three vertices beyond one frustum plane
        if (
            np.all(x < -w) or np.all(x > w)
            or np.all(y < -w) or np.all(y > w)
            or np.all(z < 0) or np.all(z > w)
        ):
            continue
        poly = [(c[i], mesh.uvs[tri[i]], world_n[tri[i]]) for i in range(3)]
        if np.any(z < 0):
            poly = _clip_near(poly)
        for k in range(1, len(poly) - 1):
            _raster_clip_triangle(fb, (poly[0], poly[k], poly[k + 1]), texture, light)


def _raster_clip_triangle(fb, tri, texture: MaterialTexture, light: Light) -> None:
    cpos = np.stack([v[0] for v in tri])
    uv = np.stack([v[1] for v in tri])
    nrm = np.stack([v[2] for v in tri])
    wc = cpos[:, 3]
    if np.any(wc <= 0.0):
        return
    ndc = cpos[:, :3] / wc[:, None]
    sx = (ndc[:, 0] + 1.0) * 0.5 * fb.width
    sy = (1.0 - ndc[:, 1]) * 0.5 * fb.height
    sz = ndc[:, 2]

    area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0])
    if area == 0.0:
        return
    if area < 0.0:
        order = np.array([0, 2, 1])
        sx, sy, sz = sx[order], sy[order], sz[order]
        wc, uv, nrm = wc[order], uv[order], nrm[order]
        area = -area

    ix0 = max(0, int(np.ceil(sx.min() - 0.5)))
    ix1 = min(fb.width - 1, int(np.floor(sx.max() - 0.5)))
    iy0 = max(0, int(np.ceil(sy.min() - 0.5)))
    iy1 = min(fb.height - 1, int(np.floor(sy.max() - 0.5)))
    if ix0 > ix1 or iy0 > iy1:
        return

    px = np.arange(ix0, ix1 + 1, dtype=np.float64) + 0.5
    py = np.arange(iy0, iy1 + 1, dtype=np.float64) + 0.5
    pxg = px[None, :]
    pyg = py[:, None]

    w0 = (sx[2] - sx[1]) * (pyg - sy[1]) - (sy[2] - sy[1]) * (pxg - sx[1])
    w1 = (sx[0] - sx[2]) * (pyg - sy[2]) - (sy[0] - sy[2]) * (pxg - sx[2])
    w2 = (sx[1] - sx[0]) * (pyg - sy[0]) - (sy[1] - sy[0]) * (pxg - sx[0])

    tl0 = _is_top_left(sx[1], sy[1], sx[2], sy[2])
    tl1 = _is_top_left(sx[2], sy[2], sx[0], sy[0])
    tl2 = _is_top_left(sx[0], sy[0], sx[1], sy[1])
    cover = (
        ((w0 > 0.0) | ((w0 == 0.0) & tl0))
        & ((w1 > 0.0) | ((w1 == 0.0) & tl1))
        & ((w2 > 0.0) | ((w2 == 0.0) & tl2))
    )
    if not cover.any():
        return

    b0 = w0 / area
    b1 = w1 / area
    b2 = w2 / area
    zf = b0 * sz[0] + b1 * sz[1] + b2 * sz[2]
    cover &= (zf >= 0.0) & (zf <= 1.0)

    depth_region = fb.depth[iy0 : iy1 + 1, ix0 : ix1 + 1]
    color_region = fb.color[iy0 : iy1 + 1, ix0 : ix1 + 1]
    cover &= zf < depth_region
    if not cover.any():
        return

    cb0, cb1, cb2 = b0[cover], b1[cover], b2[cover]
    inv_w = 1.0 / wc
    denom = cb0 * inv_w[0] + cb1 * inv_w[1] + cb2 * inv_w[2]

    def _interp(attr):
        return (
            cb0 * attr[0] * inv_w[0] + cb1 * attr[1] * inv_w[1] + cb2 * attr[2] * inv_w[2]
        ) / denom

    u = _interp(uv[:, 0])
    v = _interp(uv[:, 1])
    nx = _interp(nrm[:, 0])
    ny = _interp(nrm[:, 1])
    nz = _interp(nrm[:, 2])

    texels = _sample_texture_arrays(texture, u, v, "bilinear")
    rgba = _shade_texels(texels, nx, ny, nz, light)
    depth_region[cover] = zf[cover]
    color_region[cover] = np.clip(np.round(rgba * 255.0), 0, 255).astype(np.uint8)
