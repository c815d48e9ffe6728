"""PBR material baking between textured meshes and voxel attributes.

Baking samples texture maps at voxel-center projections onto intersecting
triangles, averaged with point-to-surface distance weights; queries go the
other way via trilinear interpolation over active voxel centers.

Texture conventions follow glTF: base color is sRGB-encoded RGBA,
metallic-roughness is linear with roughness in G and metallic in B.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .grid import OVoxelGrid
from .meshdata import MaterialSpec, TriangleMesh
from .metrics import BvhMesh, closest_point_on_triangles

SQRT3 = float(np.sqrt(3.0))


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.clip(np.asarray(c, dtype=np.float64), 0.0, 1.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _box_mip(img: np.ndarray) -> np.ndarray:
    """Box-filtered half-resolution level (floor halving, min size 1)."""
    h, w = img.shape[:2]
    nh, nw = max(1, h // 2), max(1, w // 2)
    img = img[: nh * 2, : nw * 2] if (h > 1 and w > 1) else img
    if h > 1 and w > 1:
        return 0.25 * (
            img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2]
        )
    if h > 1:
        return 0.5 * (img[0 : nh * 2 : 2] + img[1 : nh * 2 : 2])
    if w > 1:
        return 0.5 * (img[:, 0 : nw * 2 : 2] + img[:, 1 : nw * 2 : 2])
    return img.copy()


def build_mip_chain(img: np.ndarray) -> list[np.ndarray]:
    chain = [np.asarray(img, dtype=np.float64)]
    while chain[-1].shape[0] > 1 or chain[-1].shape[1] > 1:
        chain.append(_box_mip(chain[-1]))
    return chain


class TextureSet:
    """Linear-space texture images with precomputed box-filtered mips.

    ``base_color`` is (H, W, 4) already sRGB-decoded; ``metallic_roughness``
    is (H, W, >=3) linear with roughness in channel 1 (G) and metallic in
    channel 2 (B), per glTF packing."""

    def __init__(
        self,
        base_color: np.ndarray | None = None,
        metallic_roughness: np.ndarray | None = None,
    ) -> None:
        self.base_color_mips = (
            build_mip_chain(base_color) if base_color is not None else None
        )
        self.mr_mips = (
            build_mip_chain(metallic_roughness)
            if metallic_roughness is not None
            else None
        )

    @classmethod
    def from_srgb_images(
        cls,
        base_color_srgb: np.ndarray | None,
        metallic_roughness: np.ndarray | None = None,
    ) -> "TextureSet":
        base = None
        if base_color_srgb is not None:
            img = np.asarray(base_color_srgb, dtype=np.float64)
            if img.ndim == 2:
                img = img[:, :, None].repeat(3, axis=2)
            if img.shape[2] == 3:
                img = np.concatenate([img, np.ones(img.shape[:2] + (1,))], axis=2)
            img = img.copy()
            img[:, :, :3] = srgb_to_linear(img[:, :, :3])
            base = img
        return cls(base, metallic_roughness)


@dataclass
class MaterialSample:
    attributes: np.ndarray  # (6,) rgb, metallic, roughness, opacity
    weight: float

    def __post_init__(self) -> None:
        if not self.weight > 0.0:
            raise ValueError("sample weight must be positive")


def project_point_to_triangle(
    p: np.ndarray, triangle: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closest point on the closed triangle and its barycentric coords.

    Degenerate triangles project onto their longest edge segment.
    """
    p = np.asarray(p, dtype=np.float64)
    tri = np.asarray(triangle, dtype=np.float64).reshape(3, 3)
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    if np.linalg.norm(n) < 1e-16:
        edges = [(0, 1), (1, 2), (2, 0)]
        lens = [np.linalg.norm(tri[b] - tri[a]) for a, b in edges]
        a, b = edges[int(np.argmax(lens))]
        d = tri[b] - tri[a]
        denom = float(d @ d)
        t = 0.0 if denom == 0.0 else float(np.clip((p - tri[a]) @ d / denom, 0.0, 1.0))
        q = tri[a] + t * d
        bary = np.zeros(3)
        bary[a], bary[b] = 1.0 - t, t
        return q, bary
    q = closest_point_on_triangles(
        p[None, :], tri[None, 0], tri[None, 1], tri[None, 2]
    )[0]
    bary = barycentric_coords(q[None, :], tri[None, :, :])[0]
    return q, np.clip(bary, 0.0, 1.0)


def barycentric_coords(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of (M, 3) points w.r.t. (M, 3, 3) triangles."""
    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    v0 = b - a
    v1 = c - a
    v2 = points - a
    d00 = (v0 * v0).sum(axis=1)
    d01 = (v0 * v1).sum(axis=1)
    d11 = (v1 * v1).sum(axis=1)
    d20 = (v2 * v0).sum(axis=1)
    d21 = (v2 * v1).sum(axis=1)
    denom = d00 * d11 - d01 * d01
    with np.errstate(invalid="ignore", divide="ignore"):
        v = (d11 * d20 - d01 * d21) / denom
        w = (d00 * d21 - d01 * d20) / denom
    v = np.where(np.isfinite(v), v, 1.0 / 3.0)
    w = np.where(np.isfinite(w), w, 1.0 / 3.0)
    return np.stack([1.0 - v - w, v, w], axis=1)


def mip_level(
    area_world: float, area_uv: float, voxel_size: float, tex_dim: int
) -> float:
    """Mip whose texel footprint roughly matches one voxel.

    Zero UV area degrades to level 0 (callers may count it).
    """
    if area_uv <= 0.0 or area_world <= 0.0:
        return 0.0
    return max(
        0.0, float(np.log2(voxel_size * tex_dim * np.sqrt(area_uv / area_world)))
    )


def sample_bilinear(mips: list[np.ndarray], uv: np.ndarray, level: np.ndarray):
    """Bilinear sample at integer-rounded mip levels, repeat addressing."""
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    lvl = np.clip(np.rint(np.asarray(level, dtype=np.float64)), 0, len(mips) - 1)
    lvl = lvl.astype(np.int64)
    if lvl.ndim == 0:
        lvl = np.full(len(uv), int(lvl))
    out = np.empty((len(uv), mips[0].shape[2]))
    for lv in np.unique(lvl):
        img = mips[lv]
        h, w = img.shape[:2]
        rows = lvl == lv
        px = uv[rows, 0] * w - 0.5
        py = uv[rows, 1] * h - 0.5
        x0 = np.floor(px).astype(np.int64)
        y0 = np.floor(py).astype(np.int64)
        fx = px - x0
        fy = py - y0
        x0m, x1m = x0 % w, (x0 + 1) % w
        y0m, y1m = y0 % h, (y0 + 1) % h
        out[rows] = (
            img[y0m, x0m] * ((1 - fx) * (1 - fy))[:, None]
            + img[y0m, x1m] * (fx * (1 - fy))[:, None]
            + img[y1m, x0m] * ((1 - fx) * fy)[:, None]
            + img[y1m, x1m] * (fx * fy)[:, None]
        )
    return out


def tri_box_overlap(
    tri: np.ndarray, box_centers: np.ndarray, half: float
) -> np.ndarray:
    """Vectorized triangle / axis-aligned-cube separating-axis test.

    ``tri`` is (M, 3, 3), ``box_centers`` (M, 3); returns (M,) bool.
    """
    v = tri - box_centers[:, None, :]
    ok = np.ones(len(v), dtype=bool)

    # box face normals
    for a in range(3):
        ok &= (v[:, :, a].min(axis=1) <= half) & (v[:, :, a].max(axis=1) >= -half)

    # triangle plane
    e0 = v[:, 1] - v[:, 0]
    e1 = v[:, 2] - v[:, 1]
    e2 = v[:, 0] - v[:, 2]
    n = np.cross(e0, e1)
    dist = (n * v[:, 0]).sum(axis=1)
    ok &= np.abs(dist) <= half * np.abs(n).sum(axis=1) + 1e-15

    # 9 edge cross-product axes
    for edge in (e0, e1, e2):
        for a in range(3):
            axis = np.zeros_like(edge)
            b, c = (a + 1) % 3, (a + 2) % 3
            axis[:, b] = -edge[:, c]
            axis[:, c] = edge[:, b]
            proj = (v * axis[:, None, :]).sum(axis=2)
            rad = half * np.abs(axis).sum(axis=1)
            ok &= (proj.min(axis=1) <= rad + 1e-15) & (
                proj.max(axis=1) >= -rad - 1e-15
            )
    return ok


@dataclass
class BakeConfig:
    w_min: float = 0.1
    literal_weights: bool = False  # raw w = 1 - d instead of diagonal-normalized


@dataclass
class BakeReport:
    fallback_voxels: int = 0
    zero_uv_triangles: int = 0
    sampled_pairs: int = 0


def _sample_triangles(
    mesh: TriangleMesh,
    tri_idx: np.ndarray,
    bary: np.ndarray,
    voxel_size: float,
    report: BakeReport,
) -> np.ndarray:
    """Per-sample 6-channel attributes for points given by (triangle,
    barycentric) pairs, honoring per-material textures and factors."""
    out = np.empty((len(tri_idx), 6))
    mat_ids = (
        mesh.material_ids
        if mesh.material_ids is not None
        else np.zeros(len(mesh.faces), dtype=np.int64)
    )
    materials = mesh.materials if mesh.materials else [MaterialSpec()]
    areas = mesh.triangle_areas()

    sample_mats = mat_ids[tri_idx]
    for mid in np.unique(sample_mats):
        rows = np.flatnonzero(sample_mats == mid)
        spec = materials[mid] if 0 <= mid < len(materials) else MaterialSpec()
        base = np.empty((len(rows), 4))
        base[:] = spec.base_color_factor
        mr = np.empty((len(rows), 2))
        mr[:, 0] = spec.metallic_factor
        mr[:, 1] = spec.roughness_factor

        tex: TextureSet | None = spec.textures
        if tex is not None and mesh.uvs is not None:
            t = tri_idx[rows]
            uv_corners = mesh.uvs[t]  # (K, 3, 2)
            uv = (bary[rows, :, None] * uv_corners).sum(axis=1)
            duv1 = uv_corners[:, 1] - uv_corners[:, 0]
            duv2 = uv_corners[:, 2] - uv_corners[:, 0]
            area_uv = 0.5 * np.abs(duv1[:, 0] * duv2[:, 1] - duv1[:, 1] * duv2[:, 0])
            report.zero_uv_triangles += int((area_uv <= 0.0).sum())
            if tex.base_color_mips is not None:
                dim = max(tex.base_color_mips[0].shape[:2])
                lvl = _mip_levels(areas[t], area_uv, voxel_size, dim)
                base *= sample_bilinear(tex.base_color_mips, uv, lvl)
            if tex.mr_mips is not None:
                dim = max(tex.mr_mips[0].shape[:2])
                lvl = _mip_levels(areas[t], area_uv, voxel_size, dim)
                mr_tex = sample_bilinear(tex.mr_mips, uv, lvl)
                mr[:, 0] *= mr_tex[:, 2]  # metallic: B channel
                mr[:, 1] *= mr_tex[:, 1]  # roughness: G channel

        out[rows, 0:3] = base[:, 0:3]
        out[rows, 3] = mr[:, 0]
        out[rows, 4] = mr[:, 1]
        out[rows, 5] = base[:, 3]
    return np.clip(out, 0.0, 1.0)


def _mip_levels(area_world, area_uv, voxel_size, tex_dim):
    lvl = np.zeros(len(area_world))
    good = (area_uv > 0.0) & (area_world > 0.0)
    lvl[good] = np.maximum(
        0.0,
        np.log2(voxel_size * tex_dim * np.sqrt(area_uv[good] / area_world[good])),
    )
    return lvl


def bake_materials(
    mesh: TriangleMesh,
    grid: OVoxelGrid,
    config: BakeConfig | None = None,
    report: BakeReport | None = None,
) -> OVoxelGrid:
    """Attach a MaterialFeature to every active voxel of a shape grid.

    The mesh is mapped through the grid's stored normalization, so pass
    the same mesh the grid was voxelized from.
    """
    if config is None:
        config = BakeConfig()
    if report is None:
        report = BakeReport()
    if len(grid) == 0:
        return grid
    n_grid = grid.resolution
    voxel_size = 1.0 / n_grid
    mesh_n = mesh.transformed(grid.transform)
    corners = mesh_n.triangle_corners()

    # candidate (triangle, voxel) pairs from triangle bounding boxes
    lo = np.clip(np.floor(corners.min(axis=1) * n_grid - 1e-12), 0, n_grid - 1)
    hi = np.clip(np.floor(corners.max(axis=1) * n_grid + 1e-12), 0, n_grid - 1)
    lo = lo.astype(np.int64)
    hi = hi.astype(np.int64)
    spans = hi - lo + 1
    counts = spans.prod(axis=1)
    total = int(counts.sum())
    rep = np.repeat(np.arange(len(corners)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - np.repeat(starts, counts)
    nyz = spans[rep, 1] * spans[rep, 2]
    vi = lo[rep, 0] + local // nyz
    rem = local % nyz
    vj = lo[rep, 1] + rem // spans[rep, 2]
    vk = lo[rep, 2] + rem % spans[rep, 2]
    vox = np.stack([vi, vj, vk], axis=1)

    row = grid.lookup(vox)
    keep = row >= 0
    rep, vox, row = rep[keep], vox[keep], row[keep]
    centers = (vox + 0.5) * voxel_size
    hit = tri_box_overlap(corners[rep], centers, 0.5 * voxel_size)
    rep, vox, row, centers = rep[hit], vox[hit], row[hit], centers[hit]
    report.sampled_pairs = len(rep)

    q = closest_point_on_triangles(
        centers, corners[rep, 0], corners[rep, 1], corners[rep, 2]
    )
    bary = np.clip(barycentric_coords(q, corners[rep]), 0.0, 1.0)
    d = np.linalg.norm(centers - q, axis=1)
    if config.literal_weights:
        w = np.maximum(config.w_min, 1.0 - d)
    else:
        w = np.maximum(config.w_min, 1.0 - d / (SQRT3 * voxel_size))

    attrs = _sample_triangles(mesh_n, rep, bary, voxel_size, report)

    material = np.zeros((len(grid), 6))
    wsum = np.zeros(len(grid))
    order = np.lexsort((rep, row))
    row_s, w_s, attrs_s = row[order], w[order], attrs[order]
    seg = np.concatenate([[0], np.flatnonzero(np.diff(row_s)) + 1])
    rows_u = row_s[seg]
    material[rows_u] = np.add.reduceat(w_s[:, None] * attrs_s, seg, axis=0)
    wsum[rows_u] = np.add.reduceat(w_s, seg)

    covered = wsum > 0.0
    material[covered] /= wsum[covered, None]

    missing = np.flatnonzero(~covered)
    report.fallback_voxels = len(missing)
    if len(missing):
        bvh = BvhMesh(mesh_n)
        centers_m = (grid.coords[missing] + 0.5) * voxel_size
        _, q_m, tri_m = bvh.closest_points(centers_m)
        bary_m = np.clip(barycentric_coords(q_m, corners[tri_m]), 0.0, 1.0)
        material[missing] = _sample_triangles(
            mesh_n, tri_m, bary_m, voxel_size, report
        )

    return OVoxelGrid(
        grid.resolution,
        grid.coords,
        grid.dual_vertices,
        grid.edge_flags,
        grid.split_weights,
        material=np.clip(material, 0.0, 1.0),
        transform=grid.transform,
        edge_normal_keys=grid._edge_normal_keys,
        edge_normals=grid._edge_normals,
    )


def query_material(grid: OVoxelGrid, points: np.ndarray) -> np.ndarray:
    """Trilinear material lookup at world positions.

    Inactive neighbors are dropped with weight renormalization; an
    all-inactive neighborhood falls back to the nearest active voxel.
    """
    if grid.material is None:
        raise ValueError("grid carries no material features")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n_grid = grid.resolution
    g = grid.transform.apply(points) * n_grid - 0.5
    base = np.floor(g).astype(np.int64)
    frac = g - base

    acc = np.zeros((len(points), 6))
    wsum = np.zeros(len(points))
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                nb = base + np.array([dx, dy, dz])
                wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
                wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
                wz = frac[:, 2] if dz else 1.0 - frac[:, 2]
                w = wx * wy * wz
                row = grid.lookup(nb)
                ok = (row >= 0) & (w > 0.0)
                acc[ok] += w[ok, None] * grid.material[row[ok]]
                wsum[ok] += w[ok]

    out = np.zeros((len(points), 6))
    good = wsum > 0.0
    out[good] = acc[good] / wsum[good, None]
    if np.any(~good):
        tree = cKDTree(grid.voxel_centers())
        _, nearest = tree.query(grid.transform.apply(points[~good]))
        out[~good] = grid.material[nearest]
    return out


def bake_vertex_colors(mesh: TriangleMesh, grid: OVoxelGrid) -> np.ndarray:
    """Per-vertex 6-channel attributes, in mesh vertex order."""
    return query_material(grid, mesh.vertices)


def bake_texture_map(
    mesh: TriangleMesh,
    grid: OVoxelGrid,
    resolution: int,
    dilation_passes: int = 4,
) -> dict[str, np.ndarray]:
    """Rasterize voxel materials into texture maps over the mesh's UV atlas.

    Returns linear-space float images: 'base_color' (R, R, 4),
    'metallic_roughness' (R, R, 3) and the bool 'coverage' mask.
    Uncovered texels are filled by dilation from covered neighbors.
    """
    if mesh.uvs is None:
        raise ValueError("bake_texture_map requires a UV atlas on the mesh")
    res = resolution
    buffer = np.zeros((res, res, 6))
    covered = np.zeros((res, res), dtype=bool)

    uvs = mesh.uvs
    verts = mesh.triangle_corners()
    for t in range(len(uvs)):
        uv = uvs[t]
        px = uv[:, 0] * res - 0.5
        py = uv[:, 1] * res - 0.5
        x0 = int(np.floor(px.min())), int(np.ceil(px.max()))
        y0 = int(np.floor(py.min())), int(np.ceil(py.max()))
        xs = np.arange(max(x0[0], 0), min(x0[1], res - 1) + 1)
        ys = np.arange(max(y0[0], 0), min(y0[1], res - 1) + 1)
        if len(xs) == 0 or len(ys) == 0:
            continue
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        cx = gx.ravel() + 0.0
        cy = gy.ravel() + 0.0
        e0 = (px[1] - px[0]) * (cy - py[0]) - (py[1] - py[0]) * (cx - px[0])
        e1 = (px[2] - px[1]) * (cy - py[1]) - (py[2] - py[1]) * (cx - px[1])
        e2 = (px[0] - px[2]) * (cy - py[2]) - (py[0] - py[2]) * (cx - px[2])
        area = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0])
        if abs(area) < 1e-14:
            continue
        inside = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | (
            (e0 <= 0) & (e1 <= 0) & (e2 <= 0)
        )
        if not np.any(inside):
            continue
        l2 = e0[inside] / area
        l0 = e1[inside] / area
        l1 = e2[inside] / area
        surf = (
            l0[:, None] * verts[t, 0]
            + l1[:, None] * verts[t, 1]
            + l2[:, None] * verts[t, 2]
        )
        vals = query_material(grid, surf)
        buffer[gx.ravel()[inside], gy.ravel()[inside]] = vals
        covered[gx.ravel()[inside], gy.ravel()[inside]] = True

    for _ in range(dilation_passes):
        if covered.all():
            break
        shifted_vals = np.zeros_like(buffer)
        shifted_cnt = np.zeros(covered.shape)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                rolled_c = np.roll(np.roll(covered, dx, axis=0), dy, axis=1)
                rolled_v = np.roll(np.roll(buffer, dx, axis=0), dy, axis=1)
                shifted_vals += np.where(rolled_c[:, :, None], rolled_v, 0.0)
                shifted_cnt += rolled_c
        fill = ~covered & (shifted_cnt > 0)
        buffer[fill] = shifted_vals[fill] / shifted_cnt[fill, None]
        covered |= fill

    base = np.concatenate([buffer[:, :, 0:3], buffer[:, :, 5:6]], axis=2)
    mr = np.zeros(buffer.shape[:2] + (3,))
    mr[:, :, 1] = buffer[:, :, 4]  # roughness -> G
    mr[:, :, 2] = buffer[:, :, 3]  # metallic -> B
    return {"base_color": base, "metallic_roughness": mr, "coverage": covered}
