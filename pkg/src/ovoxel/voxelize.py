"""Mesh-to-voxel shape conversion.

Hermite data (edge/surface intersection points + geometric normals) is
extracted per grid edge, accumulated into per-voxel quadratic error
functions with three terms (surface planes, open-boundary lines, centroid
regularization), and minimized in closed form over each voxel cube.

All accumulation happens in the voxel-local [0,1]^3 frame to limit
floating-point cancellation; per-voxel contributions are merged in
triangle-index order so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    EDGE_NEIGHBOR_OFFSETS,
    GridEdge,
    OVoxelGrid,
    VoxelCoord,
    WorldTransform,
    pack_coords,
    unpack_coords,
)
from .meshdata import TriangleMesh, check_in_frame, normalization_transform

EDGE_KEY_AXIS_SHIFT = 50
DEGENERATE_AREA_EPS = 1e-16


@dataclass
class VoxelizeConfig:
    resolution: int = 64
    lambda_bound: float = 1.0
    lambda_reg: float = 1e-3
    intersection_eps: float = 1e-9  # world units, grid-plane tie tolerance
    normalize: bool = True

    def __post_init__(self) -> None:
        if self.resolution < 1:
            raise ValueError("resolution must be positive")
        if self.lambda_bound < 0.0:
            raise ValueError("lambda_bound must be nonnegative")
        if not self.lambda_reg > 0.0:
            raise ValueError("lambda_reg must be positive (conditions the QEF)")


@dataclass
class HermiteSample:
    point: np.ndarray  # (3,) world units, on a grid edge
    normal: np.ndarray  # (3,) unit vector

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=np.float64)
        self.normal = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-6:
            raise ValueError("hermite normal must be unit length")


@dataclass
class QefAccumulator:
    """Symmetric quadratic form e(v) = v'Av - 2b'v + c, plus the running
    mean of surface intersection points."""

    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c: float = 0.0
    point_sum: np.ndarray = field(default_factory=lambda: np.zeros(3))
    point_count: int = 0

    def evaluate(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.float64)
        return float(v @ self.A @ v - 2.0 * self.b @ v + self.c)

    @property
    def q_bar(self) -> np.ndarray:
        if self.point_count == 0:
            return np.full(3, 0.5)
        return self.point_sum / self.point_count


def add_plane_term(acc: QefAccumulator, q: np.ndarray, n: np.ndarray) -> QefAccumulator:
    """Add the squared distance to the plane through q with unit normal n."""
    q = np.asarray(q, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    d = float(n @ q)
    acc.A += np.outer(n, n)
    acc.b += d * n
    acc.c += d * d
    acc.point_sum += q
    acc.point_count += 1
    return acc


def add_line_term(
    acc: QefAccumulator, o: np.ndarray, d: np.ndarray, lambda_bound: float
) -> QefAccumulator:
    """Add the squared distance to the line through o with unit direction d."""
    o = np.asarray(o, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    proj = np.eye(3) - np.outer(d, d)
    acc.A += lambda_bound * proj
    acc.b += lambda_bound * (proj @ o)
    acc.c += lambda_bound * float(o @ proj @ o)
    return acc


def add_point_term(
    acc: QefAccumulator, q_bar: np.ndarray, lambda_reg: float
) -> QefAccumulator:
    """Add the centroid regularizer lambda_reg * |v - q_bar|^2."""
    q_bar = np.asarray(q_bar, dtype=np.float64)
    acc.A += lambda_reg * np.eye(3)
    acc.b += lambda_reg * q_bar
    acc.c += lambda_reg * float(q_bar @ q_bar)
    return acc


def _solve_reduced(A: np.ndarray, b: np.ndarray, free: list[int], fixed_val: np.ndarray):
    """Minimize the quadratic over the free coordinates with others fixed."""
    x = fixed_val.copy()
    if free:
        f = np.array(free)
        g = np.array([i for i in range(3) if i not in free], dtype=np.int64)
        rhs = b[f]
        if len(g):
            rhs = rhs - A[np.ix_(f, g)] @ fixed_val[g]
        try:
            x[f] = np.linalg.solve(A[np.ix_(f, f)], rhs)
        except np.linalg.LinAlgError:
            x[f] = np.linalg.lstsq(A[np.ix_(f, f)], rhs, rcond=None)[0]
    return x


def solve_box_qef(A: np.ndarray, b: np.ndarray, c: float = 0.0) -> np.ndarray:
    """Exact minimizer of v'Av - 2b'v + c over the unit cube.

    Enumerates the 27 face/edge/corner configurations; cheap for a single
    3x3 system and only invoked when the unconstrained solution leaves
    the cube.
    """
    best_v = None
    best_e = np.inf
    for cfg_x in (None, 0.0, 1.0):
        for cfg_y in (None, 0.0, 1.0):
            for cfg_z in (None, 0.0, 1.0):
                cfg = (cfg_x, cfg_y, cfg_z)
                free = [i for i in range(3) if cfg[i] is None]
                fixed = np.array([0.0 if v is None else v for v in cfg])
                x = _solve_reduced(A, b, free, fixed)
                if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
                    continue
                x = np.clip(x, 0.0, 1.0)
                e = float(x @ A @ x - 2.0 * b @ x + c)
                if e < best_e - 1e-15:
                    best_e = e
                    best_v = x
    if best_v is None:  # numerically impossible with the point term present
        best_v = np.clip(np.linalg.lstsq(A, b, rcond=None)[0], 0.0, 1.0)
    return best_v


def solve_qef(acc: QefAccumulator) -> np.ndarray:
    """Dual vertex in local [0,1]^3 coordinates minimizing e over the voxel.

    Requires the point term (positive definite A). A non-finite solve
    falls back to the clamped intersection centroid.
    """
    try:
        v = np.linalg.solve(acc.A, acc.b)
    except np.linalg.LinAlgError:
        v = np.full(3, np.nan)
    if not np.all(np.isfinite(v)):
        return np.clip(acc.q_bar, 0.0, 1.0)
    if np.all((v >= 0.0) & (v <= 1.0)):
        return v
    return solve_box_qef(acc.A, acc.b, acc.c)


@dataclass
class EdgeIntersections:
    """Flat arrays of Hermite samples, one row per (edge, crossing)."""

    resolution: int
    axes: np.ndarray  # (M,) int8
    bases: np.ndarray  # (M, 3) int64
    points: np.ndarray  # (M, 3) float64, normalized world frame
    normals: np.ndarray  # (M, 3) float64, unit
    tri_indices: np.ndarray  # (M,) int64
    degenerate_count: int = 0

    def __len__(self) -> int:
        return len(self.axes)

    def edge_keys(self) -> np.ndarray:
        return (self.axes.astype(np.int64) << EDGE_KEY_AXIS_SHIFT) | pack_coords(
            self.bases
        )

    def as_map(self) -> dict[GridEdge, list[HermiteSample]]:
        out: dict[GridEdge, list[HermiteSample]] = {}
        for a, base, p, n in zip(self.axes, self.bases, self.points, self.normals):
            edge = GridEdge(VoxelCoord(*map(int, base)), int(a))
            out.setdefault(edge, []).append(HermiteSample(p.copy(), n.copy()))
        return out


def find_edge_intersections(
    mesh: TriangleMesh, resolution: int, eps: float = 1e-9
) -> EdgeIntersections:
    """All (grid edge, triangle) surface crossings, with Hermite data.

    The mesh must already live in the normalized [0,1]^3 frame. An
    intersection within ``eps`` of a grid plane along the edge axis is
    assigned to the lower-index edge, so each geometric crossing yields
    exactly one deterministic sample.
    """
    n_grid = resolution
    corners = mesh.triangle_corners()  # (F, 3, 3)
    raw_normals = np.cross(
        corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]
    )
    area2 = np.linalg.norm(raw_normals, axis=1)
    valid = area2 > DEGENERATE_AREA_EPS
    degenerate = int(np.count_nonzero(~valid))

    axes_out: list[np.ndarray] = []
    bases_out: list[np.ndarray] = []
    points_out: list[np.ndarray] = []
    normals_out: list[np.ndarray] = []
    tris_out: list[np.ndarray] = []

    tri_ids_all = np.flatnonzero(valid)
    for axis in range(3):
        bx, cx = (axis + 1) % 3, (axis + 2) % 3
        # Lattice lines parallel to `axis` pierce the triangle where the
        # projected (b, c) lattice point lies inside the projected triangle.
        na = raw_normals[tri_ids_all, axis]
        usable = np.abs(na) > DEGENERATE_AREA_EPS
        tri_ids = tri_ids_all[usable]
        if len(tri_ids) == 0:
            continue
        tri_p = corners[tri_ids]
        u = tri_p[:, :, bx]
        w = tri_p[:, :, cx]
        jb0 = np.ceil(u.min(axis=1) * n_grid - 1e-12).astype(np.int64)
        jb1 = np.floor(u.max(axis=1) * n_grid + 1e-12).astype(np.int64)
        jc0 = np.ceil(w.min(axis=1) * n_grid - 1e-12).astype(np.int64)
        jc1 = np.floor(w.max(axis=1) * n_grid + 1e-12).astype(np.int64)
        nb = np.maximum(jb1 - jb0 + 1, 0)
        nc = np.maximum(jc1 - jc0 + 1, 0)
        counts = nb * nc
        total = int(counts.sum())
        if total == 0:
            continue
        rep = np.repeat(np.arange(len(tri_ids)), counts)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        local = np.arange(total) - np.repeat(starts, counts)
        jb = jb0[rep] + local // nc[rep]
        jc = jc0[rep] + local % nc[rep]
        pb = jb / n_grid
        pc = jc / n_grid

        u0, u1, u2 = u[rep, 0], u[rep, 1], u[rep, 2]
        w0, w1, w2 = w[rep, 0], w[rep, 1], w[rep, 2]
        s0 = (u1 - u0) * (pc - w0) - (w1 - w0) * (pb - u0)
        s1 = (u2 - u1) * (pc - w1) - (w2 - w1) * (pb - u1)
        s2 = (u0 - u2) * (pc - w2) - (w0 - w2) * (pb - u2)
        sgn = np.sign(raw_normals[tri_ids, axis])[rep]
        inside = (s0 * sgn >= 0.0) & (s1 * sgn >= 0.0) & (s2 * sgn >= 0.0)
        if not np.any(inside):
            continue
        rep = rep[inside]
        jb, jc, pb, pc = jb[inside], jc[inside], pb[inside], pc[inside]

        # Axis coordinate from the triangle plane equation.
        n_tri = raw_normals[tri_ids[rep]]
        p0 = tri_p[rep, 0]
        xa = (
            (n_tri * p0).sum(axis=1) - n_tri[:, bx] * pb - n_tri[:, cx] * pc
        ) / n_tri[:, axis]

        t = xa * n_grid
        ia = np.floor(t).astype(np.int64)
        frac = t - ia
        ia = np.where(frac < eps * n_grid, ia - 1, ia)  # tie to the lower edge

        base = np.empty((len(rep), 3), dtype=np.int64)
        base[:, axis] = ia
        base[:, bx] = jb
        base[:, cx] = jc
        in_range = np.all((base >= 0) & (base < n_grid), axis=1)
        if not np.any(in_range):
            continue
        base = base[in_range]
        rep = rep[in_range]
        pts = np.empty((len(rep), 3), dtype=np.float64)
        pts[:, axis] = xa[in_range]
        pts[:, bx] = pb[in_range]
        pts[:, cx] = pc[in_range]
        nrm = raw_normals[tri_ids[rep]] / area2[tri_ids[rep], None]

        axes_out.append(np.full(len(rep), axis, dtype=np.int8))
        bases_out.append(base)
        points_out.append(pts)
        normals_out.append(nrm)
        tris_out.append(tri_ids[rep])

    if not axes_out:
        empty3 = np.zeros((0, 3))
        return EdgeIntersections(
            resolution,
            np.zeros(0, dtype=np.int8),
            np.zeros((0, 3), dtype=np.int64),
            empty3,
            empty3.copy(),
            np.zeros(0, dtype=np.int64),
            degenerate,
        )

    axes = np.concatenate(axes_out)
    bases = np.concatenate(bases_out)
    points = np.concatenate(points_out)
    normals = np.concatenate(normals_out)
    tris = np.concatenate(tris_out)
    # Canonical sample order: (edge key, triangle index).
    keys = (axes.astype(np.int64) << EDGE_KEY_AXIS_SHIFT) | pack_coords(bases)
    order = np.lexsort((tris, keys))
    return EdgeIntersections(
        resolution,
        axes[order],
        bases[order],
        points[order],
        normals[order],
        tris[order],
        degenerate,
    )


def boundary_edges(mesh: TriangleMesh) -> np.ndarray:
    """Segments (S, 2, 3) of mesh edges referenced by exactly one triangle.

    Edge keying is orientation-insensitive; degenerate (repeated-index)
    edges are ignored.
    """
    faces = mesh.faces
    if len(faces) == 0:
        return np.zeros((0, 2, 3))
    edges = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )
    edges = edges[edges[:, 0] != edges[:, 1]]
    keyed = np.sort(edges, axis=1)
    uniq, counts = np.unique(keyed, axis=0, return_counts=True)
    boundary = uniq[counts == 1]
    return mesh.vertices[boundary]


def _segment_voxel_hits(
    segments: np.ndarray, resolution: int
) -> tuple[np.ndarray, np.ndarray]:
    """(segment index, voxel coord) pairs where a segment crosses a voxel cube."""
    if len(segments) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3), dtype=np.int64)
    seg_idx: list[np.ndarray] = []
    vox: list[np.ndarray] = []
    h = 1.0 / resolution
    for s, (p0, p1) in enumerate(segments):
        lo = np.minimum(p0, p1)
        hi = np.maximum(p0, p1)
        i0 = np.clip(np.floor(lo * resolution - 1e-12), 0, resolution - 1).astype(int)
        i1 = np.clip(np.floor(hi * resolution + 1e-12), 0, resolution - 1).astype(int)
        gi, gj, gk = np.meshgrid(
            np.arange(i0[0], i1[0] + 1),
            np.arange(i0[1], i1[1] + 1),
            np.arange(i0[2], i1[2] + 1),
            indexing="ij",
        )
        cand = np.stack([gi.ravel(), gj.ravel(), gk.ravel()], axis=1)
        box_lo = cand * h
        box_hi = box_lo + h
        d = p1 - p0
        t0 = np.zeros(len(cand))
        t1 = np.ones(len(cand))
        ok = np.ones(len(cand), dtype=bool)
        for a in range(3):
            if abs(d[a]) < 1e-15:
                ok &= (p0[a] >= box_lo[:, a] - 1e-12) & (p0[a] <= box_hi[:, a] + 1e-12)
            else:
                ta = (box_lo[:, a] - p0[a]) / d[a]
                tb = (box_hi[:, a] - p0[a]) / d[a]
                t0 = np.maximum(t0, np.minimum(ta, tb))
                t1 = np.minimum(t1, np.maximum(ta, tb))
        ok &= t0 <= t1 + 1e-12
        if np.any(ok):
            seg_idx.append(np.full(int(ok.sum()), s, dtype=np.int64))
            vox.append(cand[ok].astype(np.int64))
    if not seg_idx:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3), dtype=np.int64)
    return np.concatenate(seg_idx), np.concatenate(vox)


@dataclass
class VoxelizeReport:
    degenerate_triangles: int = 0
    solver_fallbacks: int = 0
    boundary_segments: int = 0
    line_term_contributions: int = 0
    hermite_samples: int = 0


def _segment_sums(values: np.ndarray, seg_starts: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.add.reduceat(values, seg_starts)
    return np.add.reduceat(values, seg_starts, axis=0)


def voxelize(
    mesh: TriangleMesh,
    cfg: VoxelizeConfig,
    report: VoxelizeReport | None = None,
) -> OVoxelGrid:
    """Convert a triangle mesh into a shape-only sparse voxel grid."""
    n_grid = cfg.resolution
    if report is None:
        report = VoxelizeReport()

    if mesh.num_faces == 0:
        return OVoxelGrid(
            n_grid,
            np.zeros((0, 3), dtype=np.int64),
            np.zeros((0, 3)),
            np.zeros((0, 3), dtype=bool),
            np.zeros(0),
        )

    if cfg.normalize:
        transform = normalization_transform(mesh.vertices, n_grid)
    else:
        check_in_frame(mesh.vertices, n_grid)
        transform = WorldTransform()
    mesh_n = mesh.transformed(transform)

    inter = find_edge_intersections(mesh_n, n_grid, cfg.intersection_eps)
    report.degenerate_triangles = inter.degenerate_count
    report.hermite_samples = len(inter)
    if len(inter) == 0:
        return OVoxelGrid(
            n_grid,
            np.zeros((0, 3), dtype=np.int64),
            np.zeros((0, 3)),
            np.zeros((0, 3), dtype=bool),
            np.zeros(0),
            transform=transform,
        )

    # --- active voxels: every in-range neighbor of an intersected edge ---
    offs = EDGE_NEIGHBOR_OFFSETS[inter.axes]  # (M, 4, 3)
    pair_vox = inter.bases[:, None, :] + offs  # (M, 4, 3)
    pair_sample = np.broadcast_to(
        np.arange(len(inter))[:, None], pair_vox.shape[:2]
    ).reshape(-1)
    pair_vox = pair_vox.reshape(-1, 3)
    keep = np.all((pair_vox >= 0) & (pair_vox < n_grid), axis=1)
    pair_vox = pair_vox[keep]
    pair_sample = pair_sample[keep]
    pair_keys = pack_coords(pair_vox)

    # One sort puts pairs in (voxel key, triangle index) order; active-set
    # keys and per-voxel accumulation segments then fall out of key runs.
    order = np.lexsort((inter.tri_indices[pair_sample], pair_keys))
    pair_keys = pair_keys[order]
    pair_sample = pair_sample[order]
    pair_vox = pair_vox[order]

    seg_starts = np.concatenate(
        [[0], np.flatnonzero(np.diff(pair_keys)) + 1]
    )
    active_keys = pair_keys[seg_starts]
    coords = unpack_coords(active_keys)
    n_active = len(active_keys)

    # --- plane terms, accumulated in the voxel-local frame ---
    q_local = inter.points[pair_sample] * n_grid - pair_vox
    n_vec = inter.normals[pair_sample]
    nd = (n_vec * q_local).sum(axis=1)

    sym = np.empty((len(pair_keys), 6))
    sym[:, 0] = n_vec[:, 0] * n_vec[:, 0]
    sym[:, 1] = n_vec[:, 1] * n_vec[:, 1]
    sym[:, 2] = n_vec[:, 2] * n_vec[:, 2]
    sym[:, 3] = n_vec[:, 0] * n_vec[:, 1]
    sym[:, 4] = n_vec[:, 0] * n_vec[:, 2]
    sym[:, 5] = n_vec[:, 1] * n_vec[:, 2]

    A_sym = _segment_sums(sym, seg_starts)
    b_vec = _segment_sums(nd[:, None] * n_vec, seg_starts)
    c_val = _segment_sums(nd * nd, seg_starts)
    p_sum = _segment_sums(q_local, seg_starts)
    p_cnt = np.diff(np.append(seg_starts, len(pair_keys))).astype(np.float64)

    # --- boundary line terms (only voxels the segment actually crosses) ---
    segments = boundary_edges(mesh_n)
    report.boundary_segments = len(segments)
    if len(segments) and cfg.lambda_bound > 0.0:
        seg_i, seg_vox = _segment_voxel_hits(segments, n_grid)
        if len(seg_i):
            seg_keys = pack_coords(seg_vox)
            rows = np.searchsorted(active_keys, seg_keys)
            rows_c = np.minimum(rows, n_active - 1)
            is_active = active_keys[rows_c] == seg_keys
            seg_i = seg_i[is_active]
            seg_vox = seg_vox[is_active]
            rows = rows_c[is_active]
            report.line_term_contributions = len(seg_i)

            d_vec = segments[seg_i, 1] - segments[seg_i, 0]
            d_len = np.linalg.norm(d_vec, axis=1)
            good = d_len > 1e-15
            seg_i, seg_vox, rows, d_vec, d_len = (
                seg_i[good],
                seg_vox[good],
                rows[good],
                d_vec[good],
                d_len[good],
            )
            d_vec /= d_len[:, None]
            o_local = segments[seg_i, 0] * n_grid - seg_vox
            lam = cfg.lambda_bound
            # projector P = I - dd', applied per pair
            od = (o_local * d_vec).sum(axis=1)
            po = o_local - od[:, None] * d_vec
            sym_l = np.empty((len(rows), 6))
            sym_l[:, 0] = 1.0 - d_vec[:, 0] * d_vec[:, 0]
            sym_l[:, 1] = 1.0 - d_vec[:, 1] * d_vec[:, 1]
            sym_l[:, 2] = 1.0 - d_vec[:, 2] * d_vec[:, 2]
            sym_l[:, 3] = -d_vec[:, 0] * d_vec[:, 1]
            sym_l[:, 4] = -d_vec[:, 0] * d_vec[:, 2]
            sym_l[:, 5] = -d_vec[:, 1] * d_vec[:, 2]
            order_l = np.argsort(rows, kind="stable")
            rows = rows[order_l]
            sym_l = sym_l[order_l]
            po = po[order_l]
            o_local = o_local[order_l]
            starts_l = np.concatenate(
                [[0], np.flatnonzero(np.diff(rows)) + 1]
            )
            rows_u = rows[starts_l]
            np.add.at(A_sym, rows_u, lam * _segment_sums(sym_l, starts_l))
            np.add.at(b_vec, rows_u, lam * _segment_sums(po, starts_l))
            np.add.at(
                c_val, rows_u, lam * _segment_sums((o_local * po).sum(axis=1), starts_l)
            )

    # --- point term and batched solve ---
    has_pts = p_cnt > 0
    q_bar = np.where(has_pts[:, None], p_sum / np.maximum(p_cnt, 1.0)[:, None], 0.5)
    lam_r = cfg.lambda_reg
    A_sym[:, 0:3] += lam_r
    b_vec += lam_r * q_bar
    c_val += lam_r * (q_bar * q_bar).sum(axis=1)

    A_full = np.empty((n_active, 3, 3))
    A_full[:, 0, 0] = A_sym[:, 0]
    A_full[:, 1, 1] = A_sym[:, 1]
    A_full[:, 2, 2] = A_sym[:, 2]
    A_full[:, 0, 1] = A_full[:, 1, 0] = A_sym[:, 3]
    A_full[:, 0, 2] = A_full[:, 2, 0] = A_sym[:, 4]
    A_full[:, 1, 2] = A_full[:, 2, 1] = A_sym[:, 5]

    dual = np.linalg.solve(A_full, b_vec[:, :, None])[:, :, 0]
    bad = ~np.all(np.isfinite(dual), axis=1)
    if np.any(bad):
        report.solver_fallbacks = int(bad.sum())
        dual[bad] = np.clip(q_bar[bad], 0.0, 1.0)
    outside = ~bad & np.any((dual < 0.0) | (dual > 1.0), axis=1)
    for idx in np.flatnonzero(outside):
        dual[idx] = solve_box_qef(A_full[idx], b_vec[idx], float(c_val[idx]))
    dual = np.clip(dual, 0.0, 1.0)

    # --- edge flags at the canonical base slot ---
    flags = np.zeros((n_active, 3), dtype=bool)
    base_rows = np.searchsorted(active_keys, pack_coords(inter.bases))
    flags[base_rows, inter.axes] = True

    # --- averaged Hermite normal per intersected edge (extraction aid) ---
    # Samples are already sorted by edge key, so key runs are segments.
    edge_keys = inter.edge_keys()
    edge_starts = np.concatenate(
        [[0], np.flatnonzero(np.diff(edge_keys)) + 1]
    )
    uniq_edges = edge_keys[edge_starts]
    normal_sum = _segment_sums(inter.normals, edge_starts)
    norms = np.linalg.norm(normal_sum, axis=1)
    nz = norms > 1e-12
    normal_sum[nz] /= norms[nz, None]

    return OVoxelGrid(
        n_grid,
        coords,
        dual,
        flags,
        np.full(n_active, 0.5),
        transform=transform,
        edge_normal_keys=uniq_edges,
        edge_normals=normal_sum,
    )
