"""Geometric evaluation protocol: surface sampling, bidirectional mesh
distance, chamfer distance, F-scores, and visible-surface point generation.

All reported distances are squared Euclidean values; F-score thresholds
apply to squared distances. Accelerated nearest-element queries are exact:
candidate pruning uses per-triangle bounding radii so the true minimizer
is never discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .meshdata import TriangleMesh


def closest_point_on_triangles(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """Closest point to ``p`` on each triangle (a, b, c), vectorized.

    Region-based algorithm (vertex / edge / interior cases via masks).
    All arrays are (M, 3); returns (M, 3).
    """
    p = np.asarray(p, dtype=np.float64)
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = (ab * ap).sum(axis=1)
    d2 = (ac * ap).sum(axis=1)
    bp = p - b
    d3 = (ab * bp).sum(axis=1)
    d4 = (ac * bp).sum(axis=1)
    cp = p - c
    d5 = (ab * cp).sum(axis=1)
    d6 = (ac * cp).sum(axis=1)

    out = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    m = (d1 <= 0) & (d2 <= 0)  # vertex a
    out[m] = a[m]
    done |= m

    m = ~done & (d3 >= 0) & (d4 <= d3)  # vertex b
    out[m] = b[m]
    done |= m

    m = ~done & (d6 >= 0) & (d5 <= d6)  # vertex c
    out[m] = c[m]
    done |= m

    vc = d1 * d4 - d3 * d2
    m = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)  # edge ab
    with np.errstate(invalid="ignore", divide="ignore"):
        v = d1 / (d1 - d3)
    out[m] = a[m] + v[m, None] * ab[m]
    done |= m

    vb = d5 * d2 - d1 * d6
    m = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)  # edge ac
    with np.errstate(invalid="ignore", divide="ignore"):
        w = d2 / (d2 - d6)
    out[m] = a[m] + w[m, None] * ac[m]
    done |= m

    va = d3 * d6 - d5 * d4
    m = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)  # edge bc
    with np.errstate(invalid="ignore", divide="ignore"):
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    out[m] = b[m] + w[m, None] * (c[m] - b[m])
    done |= m

    m = ~done  # interior
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
    out[m] = a[m] + v[m, None] * ab[m] + w[m, None] * ac[m]
    return out


class BvhMesh:
    """Triangle mesh with exact accelerated closest-point queries.

    A KD-tree over triangle centroids plus per-triangle bounding radii
    gives a conservative candidate set; exact point-triangle distances
    pick the winner (ties broken by lowest triangle index, matching the
    brute-force oracle)."""

    def __init__(self, mesh: TriangleMesh) -> None:
        if mesh.num_faces == 0:
            raise ValueError("BvhMesh requires a nonempty mesh")
        self.mesh = mesh
        self.corners = mesh.triangle_corners()
        self.centroids = self.corners.mean(axis=1)
        self.radii = np.linalg.norm(
            self.corners - self.centroids[:, None, :], axis=2
        ).max(axis=1)
        self.r_max = float(self.radii.max())
        self.tree = cKDTree(self.centroids)

    def closest_points(
        self, points: np.ndarray, brute_force: bool = False
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Squared distance, closest surface point, and triangle index."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if brute_force or len(self.centroids) <= 8:
            return self._brute(points)

        k = min(4, len(self.centroids))
        _, cand = self.tree.query(points, k=k)
        cand = np.atleast_2d(cand)
        rep_p = np.repeat(np.arange(len(points)), k)
        flat = cand.reshape(-1)
        q = closest_point_on_triangles(
            points[rep_p],
            self.corners[flat, 0],
            self.corners[flat, 1],
            self.corners[flat, 2],
        )
        d2 = ((points[rep_p] - q) ** 2).sum(axis=1)
        d_up = np.sqrt(d2.reshape(len(points), k).min(axis=1))

        lists = self.tree.query_ball_point(points, d_up + self.r_max + 1e-12)
        counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
        flat_tri = np.fromiter(
            (t for l in lists for t in l), dtype=np.int64, count=int(counts.sum())
        )
        rep_p = np.repeat(np.arange(len(points)), counts)
        q = closest_point_on_triangles(
            points[rep_p],
            self.corners[flat_tri, 0],
            self.corners[flat_tri, 1],
            self.corners[flat_tri, 2],
        )
        d2 = ((points[rep_p] - q) ** 2).sum(axis=1)
        order = np.lexsort((flat_tri, d2, rep_p))
        first = np.concatenate([[0], np.flatnonzero(np.diff(rep_p[order])) + 1])
        win = order[first]
        return d2[win], q[win], flat_tri[win]

    def _brute(self, points: np.ndarray):
        n_tri = len(self.centroids)
        rep_p = np.repeat(np.arange(len(points)), n_tri)
        tri = np.tile(np.arange(n_tri), len(points))
        q = closest_point_on_triangles(
            points[rep_p],
            self.corners[tri, 0],
            self.corners[tri, 1],
            self.corners[tri, 2],
        )
        d2 = ((points[rep_p] - q) ** 2).sum(axis=1).reshape(len(points), n_tri)
        idx = d2.argmin(axis=1)
        rows = np.arange(len(points))
        return d2[rows, idx], q.reshape(len(points), n_tri, 3)[rows, idx], idx

    def squared_distances(self, points: np.ndarray) -> np.ndarray:
        return self.closest_points(points)[0]


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> np.ndarray:
    """Area-weighted uniform surface samples, deterministic under seed."""
    areas = mesh.triangle_areas()
    total = areas.sum()
    if not total > 0.0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    corners = mesh.triangle_corners()[tri]
    return (
        (1.0 - r1)[:, None] * corners[:, 0]
        + (r1 * (1.0 - r2))[:, None] * corners[:, 1]
        + (r1 * r2)[:, None] * corners[:, 2]
    )


def _as_bvh(mesh: "TriangleMesh | BvhMesh") -> BvhMesh:
    return mesh if isinstance(mesh, BvhMesh) else BvhMesh(mesh)


def mesh_distance(
    mesh_x: "TriangleMesh | BvhMesh",
    mesh_y: "TriangleMesh | BvhMesh",
    n: int = 100_000,
    seed: int = 0,
) -> float:
    """Bidirectional mean squared point-to-mesh-surface distance."""
    mesh_x = _as_bvh(mesh_x)
    mesh_y = _as_bvh(mesh_y)
    px = sample_surface(mesh_x.mesh, n, seed)
    py = sample_surface(mesh_y.mesh, n, seed)
    return 0.5 * float(mesh_y.squared_distances(px).mean()) + 0.5 * float(
        mesh_x.squared_distances(py).mean()
    )


def chamfer(x: np.ndarray, y: np.ndarray) -> float:
    """Bidirectional mean squared nearest-neighbor distance."""
    x = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 3)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("chamfer requires nonempty point clouds")
    dx, _ = cKDTree(y).query(x)
    dy, _ = cKDTree(x).query(y)
    return 0.5 * float((dx**2).mean()) + 0.5 * float((dy**2).mean())


@dataclass
class FScoreResult:
    precision: float
    recall: float
    f: float


def f_score_points(
    pred: np.ndarray, gt: np.ndarray, tau: float
) -> FScoreResult:
    """Point-cloud F-score with the threshold on squared distances."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    if len(pred) == 0 or len(gt) == 0:
        raise ValueError("f_score requires nonempty point clouds")
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    dp, _ = cKDTree(gt).query(pred)
    dg, _ = cKDTree(pred).query(gt)
    return _harmonic(float((dp**2 < tau).mean()), float((dg**2 < tau).mean()))


def f_score_mesh(
    pred_points: np.ndarray,
    gt_points: np.ndarray,
    pred_mesh: BvhMesh,
    gt_mesh: BvhMesh,
    tau: float,
) -> FScoreResult:
    """Mesh-surface F-score: distances are point-to-surface, squared."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    prec = float((gt_mesh.squared_distances(pred_points) < tau).mean())
    rec = float((pred_mesh.squared_distances(gt_points) < tau).mean())
    return _harmonic(prec, rec)


def f_score(pred, gt, tau: float, mode: str = "point-cloud") -> FScoreResult:
    """Dispatching wrapper: 'point-cloud' takes two (N, 3) clouds,
    'mesh-surface' takes (points, BvhMesh) pairs."""
    if mode == "point-cloud":
        return f_score_points(pred, gt, tau)
    if mode == "mesh-surface":
        return f_score_mesh(pred[0], gt[0], pred[1], gt[1], tau)
    raise ValueError(f"unknown f_score mode {mode!r}")


def _harmonic(precision: float, recall: float) -> FScoreResult:
    if precision + recall == 0.0:
        return FScoreResult(precision, recall, 0.0)
    return FScoreResult(
        precision, recall, 2.0 * precision * recall / (precision + recall)
    )


def fibonacci_directions(n: int) -> np.ndarray:
    """n near-uniform unit directions via the golden-angle spiral."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * (np.pi * (3.0 - np.sqrt(5.0)))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _view_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    up = np.array([0.0, 0.0, 1.0])
    if abs(direction @ up) > 0.99:
        up = np.array([0.0, 1.0, 0.0])
    u = np.cross(up, direction)
    u /= np.linalg.norm(u)
    v = np.cross(direction, u)
    return u, v


def render_first_hits(
    mesh: TriangleMesh, direction: np.ndarray, raster_res: int
) -> np.ndarray:
    """First-hit surface points for an orthographic ray grid along
    ``direction``, computed as a software depth buffer. Equivalent to
    casting one ray per pixel center and keeping the nearest triangle hit.
    """
    corners = mesh.triangle_corners()
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    center = 0.5 * (lo + hi)
    radius = 0.5 * float(np.linalg.norm(hi - lo)) + 1e-9

    u, v = _view_basis(direction)
    rel = corners - center
    s = rel @ u
    t = rel @ v
    depth = rel @ direction

    scale = raster_res / (2.0 * radius)
    sp = (s + radius) * scale  # pixel-space coordinates
    tp = (t + radius) * scale

    s0 = np.floor(sp.min(axis=1) - 0.5).astype(np.int64).clip(0, raster_res - 1)
    s1 = np.ceil(sp.max(axis=1) - 0.5).astype(np.int64).clip(0, raster_res - 1)
    t0 = np.floor(tp.min(axis=1) - 0.5).astype(np.int64).clip(0, raster_res - 1)
    t1 = np.ceil(tp.max(axis=1) - 0.5).astype(np.int64).clip(0, raster_res - 1)
    ns = np.maximum(s1 - s0 + 1, 0)
    nt = np.maximum(t1 - t0 + 1, 0)
    counts = ns * nt
    total = int(counts.sum())
    if total == 0:
        return np.zeros((0, 3))

    rep = np.repeat(np.arange(len(corners)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - np.repeat(starts, counts)
    px = s0[rep] + local // nt[rep]
    py = t0[rep] + local % nt[rep]
    cx = px + 0.5  # pixel centers
    cy = py + 0.5

    a0, a1, a2 = sp[rep, 0], sp[rep, 1], sp[rep, 2]
    b0, b1, b2 = tp[rep, 0], tp[rep, 1], tp[rep, 2]
    e0 = (a1 - a0) * (cy - b0) - (b1 - b0) * (cx - a0)
    e1 = (a2 - a1) * (cy - b1) - (b2 - b1) * (cx - a1)
    e2 = (a0 - a2) * (cy - b2) - (b0 - b2) * (cx - a2)
    area = (a1 - a0) * (b2 - b0) - (b1 - b0) * (a2 - a0)
    nz = np.abs(area) > 1e-14
    inside = nz & (
        ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
    )
    if not np.any(inside):
        return np.zeros((0, 3))
    rep = rep[inside]
    pix = px[inside] * raster_res + py[inside]
    with np.errstate(invalid="ignore", divide="ignore"):
        l2 = e0[inside] / area[inside]
        l0 = e1[inside] / area[inside]
        l1 = e2[inside] / area[inside]
    z = l0 * depth[rep, 0] + l1 * depth[rep, 1] + l2 * depth[rep, 2]
    pts = (
        l0[:, None] * corners[rep, 0]
        + l1[:, None] * corners[rep, 1]
        + l2[:, None] * corners[rep, 2]
    )
    order = np.lexsort((rep, z, pix))
    first = np.concatenate([[0], np.flatnonzero(np.diff(pix[order])) + 1])
    return pts[order][first]


def outer_shell_points(
    mesh: TriangleMesh,
    n_views: int = 100,
    n_points: int = 100_000,
    seed: int = 0,
    raster_res: int = 256,
) -> np.ndarray:
    """Visible-surface point cloud: first hits of orthographic ray grids
    from near-uniform view directions, pooled and uniformly subsampled.

    Interior structures never appear in the output."""
    if mesh.num_faces == 0:
        raise ValueError("outer_shell_points requires a nonempty mesh")
    pools = [
        render_first_hits(mesh, d, raster_res) for d in fibonacci_directions(n_views)
    ]
    pool = np.concatenate([p for p in pools if len(p)]) if pools else np.zeros((0, 3))
    if len(pool) == 0:
        raise ValueError("no ray hits; mesh invisible from all views")
    rng = np.random.default_rng(seed)
    if len(pool) > n_points:
        keep = rng.choice(len(pool), size=n_points, replace=False)
        pool = pool[np.sort(keep)]
    return pool


@dataclass
class MetricReport:
    md: float
    md_f1: float
    cd: float
    cd_f1: float
    precision: dict = field(default_factory=dict)
    recall: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "md": self.md,
            "md_f1": self.md_f1,
            "cd": self.cd,
            "cd_f1": self.cd_f1,
            "precision": self.precision,
            "recall": self.recall,
            "counts": self.counts,
            "seeds": self.seeds,
        }

    def to_kv_lines(self) -> list[str]:
        lines = [
            f"md={self.md:.12g}",
            f"md_f1={self.md_f1:.12g}",
            f"cd={self.cd:.12g}",
            f"cd_f1={self.cd_f1:.12g}",
        ]
        for group, values in (
            ("precision", self.precision),
            ("recall", self.recall),
            ("counts", self.counts),
            ("seeds", self.seeds),
        ):
            for key, val in values.items():
                lines.append(f"{group}.{key}={val:.12g}" if isinstance(val, float) else f"{group}.{key}={val}")
        return lines


def evaluate_meshes(
    gt: TriangleMesh,
    pred: TriangleMesh,
    n_samples: int = 100_000,
    n_views: int = 100,
    seed: int = 0,
    tau_md: float = 1e-8,
    tau_cd: float = 1e-6,
) -> MetricReport:
    """Full protocol: MD + F1 on all surfaces, CD + F1 on visible shells.

    Each mesh is independently normalized into the unit cube (uniform
    scale, centered per axis), so inputs may live in any world frame.
    """
    from .meshdata import normalization_transform

    gt = gt.transformed(normalization_transform(gt.vertices, 1, margin_voxels=0.0))
    pred = pred.transformed(
        normalization_transform(pred.vertices, 1, margin_voxels=0.0)
    )
    gt_bvh = BvhMesh(gt)
    pred_bvh = BvhMesh(pred)
    p_gt = sample_surface(gt, n_samples, seed)
    p_pred = sample_surface(pred, n_samples, seed)
    md = 0.5 * float(pred_bvh.squared_distances(p_gt).mean()) + 0.5 * float(
        gt_bvh.squared_distances(p_pred).mean()
    )
    md_f = f_score_mesh(p_pred, p_gt, pred_bvh, gt_bvh, tau_md)

    shell_gt = outer_shell_points(gt, n_views, n_samples, seed)
    shell_pred = outer_shell_points(pred, n_views, n_samples, seed)
    cd = chamfer(shell_pred, shell_gt)
    cd_f = f_score_points(shell_pred, shell_gt, tau_cd)

    return MetricReport(
        md=md,
        md_f1=md_f.f,
        cd=cd,
        cd_f1=cd_f.f,
        precision={"md": md_f.precision, "cd": cd_f.precision},
        recall={"md": md_f.recall, "cd": cd_f.recall},
        counts={
            "samples": n_samples,
            "views": n_views,
            "shell_gt": len(shell_gt),
            "shell_pred": len(shell_pred),
        },
        seeds={"sampling": seed},
    )
