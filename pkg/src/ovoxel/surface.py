"""Voxel-to-mesh reconstruction.

Every active voxel contributes one mesh vertex (its dual vertex); every
canonical edge with a set intersection flag whose four neighboring voxels
are all active emits one quad, wound against the edge's averaged Hermite
normal and split into two triangles by the splitting weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridEdge, OVoxelGrid
from .meshdata import TriangleMesh
from .voxelize import EDGE_KEY_AXIS_SHIFT


@dataclass
class QuadFace:
    """Four dual-vertex indices in cyclic order around the owning edge."""

    vertex_indices: tuple[int, int, int, int]
    edge: GridEdge
    split_weight: float


@dataclass
class ExtractReport:
    skipped_quads: int = 0
    emitted_quads: int = 0
    missing_normals: int = 0


def newell_normal(quad_positions: np.ndarray) -> np.ndarray:
    """Face normal of a (possibly non-planar) quad via Newell's method.

    Accepts (..., 4, 3) and returns (..., 3), unnormalized.
    """
    p = np.asarray(quad_positions, dtype=np.float64)
    q = np.roll(p, -1, axis=-2)
    n = np.empty(p.shape[:-2] + (3,))
    n[..., 0] = ((p[..., 1] - q[..., 1]) * (p[..., 2] + q[..., 2])).sum(axis=-1)
    n[..., 1] = ((p[..., 2] - q[..., 2]) * (p[..., 0] + q[..., 0])).sum(axis=-1)
    n[..., 2] = ((p[..., 0] - q[..., 0]) * (p[..., 1] + q[..., 1])).sum(axis=-1)
    return n


def orient_quad(
    quad: QuadFace, positions: np.ndarray, edge_normal: np.ndarray | None
) -> QuadFace:
    """Reorder the quad cyclically so its Newell normal agrees with the
    averaged Hermite normal of the owning edge. Ties and missing normals
    keep the canonical neighbor order."""
    if edge_normal is None:
        return quad
    idx = np.array(quad.vertex_indices)
    n = newell_normal(positions[idx])
    if float(n @ np.asarray(edge_normal)) < 0.0:
        idx = idx[::-1]
    return QuadFace(tuple(int(i) for i in idx), quad.edge, quad.split_weight)


def split_quad(quad: QuadFace) -> np.ndarray:
    """Two index triples; gamma >= 0.5 selects the (v0, v2) diagonal."""
    i0, i1, i2, i3 = quad.vertex_indices
    if quad.split_weight >= 0.5:
        return np.array([[i0, i1, i2], [i0, i2, i3]], dtype=np.int64)
    return np.array([[i1, i2, i3], [i1, i3, i0]], dtype=np.int64)


def extract_mesh(grid: OVoxelGrid, report: ExtractReport | None = None) -> TriangleMesh:
    """Reconstruct the triangle mesh encoded by a shape grid.

    Vertices come out in canonical voxel order; faces in edge-key order
    (axis-major, then lexicographic base coordinate), so extraction is
    deterministic. Quads with a missing neighbor are skipped and counted.
    """
    if report is None:
        report = ExtractReport()
    vertices = grid.dual_vertices_world()
    if len(grid) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    normal_lut = grid.edge_normal_lookup()
    keys = grid.keys
    # packed-key deltas of a unit step along each axis
    step = np.array([1 << 32, 1 << 16, 1], dtype=np.int64)
    faces_out: list[np.ndarray] = []
    for axis in range(3):
        rows = np.flatnonzero(grid.edge_flags[:, axis])
        if len(rows) == 0:
            continue
        # cyclic neighbor offsets around the edge: base, -b, -b-c, -c,
        # where (b, c) are the two non-edge axes in cyclic order
        ax_b, ax_c = (axis + 1) % 3, (axis + 2) % 3
        base_keys = keys[rows]
        shift = np.array([32, 16, 0], dtype=np.int64)
        interior = (((base_keys >> shift[ax_b]) & 0xFFFF) > 0) & (
            ((base_keys >> shift[ax_c]) & 0xFFFF) > 0
        )
        report.skipped_quads += int(np.count_nonzero(~interior))
        rows = rows[interior]
        if len(rows) == 0:
            continue
        base_keys = base_keys[interior]

        # resolve the three non-base neighbors by key arithmetic
        db, dc = step[ax_b], step[ax_c]
        nkeys = np.stack(
            [base_keys - db, base_keys - db - dc, base_keys - dc], axis=1
        )
        pos = np.searchsorted(keys, nkeys)
        found = keys[np.minimum(pos, len(keys) - 1)] == nkeys
        ok = np.all(found, axis=1)
        report.skipped_quads += int(np.count_nonzero(~ok))
        if not np.any(ok):
            continue
        rows = rows[ok]
        base_keys = base_keys[ok]
        quad_idx = np.empty((len(rows), 4), dtype=np.int64)
        quad_idx[:, 0] = rows
        quad_idx[:, 1:] = pos[ok]

        # Orient against the cached averaged Hermite normals, if present.
        flip = np.zeros(len(rows), dtype=bool)
        if normal_lut is not None:
            lkeys, lnormals = normal_lut
            lo = np.searchsorted(lkeys, np.int64(axis) << EDGE_KEY_AXIS_SHIFT)
            hi = np.searchsorted(lkeys, np.int64(axis + 1) << EDGE_KEY_AXIS_SHIFT)
            sub = lkeys[lo:hi] - (np.int64(axis) << EDGE_KEY_AXIS_SHIFT)
            lpos = np.searchsorted(sub, base_keys)
            lpos_c = np.minimum(lpos, max(len(sub) - 1, 0))
            if len(sub):
                lfound = sub[lpos_c] == base_keys
            else:
                lfound = np.zeros(len(rows), dtype=bool)
            report.missing_normals += int(np.count_nonzero(~lfound))
            if lfound.all():
                ref = lnormals[lo + lpos_c]
            else:
                ref = np.zeros((len(rows), 3))
                ref[lfound] = lnormals[lo + lpos_c[lfound]]
            d1 = vertices[quad_idx[:, 2]] - vertices[quad_idx[:, 0]]
            d2 = vertices[quad_idx[:, 3]] - vertices[quad_idx[:, 1]]
            # cross(d1, d2) equals the quad's Newell normal (up to scale)
            flip = (
                (d1[:, 1] * d2[:, 2] - d1[:, 2] * d2[:, 1]) * ref[:, 0]
                + (d1[:, 2] * d2[:, 0] - d1[:, 0] * d2[:, 2]) * ref[:, 1]
                + (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) * ref[:, 2]
            ) < 0.0
        report.emitted_quads += len(quad_idx)

        # fused flip + diagonal split: one index-pattern gather per quad
        gamma = grid.split_weights[rows]
        selector = (~(gamma >= 0.5)).astype(np.int64) + 2 * flip
        patterns = np.array(
            [
                [0, 1, 2, 0, 2, 3],  # kept order, diagonal (v0, v2)
                [1, 2, 3, 1, 3, 0],  # kept order, diagonal (v1, v3)
                [3, 2, 1, 3, 1, 0],  # flipped,    diagonal (v0, v2)
                [2, 1, 0, 2, 0, 3],  # flipped,    diagonal (v1, v3)
            ],
            dtype=np.int64,
        )
        tris = np.take_along_axis(quad_idx, patterns[selector], axis=1)
        faces_out.append(tris.reshape(-1, 3))

    faces = (
        np.concatenate(faces_out)
        if faces_out
        else np.zeros((0, 3), dtype=np.int64)
    )
    return TriangleMesh(vertices, faces)
