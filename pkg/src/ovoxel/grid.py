"""Sparse dual-grid voxel container, coordinate/edge conventions, structure resampling.

The grid stores one feature tuple per active voxel of an N^3 lattice:
a dual vertex in local [0,1]^3 voxel coordinates, three edge-intersection
flags for the canonical +X/+Y/+Z edges at the voxel's minimum corner, a
positive quad-splitting weight, and (optionally) a 6-channel PBR material
tuple (base color RGB, metallic, roughness, opacity).

Storage is structure-of-arrays with coordinates kept in canonical
lexicographic order, so grids compare and serialize reproducibly.
Coordinates are packed 16 bits per axis (N up to 65535).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2
AXIS_NAMES = ("X", "Y", "Z")

MAX_RESOLUTION = 1 << 16

# The up-to-4 voxels sharing a grid edge, per edge axis. Row 0 is the
# edge's base voxel; the rest subtract unit steps along the two other
# axes in cyclic order (X -> offsets in Y,Z; Y -> Z,X; Z -> X,Y).
EDGE_NEIGHBOR_OFFSETS = np.array(
    [
        [[0, 0, 0], [0, -1, 0], [0, 0, -1], [0, -1, -1]],
        [[0, 0, 0], [0, 0, -1], [-1, 0, 0], [-1, 0, -1]],
        [[0, 0, 0], [-1, 0, 0], [0, -1, 0], [-1, -1, 0]],
    ],
    dtype=np.int64,
)

# Reindexing of EDGE_NEIGHBOR_OFFSETS rows that walks the four voxels
# cyclically around the shared edge (used when emitting dual quads).
QUAD_CYCLIC_ORDER = (0, 1, 3, 2)


def pack_coords(coords: np.ndarray) -> np.ndarray:
    """Pack integer (..., 3) voxel coordinates into sortable int64 keys.

    Lexicographic order of (i, j, k) equals numeric order of the keys.
    """
    c = np.asarray(coords, dtype=np.int64)
    return (c[..., 0] << 32) | (c[..., 1] << 16) | c[..., 2]


def unpack_coords(keys: np.ndarray) -> np.ndarray:
    k = np.asarray(keys, dtype=np.int64)
    out = np.empty(k.shape + (3,), dtype=np.int64)
    out[..., 0] = k >> 32
    out[..., 1] = (k >> 16) & 0xFFFF
    out[..., 2] = k & 0xFFFF
    return out


@dataclass(frozen=True)
class VoxelCoord:
    i: int
    j: int
    k: int

    def as_array(self) -> np.ndarray:
        return np.array([self.i, self.j, self.k], dtype=np.int64)


@dataclass(frozen=True)
class GridEdge:
    """Canonical encoding of a grid edge: minimum-corner voxel + axis."""

    base: VoxelCoord
    axis: int

    def endpoints(self, resolution: int) -> tuple[np.ndarray, np.ndarray]:
        lo = self.base.as_array() / resolution
        hi = lo.copy()
        hi[self.axis] += 1.0 / resolution
        return lo, hi


@dataclass
class ShapeFeature:
    dual_vertex: np.ndarray  # (3,) local coords in [0,1]
    edge_flags: np.ndarray  # (3,) bool, canonical +X/+Y/+Z edges
    split_weight: float

    def __post_init__(self) -> None:
        self.dual_vertex = np.asarray(self.dual_vertex, dtype=np.float64)
        self.edge_flags = np.asarray(self.edge_flags, dtype=bool)
        if self.dual_vertex.shape != (3,):
            raise ValueError("dual_vertex must be a 3-vector")
        if np.any(self.dual_vertex < 0.0) or np.any(self.dual_vertex > 1.0):
            raise ValueError("dual_vertex components must lie in [0,1]")
        if not self.split_weight > 0.0:
            raise ValueError("split_weight must be positive")


@dataclass
class MaterialFeature:
    base_color: np.ndarray  # (3,) in [0,1]
    metallic: float
    roughness: float
    opacity: float

    def __post_init__(self) -> None:
        self.base_color = np.asarray(self.base_color, dtype=np.float64)
        channels = np.concatenate(
            [self.base_color, [self.metallic, self.roughness, self.opacity]]
        )
        if np.any(channels < 0.0) or np.any(channels > 1.0):
            raise ValueError("material channels must lie in [0,1]")

    def as_array(self) -> np.ndarray:
        return np.array(
            [*self.base_color, self.metallic, self.roughness, self.opacity],
            dtype=np.float64,
        )


@dataclass
class WorldTransform:
    """Normalization applied to the source mesh: x_grid = scale * x + offset."""

    scale: float = 1.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + self.offset

    def invert(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.offset) / self.scale


class OVoxelGrid:
    """Sparse collection of per-voxel (shape, material) tuples.

    Immutable after construction; all read paths are thread-safe.
    """

    def __init__(
        self,
        resolution: int,
        coords: np.ndarray,
        dual_vertices: np.ndarray,
        edge_flags: np.ndarray,
        split_weights: np.ndarray,
        material: np.ndarray | None = None,
        transform: WorldTransform | None = None,
        edge_normal_keys: np.ndarray | None = None,
        edge_normals: np.ndarray | None = None,
    ) -> None:
        if not 0 < resolution < MAX_RESOLUTION:
            raise ValueError(f"resolution must be in [1, {MAX_RESOLUTION - 1}]")
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        dual_vertices = np.asarray(dual_vertices, dtype=np.float64).reshape(-1, 3)
        edge_flags = np.asarray(edge_flags, dtype=bool).reshape(-1, 3)
        split_weights = np.asarray(split_weights, dtype=np.float64).reshape(-1)
        n = len(coords)
        if not (len(dual_vertices) == len(edge_flags) == len(split_weights) == n):
            raise ValueError("feature arrays disagree on voxel count")
        if n and (coords.min() < 0 or coords.max() >= resolution):
            raise ValueError("voxel coordinates out of range")
        if n and (dual_vertices.min() < -1e-12 or dual_vertices.max() > 1 + 1e-12):
            raise ValueError("dual vertices must lie in the local unit cube")
        if n and split_weights.min() <= 0.0:
            raise ValueError("split weights must be positive")
        if material is not None:
            material = np.asarray(material, dtype=np.float64).reshape(-1, 6)
            if len(material) != n:
                raise ValueError("material row count disagrees with coords")
            if n and (material.min() < -1e-12 or material.max() > 1 + 1e-12):
                raise ValueError("material channels must lie in [0,1]")

        keys = pack_coords(coords)
        deltas = np.diff(keys)
        if np.all(deltas > 0):  # already canonical; skip the sort
            order = None
        else:
            order = np.argsort(keys, kind="stable")
            keys = keys[order]
            deltas = np.diff(keys)
        if n and np.any(deltas == 0):
            raise ValueError("duplicate voxel coordinates")

        def reorder(a):
            return np.ascontiguousarray(a if order is None else a[order])

        self.resolution = int(resolution)
        self.coords = reorder(coords)
        self.dual_vertices = np.clip(reorder(dual_vertices), 0.0, 1.0)
        self.edge_flags = reorder(edge_flags)
        self.split_weights = reorder(split_weights)
        self.material = (
            None if material is None else np.clip(reorder(material), 0.0, 1.0)
        )
        self.transform = transform if transform is not None else WorldTransform()
        self._keys = keys
        # Optional averaged Hermite normals per intersected edge, keyed by
        # axis * 2^48 + packed base coordinate. Not persisted in OVX files.
        self._edge_normal_keys = edge_normal_keys
        self._edge_normals = edge_normals

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def has_material(self) -> bool:
        return self.material is not None

    def lookup(self, coords: np.ndarray) -> np.ndarray:
        """Map (..., 3) coordinates to voxel row indices; -1 where inactive.

        Out-of-range coordinates also report -1.
        """
        coords = np.asarray(coords, dtype=np.int64)
        in_range = np.all((coords >= 0) & (coords < self.resolution), axis=-1)
        query = pack_coords(np.where(in_range[..., None], coords, 0))
        pos = np.searchsorted(self._keys, query)
        pos_c = np.minimum(pos, max(len(self._keys) - 1, 0))
        found = in_range & (len(self._keys) > 0)
        if len(self._keys):
            found = found & (self._keys[pos_c] == query)
        return np.where(found, pos_c, -1)

    def is_active(self, coords: np.ndarray) -> np.ndarray:
        return self.lookup(coords) >= 0

    def voxel_centers(self) -> np.ndarray:
        """Centers of the active voxels in normalized [0,1]^3 coordinates."""
        return (self.coords + 0.5) / self.resolution

    def dual_vertices_world(self) -> np.ndarray:
        """Dual vertices mapped back through the stored world transform."""
        points = (self.coords + self.dual_vertices) / self.resolution
        return self.transform.invert(points)

    def shape_feature(self, coord: VoxelCoord) -> ShapeFeature:
        idx = int(self.lookup(coord.as_array()))
        if idx < 0:
            raise KeyError(f"voxel {coord} is inactive")
        return ShapeFeature(
            self.dual_vertices[idx], self.edge_flags[idx], float(self.split_weights[idx])
        )

    def material_feature(self, coord: VoxelCoord) -> MaterialFeature:
        if self.material is None:
            raise ValueError("grid carries no material features")
        idx = int(self.lookup(coord.as_array()))
        if idx < 0:
            raise KeyError(f"voxel {coord} is inactive")
        row = self.material[idx]
        return MaterialFeature(row[:3], row[3], row[4], row[5])

    def edge_normal_lookup(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self._edge_normal_keys is None:
            return None
        return self._edge_normal_keys, self._edge_normals

    def equals(self, other: "OVoxelGrid") -> bool:
        if self.resolution != other.resolution or len(self) != len(other):
            return False
        if self.has_material != other.has_material:
            return False
        same = (
            np.array_equal(self.coords, other.coords)
            and np.allclose(self.dual_vertices, other.dual_vertices, atol=1e-6)
            and np.array_equal(self.edge_flags, other.edge_flags)
            and np.allclose(self.split_weights, other.split_weights, atol=1e-6)
        )
        if same and self.has_material:
            same = np.allclose(self.material, other.material, atol=1e-6)
        return bool(same)


def edge_neighbors(edge: GridEdge, resolution: int) -> list[VoxelCoord]:
    """Voxels whose closed cubes contain the edge segment (up to 4).

    Out-of-range neighbors are silently omitted.
    """
    base = edge.base.as_array()
    if np.any(base < 0) or np.any(base >= resolution):
        raise ValueError("edge base outside grid")
    cand = base[None, :] + EDGE_NEIGHBOR_OFFSETS[edge.axis]
    keep = np.all((cand >= 0) & (cand < resolution), axis=1)
    return [VoxelCoord(*map(int, row)) for row in cand[keep]]


def canonical_edges(coord: VoxelCoord) -> list[GridEdge]:
    """The three +X/+Y/+Z edges sharing the voxel's minimum corner."""
    return [GridEdge(coord, axis) for axis in (AXIS_X, AXIS_Y, AXIS_Z)]


def downsample_structure(grid: OVoxelGrid, factor: int) -> np.ndarray:
    """Coordinate set of the grid max-pooled by an integer factor.

    Returns the deduplicated floor-divided active coordinates, sorted
    lexicographically: exactly the latent-token coordinates for a spatial
    compression of ``factor``.
    """
    return downsample_coords(grid.coords, grid.resolution, factor)


def downsample_coords(coords: np.ndarray, resolution: int, factor: int) -> np.ndarray:
    if factor <= 0 or resolution % factor != 0:
        raise ValueError(f"factor {factor} does not divide resolution {resolution}")
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    keys = np.unique(pack_coords(coords // factor))
    return unpack_coords(keys)
