"""Indexed triangle soup with optional UVs and material references."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import WorldTransform


@dataclass
class MaterialSpec:
    """Constant PBR factors plus optional texture images (glTF semantics:
    sampled texels are multiplied by the factors)."""

    name: str = "default"
    base_color_factor: np.ndarray = field(
        default_factory=lambda: np.ones(4, dtype=np.float64)
    )
    metallic_factor: float = 0.0
    roughness_factor: float = 1.0
    textures: "object | None" = None  # TextureSet, set by asset loaders


@dataclass
class TriangleMesh:
    """Triangle soup; need not be watertight or manifold.

    ``uvs`` holds per-corner texture coordinates with shape (F, 3, 2) when
    present. ``material_ids`` maps each triangle into ``materials``.
    """

    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64
    uvs: np.ndarray | None = None  # (F, 3, 2) float64
    material_ids: np.ndarray | None = None  # (F,) int64
    materials: list[MaterialSpec] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (
            self.faces.min() < 0 or self.faces.max() >= len(self.vertices)
        ):
            raise IndexError("triangle index out of range")
        if self.uvs is not None:
            self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 3, 2)
            if len(self.uvs) != len(self.faces):
                raise ValueError("uvs must be per-corner, one row per triangle")
        if self.material_ids is not None:
            self.material_ids = np.asarray(self.material_ids, dtype=np.int64).reshape(-1)
            if len(self.material_ids) != len(self.faces):
                raise ValueError("material_ids must have one entry per triangle")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def triangle_corners(self) -> np.ndarray:
        """Corner positions as an (F, 3, 3) array."""
        return self.vertices[self.faces]

    def triangle_normals(self, normalize: bool = True) -> np.ndarray:
        """Geometric triangle normals; zero rows for degenerate triangles."""
        p = self.triangle_corners()
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        if normalize:
            length = np.linalg.norm(n, axis=1)
            good = length > 0.0
            n[good] /= length[good, None]
        return n

    def triangle_areas(self) -> np.ndarray:
        p = self.triangle_corners()
        return 0.5 * np.linalg.norm(
            np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
        )

    def transformed(self, transform: WorldTransform) -> "TriangleMesh":
        return TriangleMesh(
            transform.apply(self.vertices),
            self.faces,
            uvs=self.uvs,
            material_ids=self.material_ids,
            materials=self.materials,
        )


def normalization_transform(
    vertices: np.ndarray, resolution: int, margin_voxels: float = 2.0
) -> WorldTransform:
    """Uniform scale + translation fitting the mesh into [m, 1-m]^3.

    The margin keeps every surface-adjacent grid edge interior to the grid.
    The mesh is centered per axis inside the shrunken cube.
    """
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    if len(vertices) == 0:
        return WorldTransform()
    margin = margin_voxels / resolution
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    extent = float((hi - lo).max())
    if extent <= 0.0:
        raise ValueError("mesh is a single point; cannot normalize")
    scale = (1.0 - 2.0 * margin) / extent
    offset = margin + 0.5 * ((1.0 - 2.0 * margin) - scale * (hi - lo)) - scale * lo
    return WorldTransform(scale=scale, offset=offset)


def check_in_frame(
    vertices: np.ndarray, resolution: int, margin_voxels: float = 1.0
) -> None:
    """Raise if any vertex leaves the grid frame (with a safety margin)."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if len(vertices) == 0:
        return
    m = margin_voxels / resolution
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    if np.any(lo < m) or np.any(hi > 1.0 - m):
        raise ValueError(
            f"mesh exceeds the grid world frame: bounds {lo} .. {hi}, "
            f"allowed [{m}, {1.0 - m}]"
        )
