"""Sparse dual-grid voxel codec.

Meshes are encoded as sparse voxels that each carry a dual vertex, three
canonical edge-intersection flags, a quad-splitting weight, and optional
PBR material attributes; the same representation decodes back to a
triangle mesh, supports quality metrics, and resamples across
resolutions for learning pipelines.
"""

from .grid import (
    EDGE_NEIGHBOR_OFFSETS,
    GridEdge,
    MaterialFeature,
    OVoxelGrid,
    QUAD_CYCLIC_ORDER,
    ShapeFeature,
    VoxelCoord,
    WorldTransform,
    canonical_edges,
    downsample_coords,
    downsample_structure,
    edge_neighbors,
    pack_coords,
    unpack_coords,
)
from .material import (
    BakeConfig,
    BakeReport,
    TextureSet,
    bake_materials,
    bake_texture_map,
    bake_vertex_colors,
    query_material,
)
from .meshdata import (
    MaterialSpec,
    TriangleMesh,
    check_in_frame,
    normalization_transform,
)
from .meshio import read_mesh, read_obj, read_ply, write_obj, write_ply
from .metrics import (
    MetricReport,
    chamfer,
    evaluate_meshes,
    f_score,
    mesh_distance,
    outer_shell_points,
    sample_surface,
)
from .ovx_format import load_features, load_grid, save_features, save_grid
from .resample import (
    SparseFeatureGrid,
    channel_to_space_up,
    occupancy_masks,
    space_to_channel_down,
)
from .surface import ExtractReport, extract_mesh
from .voxelize import VoxelizeConfig, VoxelizeReport, voxelize

__version__ = "1.0.0"

__all__ = [
    "BakeConfig",
    "BakeReport",
    "EDGE_NEIGHBOR_OFFSETS",
    "ExtractReport",
    "GridEdge",
    "MaterialFeature",
    "MaterialSpec",
    "MetricReport",
    "OVoxelGrid",
    "QUAD_CYCLIC_ORDER",
    "ShapeFeature",
    "SparseFeatureGrid",
    "TextureSet",
    "TriangleMesh",
    "VoxelCoord",
    "VoxelizeConfig",
    "VoxelizeReport",
    "WorldTransform",
    "bake_materials",
    "bake_texture_map",
    "bake_vertex_colors",
    "canonical_edges",
    "chamfer",
    "channel_to_space_up",
    "check_in_frame",
    "downsample_coords",
    "downsample_structure",
    "edge_neighbors",
    "evaluate_meshes",
    "extract_mesh",
    "f_score",
    "load_features",
    "load_grid",
    "mesh_distance",
    "normalization_transform",
    "occupancy_masks",
    "outer_shell_points",
    "pack_coords",
    "query_material",
    "read_mesh",
    "read_obj",
    "read_ply",
    "sample_surface",
    "save_features",
    "save_grid",
    "space_to_channel_down",
    "unpack_coords",
    "voxelize",
    "write_obj",
    "write_ply",
]
