"""Bake materials onto a voxel grid and move everything through files.

Shows the material path (texture -> per-voxel PBR attributes -> colored
mesh) and the OVX/PLY interchange formats the `ovx` CLI speaks.
Run with `python3 demos/02_materials_and_files.py`; outputs land in /tmp.
"""

import numpy as np

from ovoxel import (
    MaterialSpec,
    TextureSet,
    TriangleMesh,
    VoxelizeConfig,
    bake_materials,
    bake_vertex_colors,
    extract_mesh,
    load_grid,
    save_grid,
    voxelize,
    write_ply,
)
from demos_common import make_demo_sphere


def main():
    base = make_demo_sphere()

    # Dress the sphere in a constant blue-ish texture with glTF-style
    # metallic/roughness factors. Any UV layout works for a constant map.
    uvs = np.zeros((base.num_faces, 3, 2))
    uvs[:, 1, 0] = 1.0
    uvs[:, 2, 1] = 1.0
    texture = np.empty((32, 32, 4))
    texture[..., :3] = [0.25, 0.45, 0.8]
    texture[..., 3] = 1.0
    mesh = TriangleMesh(
        base.vertices,
        base.faces,
        uvs=uvs,
        material_ids=np.zeros(base.num_faces, dtype=np.int64),
        materials=[
            MaterialSpec(
                name="blue",
                metallic_factor=0.1,
                roughness_factor=0.6,
                textures=TextureSet(texture),
            )
        ],
    )

    grid = voxelize(mesh, VoxelizeConfig(resolution=48))
    baked = bake_materials(mesh, grid)
    print(f"baked {len(baked)} voxels; 6 material channels each")

    # Persist and reload: the .ovx container is the CLI's native format.
    save_grid("/tmp/demo_sphere.ovx", baked)
    back = load_grid("/tmp/demo_sphere.ovx")
    print(f"round-tripped /tmp/demo_sphere.ovx ({len(back)} voxels)")

    # Decode to a mesh and color its vertices from the voxel materials.
    recon = extract_mesh(back)
    colors = bake_vertex_colors(recon, back)
    write_ply("/tmp/demo_sphere.ply", recon, vertex_colors=colors)
    print(
        f"wrote /tmp/demo_sphere.ply: {recon.num_vertices} colored vertices, "
        f"mean rgb = {colors[:, :3].mean(axis=0).round(3)}"
    )


if __name__ == "__main__":
    main()
