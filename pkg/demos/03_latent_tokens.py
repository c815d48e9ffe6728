"""Count latent tokens and shuttle features between resolutions.

A sparse grid compresses well because only surface voxels are active;
max-pooling the structure by 16 gives the coarse "token" set an
autoencoder would attend over. The space/channel resampling operators
move feature vectors between resolutions without any learned weights.
Run with `python3 demos/03_latent_tokens.py`.
"""

import numpy as np

from ovoxel import VoxelizeConfig, downsample_structure, voxelize
from ovoxel.resample import (
    SparseFeatureGrid,
    channel_to_space_up,
    occupancy_masks,
    space_to_channel_down,
)
from demos_common import make_demo_sphere


def main():
    grid = voxelize(make_demo_sphere(96, 96), VoxelizeConfig(resolution=256))
    tokens = downsample_structure(grid, 16)
    print(
        f"N=256 sphere shell: {len(grid)} active voxels -> "
        f"{len(tokens)} tokens at 16^3 per token "
        f"({len(grid) / len(tokens):.0f} voxels per token)"
    )

    # Attach an 8-channel feature to each active voxel and fold it down:
    # each parent stacks its children along the channel axis, then
    # contiguous channel groups are averaged.
    rng = np.random.default_rng(0)
    feats = SparseFeatureGrid(
        grid.resolution, grid.coords, rng.random((len(grid), 8))
    )
    coarse = space_to_channel_down(feats, 16)
    print(
        f"space-to-channel: {feats.resolution}^3 x{feats.channels} -> "
        f"{coarse.resolution}^3 x{coarse.channels}, "
        f"{len(coarse.coords)} parents"
    )

    # Going back up needs to know which children exist; derive the
    # occupancy masks from the fine grid and unfold.
    mask_coords, masks = occupancy_masks(feats)
    fine = channel_to_space_up(coarse, mask_coords, masks, 8)
    print(
        f"channel-to-space: restored {len(fine.coords)} fine voxels "
        f"(structure preserved: {np.array_equal(fine.coords, feats.coords)})"
    )


if __name__ == "__main__":
    main()
