"""Non-parametric sparse resampling: space-to-channel downsampling,
channel-to-space upsampling, and child-occupancy masks.

Child octants are enumerated in Morton order (bit = x + 2y + 4z) and
channel groups are contiguous blocks, so a constant field survives a
down/up round trip exactly wherever all eight children are active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import pack_coords, unpack_coords

# offset of child octant m: (m & 1, (m >> 1) & 1, (m >> 2) & 1)
MORTON_CHILD_OFFSETS = np.array(
    [[m & 1, (m >> 1) & 1, (m >> 2) & 1] for m in range(8)], dtype=np.int64
)


@dataclass
class SparseFeatureGrid:
    """Sparse voxel grid carrying a uniform-width feature vector per cell."""

    resolution: int
    coords: np.ndarray  # (L, 3) int64
    features: np.ndarray  # (L, C) float64

    def __post_init__(self) -> None:
        self.coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 3)
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if len(self.coords) != len(self.features):
            raise ValueError("coords and features disagree on row count")
        if len(self.coords) and (
            self.coords.min() < 0 or self.coords.max() >= self.resolution
        ):
            raise ValueError("coordinates out of range")
        keys = pack_coords(self.coords)
        order = np.argsort(keys, kind="stable")
        if len(keys) and np.any(np.diff(keys[order]) == 0):
            raise ValueError("duplicate coordinates")
        self.coords = np.ascontiguousarray(self.coords[order])
        self.features = np.ascontiguousarray(self.features[order])

    @property
    def channels(self) -> int:
        return self.features.shape[1]


def _octants(coords: np.ndarray) -> np.ndarray:
    """Morton child index (x + 2y + 4z of the low bits) per coordinate."""
    return (coords[:, 0] & 1) + 2 * (coords[:, 1] & 1) + 4 * (coords[:, 2] & 1)


def occupancy_masks(fine: SparseFeatureGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-parent 8-bit child occupancy of a fine grid.

    Returns (parent_coords (P, 3), masks (P,) uint8) for every parent with
    at least one active child, in canonical coordinate order.
    """
    if fine.resolution % 2 != 0:
        raise ValueError("fine resolution must be even")
    parents = fine.coords // 2
    keys = pack_coords(parents)
    uniq, inv = np.unique(keys, return_inverse=True)
    masks = np.zeros(len(uniq), dtype=np.uint8)
    np.bitwise_or.at(masks, inv, (1 << _octants(fine.coords)).astype(np.uint8))
    return unpack_coords(uniq), masks


def space_to_channel_down(grid: SparseFeatureGrid, c_out: int) -> SparseFeatureGrid:
    """Halve resolution by folding each parent's eight children into
    channels, then averaging contiguous channel groups down to ``c_out``.

    Missing children contribute zero vectors.
    """
    c_in = grid.channels
    if (8 * c_in) % c_out != 0:
        raise ValueError(f"c_out {c_out} must divide 8*C = {8 * c_in}")
    if grid.resolution % 2 != 0:
        raise ValueError("resolution must be even")
    parents = grid.coords // 2
    keys = pack_coords(parents)
    uniq, inv = np.unique(keys, return_inverse=True)
    stacked = np.zeros((len(uniq), 8, c_in))
    stacked[inv, _octants(grid.coords)] = grid.features
    group = (8 * c_in) // c_out
    feats = stacked.reshape(len(uniq), c_out, group).mean(axis=2)
    return SparseFeatureGrid(grid.resolution // 2, unpack_coords(uniq), feats)


def channel_to_space_up(
    grid: SparseFeatureGrid,
    mask_coords: np.ndarray,
    masks: np.ndarray,
    c_out: int,
) -> SparseFeatureGrid:
    """Double resolution by unstacking each parent's channels into eight
    Morton-ordered child blocks, duplicating each block up to ``c_out``
    channels. Only children flagged in the mask are emitted."""
    c_in = grid.channels
    if c_in % 8 != 0:
        raise ValueError("channel width must be divisible by 8")
    block = c_in // 8
    if c_out % block != 0:
        raise ValueError(f"c_out {c_out} must be a multiple of C'/8 = {block}")
    reps = c_out // block

    mask_keys = pack_coords(np.asarray(mask_coords, dtype=np.int64).reshape(-1, 3))
    order = np.argsort(mask_keys, kind="stable")
    mask_keys = mask_keys[order]
    masks = np.asarray(masks, dtype=np.uint8).reshape(-1)[order]

    pos = np.searchsorted(mask_keys, pack_coords(grid.coords))
    pos_c = np.minimum(pos, max(len(mask_keys) - 1, 0))
    found = len(mask_keys) > 0
    parent_masks = np.zeros(len(grid.coords), dtype=np.uint8)
    if found:
        hit = mask_keys[pos_c] == pack_coords(grid.coords)
        parent_masks[hit] = masks[pos_c[hit]]

    blocks = grid.features.reshape(-1, 8, block)
    child_feats = np.tile(blocks, (1, 1, reps))  # (P, 8, c_out)
    child_coords = (
        grid.coords[:, None, :] * 2 + MORTON_CHILD_OFFSETS[None, :, :]
    )  # (P, 8, 3)
    emit = (parent_masks[:, None] & (1 << np.arange(8, dtype=np.uint8))[None, :]) != 0
    return SparseFeatureGrid(
        grid.resolution * 2,
        child_coords[emit],
        child_feats[emit],
    )
