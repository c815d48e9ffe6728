"""OVX binary container for sparse voxel grids.

Layout (all little-endian):

    header   4s magic "OVX1", u32 version, u32 resolution, u64 voxel
             count L, u32 section flags (bit 0 shape, bit 1 material,
             bit 2 generic features) -- 24 bytes
    coords   L x 3 u16, lexicographically sorted (the canonical order,
             making files bit-reproducible for equal grids)
    shape    per voxel: 3 x f32 dual vertex, u8 edge-flag bitfield
             (bits 0/1/2 = +X/+Y/+Z), f32 splitting weight
    material per voxel: 6 x f32 (rgb, metallic, roughness, opacity)
    generic  u32 channel count C, then L x C f32

A file carries either a shape grid (with optional material) or a generic
feature grid, never both.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .grid import OVoxelGrid, WorldTransform, pack_coords
from .resample import SparseFeatureGrid

MAGIC = b"OVX1"
VERSION = 1
FLAG_SHAPE = 1
FLAG_MATERIAL = 2
FLAG_GENERIC = 4

_HEADER = struct.Struct("<4sIIQI")


class OvxFormatError(ValueError):
    """Raised on malformed OVX data; names the section that failed."""

    def __init__(self, section: str, message: str) -> None:
        super().__init__(f"OVX {section}: {message}")
        self.section = section


@dataclass
class OvxInfo:
    resolution: int
    count: int
    has_shape: bool
    has_material: bool
    generic_channels: int | None


def _shape_dtype() -> np.dtype:
    return np.dtype(
        [("v", "<f4", (3,)), ("flags", "u1"), ("gamma", "<f4")]
    )


def save_grid(path: str, grid: OVoxelGrid) -> None:
    """Write a shape grid (plus material when present)."""
    flags = FLAG_SHAPE | (FLAG_MATERIAL if grid.has_material else 0)
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC, VERSION, grid.resolution, len(grid), flags)
        )
        fh.write(np.ascontiguousarray(grid.coords, dtype="<u2").tobytes())
        rec = np.empty(len(grid), dtype=_shape_dtype())
        rec["v"] = grid.dual_vertices.astype("<f4")
        rec["flags"] = (
            grid.edge_flags[:, 0].astype(np.uint8)
            | (grid.edge_flags[:, 1].astype(np.uint8) << 1)
            | (grid.edge_flags[:, 2].astype(np.uint8) << 2)
        )
        rec["gamma"] = grid.split_weights.astype("<f4")
        fh.write(rec.tobytes())
        if grid.has_material:
            fh.write(np.ascontiguousarray(grid.material, dtype="<f4").tobytes())


def save_features(path: str, grid: SparseFeatureGrid) -> None:
    """Write a generic feature grid."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC, VERSION, grid.resolution, len(grid.coords), FLAG_GENERIC)
        )
        fh.write(np.ascontiguousarray(grid.coords, dtype="<u2").tobytes())
        fh.write(struct.pack("<I", grid.channels))
        fh.write(np.ascontiguousarray(grid.features, dtype="<f4").tobytes())


def _read_header(data: bytes) -> tuple[int, int, int]:
    if len(data) < _HEADER.size:
        raise OvxFormatError("header", f"file too short ({len(data)} bytes)")
    magic, version, resolution, count, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise OvxFormatError("header", f"bad magic {magic!r}")
    if version != VERSION:
        raise OvxFormatError("header", f"unsupported version {version}")
    if resolution < 1:
        raise OvxFormatError("header", f"invalid resolution {resolution}")
    if flags & FLAG_GENERIC and flags & (FLAG_SHAPE | FLAG_MATERIAL):
        raise OvxFormatError("header", "generic features exclude shape/material")
    if not flags & (FLAG_SHAPE | FLAG_GENERIC):
        raise OvxFormatError("header", "file carries neither shape nor features")
    return resolution, count, flags


def _take(data: bytes, offset: int, nbytes: int, section: str) -> tuple[bytes, int]:
    if offset + nbytes > len(data):
        raise OvxFormatError(
            section,
            f"truncated: need {nbytes} bytes at offset {offset}, have "
            f"{len(data) - offset}",
        )
    return data[offset : offset + nbytes], offset + nbytes


def _read_coords(data, offset, count, resolution):
    raw, offset = _take(data, offset, count * 6, "coords")
    coords = (
        np.frombuffer(raw, dtype="<u2").reshape(-1, 3).astype(np.int64)
    )
    if count and coords.max() >= resolution:
        raise OvxFormatError("coords", "coordinate exceeds resolution")
    keys = pack_coords(coords)
    if count and np.any(np.diff(keys) <= 0):
        raise OvxFormatError("coords", "coordinates not sorted or not unique")
    return coords, offset


def load(path: str) -> OVoxelGrid | SparseFeatureGrid:
    """Load either grid flavor, validating every section."""
    with open(path, "rb") as fh:
        data = fh.read()
    resolution, count, flags = _read_header(data)
    offset = _HEADER.size
    coords, offset = _read_coords(data, offset, count, resolution)

    if flags & FLAG_GENERIC:
        raw, offset = _take(data, offset, 4, "features")
        (channels,) = struct.unpack("<I", raw)
        raw, offset = _take(data, offset, count * channels * 4, "features")
        feats = np.frombuffer(raw, dtype="<f4").reshape(count, channels)
        _expect_end(data, offset)
        return SparseFeatureGrid(resolution, coords, feats.astype(np.float64))

    rec_raw, offset = _take(data, offset, count * _shape_dtype().itemsize, "shape")
    rec = np.frombuffer(rec_raw, dtype=_shape_dtype())
    dual = rec["v"].astype(np.float64)
    if count and (dual.min() < -1e-6 or dual.max() > 1 + 1e-6):
        raise OvxFormatError("shape", "dual vertex outside the unit cube")
    if count and rec["gamma"].min() <= 0.0:
        raise OvxFormatError("shape", "non-positive splitting weight")
    if count and rec["flags"].max() > 7:
        raise OvxFormatError("shape", "edge-flag bits above bit 2 are set")
    edge_flags = np.stack(
        [(rec["flags"] >> b) & 1 for b in range(3)], axis=1
    ).astype(bool)

    material = None
    if flags & FLAG_MATERIAL:
        raw, offset = _take(data, offset, count * 24, "material")
        material = np.frombuffer(raw, dtype="<f4").reshape(count, 6)
        if count and (material.min() < -1e-6 or material.max() > 1 + 1e-6):
            raise OvxFormatError("material", "channel outside [0,1]")
        material = np.clip(material.astype(np.float64), 0.0, 1.0)
    _expect_end(data, offset)

    return OVoxelGrid(
        resolution,
        coords,
        np.clip(dual, 0.0, 1.0),
        edge_flags,
        rec["gamma"].astype(np.float64),
        material=material,
        transform=WorldTransform(),
    )


def _expect_end(data: bytes, offset: int) -> None:
    if offset != len(data):
        raise OvxFormatError(
            "trailer", f"{len(data) - offset} unexpected trailing bytes"
        )


def load_grid(path: str) -> OVoxelGrid:
    grid = load(path)
    if not isinstance(grid, OVoxelGrid):
        raise OvxFormatError("header", "file holds generic features, not a shape grid")
    return grid


def load_features(path: str) -> SparseFeatureGrid:
    grid = load(path)
    if not isinstance(grid, SparseFeatureGrid):
        raise OvxFormatError("header", "file holds a shape grid, not generic features")
    return grid


def info(path: str) -> OvxInfo:
    with open(path, "rb") as fh:
        data = fh.read(_HEADER.size + 4)
    resolution, count, flags = _read_header(data)
    channels = None
    if flags & FLAG_GENERIC:
        with open(path, "rb") as fh:
            fh.seek(_HEADER.size + count * 6)
            raw = fh.read(4)
        if len(raw) == 4:
            (channels,) = struct.unpack("<I", raw)
    return OvxInfo(
        resolution=resolution,
        count=count,
        has_shape=bool(flags & FLAG_SHAPE),
        has_material=bool(flags & FLAG_MATERIAL),
        generic_channels=channels,
    )
