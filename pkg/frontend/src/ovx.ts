/**
 * OVX binary container I/O.
 *
 * Layout (little-endian):
 *   header   "OVX1", u32 version, u32 resolution, u64 voxel count L,
 *            u32 section flags (bit 0 shape, bit 1 material,
 *            bit 2 generic features) — 24 bytes
 *   coords   L x 3 u16, lexicographically sorted
 *   shape    per voxel: 3 x f32 dual vertex, u8 edge-flag bitfield
 *            (bits 0/1/2 = +X/+Y/+Z), f32 splitting weight — 17 bytes
 *   material per voxel: 6 x f32 (rgb, metallic, roughness, opacity)
 *   generic  u32 channel count C, then L x C f32
 */

export const OVX_MAGIC = "OVX1";
export const OVX_VERSION = 1;
export const FLAG_SHAPE = 1;
export const FLAG_MATERIAL = 2;
export const FLAG_GENERIC = 4;

const HEADER_BYTES = 24;
const SHAPE_RECORD_BYTES = 17;

/** A sparse shape grid flattened to structure-of-arrays. */
export interface ArrayGridView {
  resolution: number;
  /** L x 3 voxel coordinates, row-major, lexicographically sorted. */
  coords: Uint16Array;
  /** L x 7 shape rows: dual vertex x/y/z, three 0|1 edge flags, gamma. */
  shape: Float32Array;
  /** Optional L x 6 material rows: rgb, metallic, roughness, opacity. */
  material: Float32Array | null;
}

/** A sparse grid of uniform-width feature vectors. */
export interface FeatureGridView {
  resolution: number;
  coords: Uint16Array;
  channels: number;
  features: Float32Array;
}

export class OvxFormatError extends Error {
  constructor(section: string, message: string) {
    super(`OVX ${section}: ${message}`);
    this.name = "OvxFormatError";
  }
}

export function voxelCount(view: ArrayGridView): number {
  return view.coords.length / 3;
}

function packKey(i: number, j: number, k: number): bigint {
  return (BigInt(i) << 32n) | (BigInt(j) << 16n) | BigInt(k);
}

function checkCoords(coords: Uint16Array, resolution: number): void {
  let prev = -1n;
  for (let r = 0; r < coords.length; r += 3) {
    if (
      coords[r] >= resolution ||
      coords[r + 1] >= resolution ||
      coords[r + 2] >= resolution
    ) {
      throw new OvxFormatError("coords", "coordinate exceeds resolution");
    }
    const key = packKey(coords[r], coords[r + 1], coords[r + 2]);
    if (key <= prev) {
      throw new OvxFormatError("coords", "coordinates not sorted or not unique");
    }
    prev = key;
  }
}

function writeHeader(
  view: DataView,
  resolution: number,
  count: number,
  flags: number,
): void {
  for (let i = 0; i < 4; i++) view.setUint8(i, OVX_MAGIC.charCodeAt(i));
  view.setUint32(4, OVX_VERSION, true);
  view.setUint32(8, resolution, true);
  view.setBigUint64(12, BigInt(count), true);
  view.setUint32(20, flags, true);
}

/** Serialize a shape grid to OVX bytes, identical to the native writer. */
export function encodeGrid(grid: ArrayGridView): Uint8Array {
  const count = voxelCount(grid);
  if (grid.shape.length !== count * 7) {
    throw new OvxFormatError("shape", "shape rows disagree with coords");
  }
  if (grid.material !== null && grid.material.length !== count * 6) {
    throw new OvxFormatError("material", "material rows disagree with coords");
  }
  checkCoords(grid.coords, grid.resolution);
  const flags = FLAG_SHAPE | (grid.material !== null ? FLAG_MATERIAL : 0);
  const size =
    HEADER_BYTES +
    count * 6 +
    count * SHAPE_RECORD_BYTES +
    (grid.material !== null ? count * 24 : 0);
  const out = new Uint8Array(size);
  const view = new DataView(out.buffer);
  writeHeader(view, grid.resolution, count, flags);
  let offset = HEADER_BYTES;
  for (let i = 0; i < count * 3; i++) {
    view.setUint16(offset, grid.coords[i], true);
    offset += 2;
  }
  for (let i = 0; i < count; i++) {
    const row = i * 7;
    view.setFloat32(offset, grid.shape[row], true);
    view.setFloat32(offset + 4, grid.shape[row + 1], true);
    view.setFloat32(offset + 8, grid.shape[row + 2], true);
    const bits =
      (grid.shape[row + 3] !== 0 ? 1 : 0) |
      (grid.shape[row + 4] !== 0 ? 2 : 0) |
      (grid.shape[row + 5] !== 0 ? 4 : 0);
    view.setUint8(offset + 12, bits);
    view.setFloat32(offset + 13, grid.shape[row + 6], true);
    offset += SHAPE_RECORD_BYTES;
  }
  if (grid.material !== null) {
    for (let i = 0; i < count * 6; i++) {
      view.setFloat32(offset, grid.material[i], true);
      offset += 4;
    }
  }
  return out;
}

/** Serialize a generic feature grid to OVX bytes. */
export function encodeFeatures(grid: FeatureGridView): Uint8Array {
  const count = grid.coords.length / 3;
  if (grid.features.length !== count * grid.channels) {
    throw new OvxFormatError("features", "feature rows disagree with coords");
  }
  checkCoords(grid.coords, grid.resolution);
  const size = HEADER_BYTES + count * 6 + 4 + count * grid.channels * 4;
  const out = new Uint8Array(size);
  const view = new DataView(out.buffer);
  writeHeader(view, grid.resolution, count, FLAG_GENERIC);
  let offset = HEADER_BYTES;
  for (let i = 0; i < count * 3; i++) {
    view.setUint16(offset, grid.coords[i], true);
    offset += 2;
  }
  view.setUint32(offset, grid.channels, true);
  offset += 4;
  for (let i = 0; i < grid.features.length; i++) {
    view.setFloat32(offset, grid.features[i], true);
    offset += 4;
  }
  return out;
}

function readHeader(view: DataView, length: number) {
  if (length < HEADER_BYTES) {
    throw new OvxFormatError("header", `file too short (${length} bytes)`);
  }
  let magic = "";
  for (let i = 0; i < 4; i++) magic += String.fromCharCode(view.getUint8(i));
  if (magic !== OVX_MAGIC) {
    throw new OvxFormatError("header", `bad magic '${magic}'`);
  }
  const version = view.getUint32(4, true);
  if (version !== OVX_VERSION) {
    throw new OvxFormatError("header", `unsupported version ${version}`);
  }
  const resolution = view.getUint32(8, true);
  if (resolution < 1) {
    throw new OvxFormatError("header", `invalid resolution ${resolution}`);
  }
  const count = Number(view.getBigUint64(12, true));
  const flags = view.getUint32(20, true);
  if (flags & FLAG_GENERIC && flags & (FLAG_SHAPE | FLAG_MATERIAL)) {
    throw new OvxFormatError("header", "generic features exclude shape/material");
  }
  if (!(flags & (FLAG_SHAPE | FLAG_GENERIC))) {
    throw new OvxFormatError("header", "file carries neither shape nor features");
  }
  return { resolution, count, flags };
}

function need(offset: number, bytes: number, length: number, section: string) {
  if (offset + bytes > length) {
    throw new OvxFormatError(
      section,
      `truncated: need ${bytes} bytes at offset ${offset}, have ${length - offset}`,
    );
  }
}

/** Parse OVX bytes holding a shape grid. */
export function decodeGrid(data: Uint8Array): ArrayGridView {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const { resolution, count, flags } = readHeader(view, data.byteLength);
  if (flags & FLAG_GENERIC) {
    throw new OvxFormatError("header", "file holds generic features, not a shape grid");
  }
  let offset = HEADER_BYTES;
  need(offset, count * 6, data.byteLength, "coords");
  const coords = new Uint16Array(count * 3);
  for (let i = 0; i < count * 3; i++) {
    coords[i] = view.getUint16(offset, true);
    offset += 2;
  }
  checkCoords(coords, resolution);
  need(offset, count * SHAPE_RECORD_BYTES, data.byteLength, "shape");
  const shape = new Float32Array(count * 7);
  for (let i = 0; i < count; i++) {
    const row = i * 7;
    shape[row] = view.getFloat32(offset, true);
    shape[row + 1] = view.getFloat32(offset + 4, true);
    shape[row + 2] = view.getFloat32(offset + 8, true);
    const bits = view.getUint8(offset + 12);
    if (bits > 7) {
      throw new OvxFormatError("shape", "edge-flag bits above bit 2 are set");
    }
    shape[row + 3] = bits & 1;
    shape[row + 4] = (bits >> 1) & 1;
    shape[row + 5] = (bits >> 2) & 1;
    shape[row + 6] = view.getFloat32(offset + 13, true);
    if (shape[row + 6] <= 0) {
      throw new OvxFormatError("shape", "non-positive splitting weight");
    }
    offset += SHAPE_RECORD_BYTES;
  }
  let material: Float32Array | null = null;
  if (flags & FLAG_MATERIAL) {
    need(offset, count * 24, data.byteLength, "material");
    material = new Float32Array(count * 6);
    for (let i = 0; i < count * 6; i++) {
      material[i] = view.getFloat32(offset, true);
      offset += 4;
    }
  }
  if (offset !== data.byteLength) {
    throw new OvxFormatError(
      "trailer",
      `${data.byteLength - offset} unexpected trailing bytes`,
    );
  }
  return { resolution, coords, shape, material };
}

/** Parse OVX bytes holding a generic feature grid. */
export function decodeFeatures(data: Uint8Array): FeatureGridView {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const { resolution, count, flags } = readHeader(view, data.byteLength);
  if (!(flags & FLAG_GENERIC)) {
    throw new OvxFormatError("header", "file holds a shape grid, not generic features");
  }
  let offset = HEADER_BYTES;
  need(offset, count * 6, data.byteLength, "coords");
  const coords = new Uint16Array(count * 3);
  for (let i = 0; i < count * 3; i++) {
    coords[i] = view.getUint16(offset, true);
    offset += 2;
  }
  checkCoords(coords, resolution);
  need(offset, 4, data.byteLength, "features");
  const channels = view.getUint32(offset, true);
  offset += 4;
  need(offset, count * channels * 4, data.byteLength, "features");
  const features = new Float32Array(count * channels);
  for (let i = 0; i < features.length; i++) {
    features[i] = view.getFloat32(offset, true);
    offset += 4;
  }
  if (offset !== data.byteLength) {
    throw new OvxFormatError(
      "trailer",
      `${data.byteLength - offset} unexpected trailing bytes`,
    );
  }
  return { resolution, coords, channels, features };
}
