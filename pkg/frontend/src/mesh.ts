/**
 * Minimal mesh interchange: OBJ writing and binary little-endian PLY
 * reading, covering the profiles the `ovx` CLI produces and consumes.
 */

/** Indexed triangle mesh as flat arrays. */
export interface MeshArrays {
  /** V x 3 positions, row-major. */
  vertices: Float64Array;
  /** F x 3 zero-based vertex indices, row-major. */
  faces: Int32Array;
}

/** Per-vertex attributes decoded from a colored PLY. */
export interface VertexColors {
  /** V x 6 rows: linear rgb, metallic, roughness, opacity. */
  colors: Float64Array;
}

export class MeshParseError extends Error {
  constructor(location: string, message: string) {
    super(`${location}: ${message}`);
    this.name = "MeshParseError";
  }
}

export function meshFromArrays(
  vertices: ArrayLike<number>,
  faces: ArrayLike<number>,
): MeshArrays {
  if (vertices.length % 3 !== 0) {
    throw new RangeError("vertices length must be a multiple of 3");
  }
  if (faces.length % 3 !== 0) {
    throw new RangeError("faces length must be a multiple of 3");
  }
  const v = Float64Array.from(vertices as ArrayLike<number>);
  const f = Int32Array.from(faces as ArrayLike<number>);
  const nVerts = v.length / 3;
  for (let i = 0; i < f.length; i++) {
    if (f[i] < 0 || f[i] >= nVerts) {
      throw new RangeError(`face index ${f[i]} out of range [0, ${nVerts})`);
    }
  }
  return { vertices: v, faces: f };
}

/** Serialize a mesh to OBJ text (deterministic fixed-precision floats). */
export function encodeObj(mesh: MeshArrays): string {
  const lines: string[] = [];
  for (let i = 0; i < mesh.vertices.length; i += 3) {
    lines.push(
      `v ${mesh.vertices[i].toFixed(9)} ${mesh.vertices[i + 1].toFixed(9)} ` +
        `${mesh.vertices[i + 2].toFixed(9)}`,
    );
  }
  for (let i = 0; i < mesh.faces.length; i += 3) {
    lines.push(
      `f ${mesh.faces[i] + 1} ${mesh.faces[i + 1] + 1} ${mesh.faces[i + 2] + 1}`,
    );
  }
  return lines.join("\n") + "\n";
}

interface PlyProperty {
  name: string;
  type: string;
  listCountType: string | null;
}

const SCALAR_BYTES: Record<string, number> = {
  char: 1,
  uchar: 1,
  int8: 1,
  uint8: 1,
  short: 2,
  ushort: 2,
  int16: 2,
  uint16: 2,
  int: 4,
  uint: 4,
  int32: 4,
  uint32: 4,
  float: 4,
  float32: 4,
  double: 8,
  float64: 8,
};

function readScalar(view: DataView, offset: number, type: string): number {
  switch (type) {
    case "char":
    case "int8":
      return view.getInt8(offset);
    case "uchar":
    case "uint8":
      return view.getUint8(offset);
    case "short":
    case "int16":
      return view.getInt16(offset, true);
    case "ushort":
    case "uint16":
      return view.getUint16(offset, true);
    case "int":
    case "int32":
      return view.getInt32(offset, true);
    case "uint":
    case "uint32":
      return view.getUint32(offset, true);
    case "float":
    case "float32":
      return view.getFloat32(offset, true);
    case "double":
    case "float64":
      return view.getFloat64(offset, true);
    default:
      throw new MeshParseError("header", `unknown scalar type ${type}`);
  }
}

function srgbToLinear(c: number): number {
  return c <= 0.04045 ? c / 12.92 : Math.pow((c + 0.055) / 1.055, 2.4);
}

/** Parse a binary little-endian PLY produced by the `ovx mesh` command. */
export function decodePly(data: Uint8Array): {
  mesh: MeshArrays;
  colors: Float64Array | null;
} {
  const headerEnd = indexOfSequence(data, "end_header\n");
  if (headerEnd < 0) {
    throw new MeshParseError("header", "missing end_header");
  }
  const headerText = new TextDecoder("ascii").decode(data.subarray(0, headerEnd));
  if (!headerText.startsWith("ply")) {
    throw new MeshParseError("byte 0", "missing 'ply' magic");
  }
  const elements: { name: string; count: number; props: PlyProperty[] }[] = [];
  let format: string | null = null;
  for (const line of headerText.split("\n")) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "format") {
      format = parts[1];
    } else if (parts[0] === "element") {
      elements.push({ name: parts[1], count: parseInt(parts[2], 10), props: [] });
    } else if (parts[0] === "property") {
      const el = elements[elements.length - 1];
      if (!el) throw new MeshParseError("header", "property before element");
      if (parts[1] === "list") {
        el.props.push({ name: parts[4], type: parts[3], listCountType: parts[2] });
      } else {
        el.props.push({ name: parts[2], type: parts[1], listCountType: null });
      }
    }
  }
  if (format !== "binary_little_endian") {
    throw new MeshParseError("header", `unsupported format ${format}`);
  }

  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let offset = headerEnd + "end_header\n".length;
  const columns: Record<string, Record<string, number[] | number[][]>> = {};
  for (const el of elements) {
    const cols: Record<string, number[] | number[][]> = {};
    for (const p of el.props) cols[p.name] = [];
    for (let row = 0; row < el.count; row++) {
      for (const p of el.props) {
        if (p.listCountType !== null) {
          const n = readScalar(view, offset, p.listCountType);
          offset += SCALAR_BYTES[p.listCountType];
          const vals: number[] = [];
          for (let i = 0; i < n; i++) {
            vals.push(readScalar(view, offset, p.type));
            offset += SCALAR_BYTES[p.type];
          }
          (cols[p.name] as number[][]).push(vals);
        } else {
          (cols[p.name] as number[]).push(readScalar(view, offset, p.type));
          offset += SCALAR_BYTES[p.type];
        }
      }
    }
    columns[el.name] = cols;
  }

  const vcols = columns["vertex"];
  if (!vcols) throw new MeshParseError("header", "no vertex element");
  const xs = vcols["x"] as number[];
  const ys = vcols["y"] as number[];
  const zs = vcols["z"] as number[];
  if (!xs || !ys || !zs) {
    throw new MeshParseError("vertex element", "missing x/y/z");
  }
  const vertices = new Float64Array(xs.length * 3);
  for (let i = 0; i < xs.length; i++) {
    vertices[i * 3] = xs[i];
    vertices[i * 3 + 1] = ys[i];
    vertices[i * 3 + 2] = zs[i];
  }

  const tris: number[] = [];
  const fcols = columns["face"];
  if (fcols) {
    const lists = (fcols["vertex_indices"] ?? fcols["vertex_index"]) as number[][];
    if (!lists) throw new MeshParseError("face element", "no vertex index list");
    for (const poly of lists) {
      if (poly.length < 3) {
        throw new MeshParseError("face element", "face needs >= 3 vertices");
      }
      for (let i = 1; i < poly.length - 1; i++) {
        tris.push(poly[0], poly[i], poly[i + 1]);
      }
    }
  }

  let colors: Float64Array | null = null;
  if (vcols["red"] && vcols["green"] && vcols["blue"]) {
    const red = vcols["red"] as number[];
    const green = vcols["green"] as number[];
    const blue = vcols["blue"] as number[];
    const alpha = vcols["alpha"] as number[] | undefined;
    const metallic = vcols["metallic"] as number[] | undefined;
    const roughness = vcols["roughness"] as number[] | undefined;
    colors = new Float64Array(xs.length * 6);
    for (let i = 0; i < xs.length; i++) {
      colors[i * 6] = srgbToLinear(red[i] / 255);
      colors[i * 6 + 1] = srgbToLinear(green[i] / 255);
      colors[i * 6 + 2] = srgbToLinear(blue[i] / 255);
      colors[i * 6 + 3] = metallic ? metallic[i] : 0;
      colors[i * 6 + 4] = roughness ? roughness[i] : 1;
      colors[i * 6 + 5] = alpha ? alpha[i] / 255 : 1;
    }
  }
  return { mesh: { vertices, faces: Int32Array.from(tris) }, colors };
}

function indexOfSequence(data: Uint8Array, needle: string): number {
  const bytes = new TextEncoder().encode(needle);
  outer: for (let i = 0; i + bytes.length <= data.length; i++) {
    for (let j = 0; j < bytes.length; j++) {
      if (data[i + j] !== bytes[j]) continue outer;
    }
    return i;
  }
  return -1;
}
