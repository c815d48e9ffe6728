"""Mesh file I/O: Wavefront OBJ (+minimal MTL) and PLY.

OBJ reading triangulates polygon faces as fans and resolves per-corner
texture coordinates and per-face materials. PLY supports ASCII and
little-endian binary reading; writing is always binary little-endian and
can carry per-vertex color/metallic/roughness attributes.

Parse failures raise MeshParseError with the offending line or byte
offset, so malformed assets fail loudly instead of producing garbage.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .material import TextureSet, linear_to_srgb, srgb_to_linear
from .meshdata import MaterialSpec, TriangleMesh


class MeshParseError(ValueError):
    def __init__(self, path: str, location: str, message: str) -> None:
        super().__init__(f"{path}: {location}: {message}")
        self.path = path
        self.location = location


def _load_texture(path: str) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGBA"), dtype=np.float64) / 255.0


def read_obj(path: str) -> TriangleMesh:
    """Load an OBJ file, fan-triangulating polygons.

    ``usemtl``/``mtllib`` directives populate per-triangle material ids;
    unresolvable materials fall back to a default spec.
    """
    vertices: list[list[float]] = []
    texcoords: list[list[float]] = []
    faces: list[list[int]] = []
    face_uvs: list[list[int]] = []  # parallel vt indices, -1 when absent
    face_mats: list[int] = []
    materials: list[MaterialSpec] = [MaterialSpec()]
    mat_index: dict[str, int] = {}
    current_mat = 0
    any_uv = False

    def vert_index(token: str, count: int, lineno: int, what: str) -> int:
        idx = int(token)
        if idx < 0:
            idx += count
        else:
            idx -= 1
        if not 0 <= idx < count:
            raise MeshParseError(
                path, f"line {lineno}", f"{what} index {token} out of range"
            )
        return idx

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    vertices.append([float(x) for x in parts[1:4]])
                elif tag == "vt":
                    texcoords.append([float(parts[1]), float(parts[2])])
                elif tag == "f":
                    corners = []
                    uvs = []
                    for tok in parts[1:]:
                        fields = tok.split("/")
                        corners.append(
                            vert_index(fields[0], len(vertices), lineno, "vertex")
                        )
                        if len(fields) > 1 and fields[1]:
                            uvs.append(
                                vert_index(
                                    fields[1], len(texcoords), lineno, "texcoord"
                                )
                            )
                            any_uv = True
                        else:
                            uvs.append(-1)
                    if len(corners) < 3:
                        raise MeshParseError(
                            path, f"line {lineno}", "face needs >= 3 vertices"
                        )
                    for i in range(1, len(corners) - 1):
                        faces.append([corners[0], corners[i], corners[i + 1]])
                        face_uvs.append([uvs[0], uvs[i], uvs[i + 1]])
                        face_mats.append(current_mat)
                elif tag == "mtllib":
                    mtl_path = os.path.join(os.path.dirname(path), parts[1])
                    if os.path.exists(mtl_path):
                        for spec in read_mtl(mtl_path):
                            mat_index[spec.name] = len(materials)
                            materials.append(spec)
                elif tag == "usemtl":
                    name = parts[1] if len(parts) > 1 else "default"
                    if name not in mat_index:
                        mat_index[name] = len(materials)
                        materials.append(MaterialSpec(name=name))
                    current_mat = mat_index[name]
            except MeshParseError:
                raise
            except (ValueError, IndexError) as exc:
                raise MeshParseError(path, f"line {lineno}", str(exc)) from exc

    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    uvs_out = None
    if any_uv and texcoords:
        tc = np.asarray(texcoords, dtype=np.float64).reshape(-1, 2)
        fuv = np.asarray(face_uvs, dtype=np.int64).reshape(-1, 3)
        uvs_out = tc[np.clip(fuv, 0, None)]
        uvs_out[fuv < 0] = 0.0
    return TriangleMesh(
        verts,
        tris,
        uvs=uvs_out,
        material_ids=np.asarray(face_mats, dtype=np.int64) if faces else None,
        materials=materials,
    )


def read_mtl(path: str) -> list[MaterialSpec]:
    """Minimal MTL subset: newmtl, Kd, d, Pm, Pr, map_Kd."""
    specs: list[MaterialSpec] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "newmtl":
                    specs.append(MaterialSpec(name=parts[1]))
                elif not specs:
                    continue
                elif parts[0] == "Kd":
                    specs[-1].base_color_factor[:3] = [float(x) for x in parts[1:4]]
                elif parts[0] == "d":
                    specs[-1].base_color_factor[3] = float(parts[1])
                elif parts[0] == "Pm":
                    specs[-1].metallic_factor = float(parts[1])
                elif parts[0] == "Pr":
                    specs[-1].roughness_factor = float(parts[1])
                elif parts[0] == "map_Kd":
                    tex_path = os.path.join(os.path.dirname(path), parts[-1])
                    if os.path.exists(tex_path):
                        specs[-1].textures = TextureSet.from_srgb_images(
                            _load_texture(tex_path)
                        )
            except (ValueError, IndexError) as exc:
                raise MeshParseError(path, f"line {lineno}", str(exc)) from exc
    return specs


def write_obj(path: str, mesh: TriangleMesh, write_mtl: bool = False) -> None:
    lines = ["# exported triangle mesh"]
    mtl_path = os.path.splitext(path)[0] + ".mtl"
    if write_mtl and mesh.materials:
        lines.append(f"mtllib {os.path.basename(mtl_path)}")
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    if mesh.uvs is not None:
        for uv in mesh.uvs.reshape(-1, 2):
            lines.append(f"vt {uv[0]:.9g} {uv[1]:.9g}")
        for t, f in enumerate(mesh.faces):
            base = 3 * t
            lines.append(
                "f "
                + " ".join(f"{f[c] + 1}/{base + c + 1}" for c in range(3))
            )
    else:
        for f in mesh.faces:
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    if write_mtl and mesh.materials:
        out = []
        for spec in mesh.materials:
            out.append(f"newmtl {spec.name}")
            kd = spec.base_color_factor
            out.append(f"Kd {kd[0]:.6g} {kd[1]:.6g} {kd[2]:.6g}")
            out.append(f"d {kd[3]:.6g}")
            out.append(f"Pm {spec.metallic_factor:.6g}")
            out.append(f"Pr {spec.roughness_factor:.6g}")
        with open(mtl_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# PLY

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class PlyMeshData:
    """A loaded PLY: geometry plus any recognized per-vertex attributes."""

    mesh: TriangleMesh
    vertex_colors: np.ndarray | None = None  # (V, 6) linear rgb, m, r, opacity


def read_ply(path: str) -> PlyMeshData:
    with open(path, "rb") as fh:
        data = fh.read()

    if not data.startswith(b"ply"):
        raise MeshParseError(path, "byte 0", "missing 'ply' magic")
    header_end = data.find(b"end_header\n")
    if header_end < 0:
        raise MeshParseError(path, "header", "missing end_header")
    body_start = header_end + len(b"end_header\n")
    header = data[:header_end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements: list[tuple[str, int, list[tuple[str, str, str | None]]]] = []
    for lineno, line in enumerate(header, start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshParseError(
                    path, f"header line {lineno}", "property before element"
                )
            if parts[1] == "list":
                elements[-1][2].append((parts[4], parts[3], parts[2]))
            else:
                elements[-1][2].append((parts[2], parts[1], None))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshParseError(path, "header", f"unsupported format {fmt!r}")

    parsed: dict[str, dict[str, np.ndarray | list]] = {}
    if fmt == "ascii":
        tokens = data[body_start:].split()
        cursor = 0
        for name, count, props in elements:
            cols: dict[str, list] = {p[0]: [] for p in props}
            for row in range(count):
                for pname, ptype, list_count_type in props:
                    try:
                        if list_count_type is not None:
                            n = int(tokens[cursor]); cursor += 1
                            vals = [float(tokens[cursor + i]) for i in range(n)]
                            cursor += n
                            cols[pname].append(vals)
                        else:
                            cols[pname].append(float(tokens[cursor]))
                            cursor += 1
                    except (IndexError, ValueError) as exc:
                        raise MeshParseError(
                            path,
                            f"element {name} row {row}",
                            f"bad or missing value for {pname}",
                        ) from exc
            parsed[name] = cols
    else:
        offset = body_start
        for name, count, props in elements:
            has_list = any(p[2] is not None for p in props)
            if not has_list:
                dtype = np.dtype(
                    [(p[0], "<" + _PLY_SCALARS[p[1]]) for p in props]
                )
                need = dtype.itemsize * count
                if offset + need > len(data):
                    raise MeshParseError(
                        path, f"byte {offset}", f"truncated element {name}"
                    )
                rec = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
                offset += need
                parsed[name] = {p[0]: rec[p[0]] for p in props}
            else:
                cols = {p[0]: [] for p in props}
                for row in range(count):
                    for pname, ptype, list_count_type in props:
                        try:
                            if list_count_type is not None:
                                cdt = np.dtype("<" + _PLY_SCALARS[list_count_type])
                                n = int(
                                    np.frombuffer(data, cdt, 1, offset)[0]
                                )
                                offset += cdt.itemsize
                                vdt = np.dtype("<" + _PLY_SCALARS[ptype])
                                vals = np.frombuffer(data, vdt, n, offset)
                                offset += vdt.itemsize * n
                                cols[pname].append(vals.tolist())
                            else:
                                vdt = np.dtype("<" + _PLY_SCALARS[ptype])
                                cols[pname].append(
                                    float(np.frombuffer(data, vdt, 1, offset)[0])
                                )
                                offset += vdt.itemsize
                        except (ValueError, IndexError) as exc:
                            raise MeshParseError(
                                path,
                                f"byte {offset}",
                                f"truncated {name}.{pname} at row {row}",
                            ) from exc
                parsed[name] = cols

    if "vertex" not in parsed:
        raise MeshParseError(path, "header", "no vertex element")
    vcols = parsed["vertex"]
    try:
        verts = np.stack(
            [np.asarray(vcols[a], dtype=np.float64) for a in ("x", "y", "z")], axis=1
        )
    except KeyError as exc:
        raise MeshParseError(path, "vertex element", f"missing {exc}") from exc

    faces = np.zeros((0, 3), dtype=np.int64)
    if "face" in parsed:
        fcols = parsed["face"]
        key = "vertex_indices" if "vertex_indices" in fcols else "vertex_index"
        if key not in fcols:
            raise MeshParseError(path, "face element", "no vertex index list")
        tris = []
        for row, poly in enumerate(fcols[key]):
            if len(poly) < 3:
                raise MeshParseError(
                    path, f"face row {row}", "face needs >= 3 vertices"
                )
            for i in range(1, len(poly) - 1):
                tris.append([poly[0], poly[i], poly[i + 1]])
        faces = np.asarray(tris, dtype=np.int64).reshape(-1, 3)

    colors = None
    if all(c in vcols for c in ("red", "green", "blue")):
        rgb = srgb_to_linear(
            np.stack(
                [
                    np.asarray(vcols[c], dtype=np.float64)
                    for c in ("red", "green", "blue")
                ],
                axis=1,
            )
            / 255.0
        )
        alpha = (
            np.asarray(vcols["alpha"], dtype=np.float64) / 255.0
            if "alpha" in vcols
            else np.ones(len(verts))
        )
        metallic = (
            np.asarray(vcols["metallic"], dtype=np.float64)
            if "metallic" in vcols
            else np.zeros(len(verts))
        )
        roughness = (
            np.asarray(vcols["roughness"], dtype=np.float64)
            if "roughness" in vcols
            else np.ones(len(verts))
        )
        colors = np.concatenate(
            [rgb, metallic[:, None], roughness[:, None], alpha[:, None]], axis=1
        )
    return PlyMeshData(TriangleMesh(verts, faces), vertex_colors=colors)


def write_ply(
    path: str, mesh: TriangleMesh, vertex_colors: np.ndarray | None = None
) -> None:
    """Binary little-endian PLY; colors are (V, 6) linear attributes
    (rgb, metallic, roughness, opacity) stored as uchar RGBA (sRGB) plus
    float metallic/roughness properties."""
    n_v, n_f = len(mesh.vertices), len(mesh.faces)
    lines = [
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {n_v}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if vertex_colors is not None:
        vertex_colors = np.asarray(vertex_colors, dtype=np.float64).reshape(-1, 6)
        if len(vertex_colors) != n_v:
            raise ValueError("vertex_colors must have one row per vertex")
        lines += [
            "property uchar red",
            "property uchar green",
            "property uchar blue",
            "property uchar alpha",
            "property float metallic",
            "property float roughness",
        ]
    lines += [
        f"element face {n_f}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        if vertex_colors is None:
            fh.write(
                np.ascontiguousarray(mesh.vertices, dtype="<f4").tobytes()
            )
        else:
            dtype = np.dtype(
                [
                    ("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                    ("red", "u1"), ("green", "u1"), ("blue", "u1"), ("alpha", "u1"),
                    ("metallic", "<f4"), ("roughness", "<f4"),
                ]
            )
            rec = np.empty(n_v, dtype=dtype)
            rec["x"], rec["y"], rec["z"] = mesh.vertices.T.astype("<f4")
            srgb = np.rint(linear_to_srgb(vertex_colors[:, :3]) * 255.0)
            rec["red"], rec["green"], rec["blue"] = srgb.T.astype("u1")
            rec["alpha"] = np.rint(
                np.clip(vertex_colors[:, 5], 0, 1) * 255.0
            ).astype("u1")
            rec["metallic"] = vertex_colors[:, 3].astype("<f4")
            rec["roughness"] = vertex_colors[:, 4].astype("<f4")
            fh.write(rec.tobytes())

        fdtype = np.dtype([("n", "u1"), ("a", "<i4"), ("b", "<i4"), ("c", "<i4")])
        frec = np.empty(n_f, dtype=fdtype)
        frec["n"] = 3
        frec["a"], frec["b"], frec["c"] = mesh.faces.T.astype("<i4")
        fh.write(frec.tobytes())


def read_mesh(path: str) -> TriangleMesh:
    """Dispatch on file extension (.obj or .ply)."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        return read_obj(path)
    if ext == ".ply":
        return read_ply(path).mesh
    raise ValueError(f"unsupported mesh format {ext!r} for {path}")
