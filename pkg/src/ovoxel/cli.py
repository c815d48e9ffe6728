"""``ovx`` command-line front end.

Subcommands: voxelize, mesh, metrics, downsample, resample, info.
Exit codes: 0 success, 2 bad arguments, 3 unreadable/unparseable input,
4 operation invalid for the given data.

``OVX_THREADS`` caps worker threads; results are byte-identical for any
value because all reductions run in a fixed canonical order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import ovx_format
from .grid import OVoxelGrid, downsample_structure
from .material import (
    BakeConfig,
    bake_materials,
    bake_texture_map,
    linear_to_srgb,
    query_material,
)
from .meshio import MeshParseError, read_mesh, write_obj, write_ply
from .metrics import evaluate_meshes
from .ovx_format import OvxFormatError
from .resample import SparseFeatureGrid, channel_to_space_up, occupancy_masks

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_STATE = 4


def _thread_budget() -> int:
    raw = os.environ.get("OVX_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fail(code: int, message: str) -> int:
    print(f"ovx: error: {message}", file=sys.stderr)
    return code


def cmd_voxelize(args: argparse.Namespace) -> int:
    from .voxelize import VoxelizeConfig, VoxelizeReport, voxelize

    mesh = read_mesh(args.in_path)
    cfg = VoxelizeConfig(
        resolution=args.res,
        lambda_bound=args.lambda_bound,
        lambda_reg=args.lambda_reg,
    )
    report = VoxelizeReport()
    grid = voxelize(mesh, cfg, report=report)
    if args.bake:
        grid = bake_materials(mesh, grid, BakeConfig())
    ovx_format.save_grid(args.out, grid)
    print(
        f"voxelized {mesh.num_faces} triangles at {args.res}^3: "
        f"{len(grid)} active voxels "
        f"({report.hermite_samples} surface samples, "
        f"{report.degenerate_triangles} degenerate triangles skipped)"
    )
    return EXIT_OK


def cmd_mesh(args: argparse.Namespace) -> int:
    from .surface import ExtractReport, extract_mesh

    grid = ovx_format.load_grid(args.in_path)
    report = ExtractReport()
    mesh = extract_mesh(grid, report=report)

    colors = None
    if args.colors == "vertex":
        if not grid.has_material:
            return _fail(EXIT_STATE, "grid carries no material; cannot color vertices")
        colors = query_material(grid, mesh.vertices)
    elif args.colors == "map":
        if not grid.has_material:
            return _fail(EXIT_STATE, "grid carries no material; cannot bake maps")
        if not args.uv_source:
            return _fail(EXIT_USAGE, "--colors map requires --uv-source")
        source = read_mesh(args.uv_source)
        if source.uvs is None:
            return _fail(EXIT_STATE, f"{args.uv_source} has no texture coordinates")
        maps = bake_texture_map(source, grid, args.map_res)
        _write_maps(args.out, maps)

    ext = os.path.splitext(args.out)[1].lower()
    if ext == ".obj":
        write_obj(args.out, mesh)
    else:
        write_ply(args.out, mesh, vertex_colors=colors)
    print(
        f"extracted {mesh.num_vertices} vertices, {mesh.num_faces} triangles "
        f"({report.emitted_quads} quads, {report.skipped_quads} skipped)"
    )
    return EXIT_OK


def _write_maps(mesh_out: str, maps: dict) -> None:
    from PIL import Image

    stem = os.path.splitext(mesh_out)[0]
    base = np.clip(
        np.concatenate(
            [linear_to_srgb(maps["base_color"][..., :3]), maps["base_color"][..., 3:]],
            axis=2,
        ),
        0.0,
        1.0,
    )
    # image rows run top to bottom; texture v runs bottom to top
    Image.fromarray(
        np.rint(base.transpose(1, 0, 2)[::-1] * 255).astype(np.uint8), "RGBA"
    ).save(stem + "_basecolor.png")
    mr = np.clip(maps["metallic_roughness"], 0.0, 1.0)
    Image.fromarray(
        np.rint(mr.transpose(1, 0, 2)[::-1] * 255).astype(np.uint8), "RGB"
    ).save(stem + "_mr.png")


def cmd_metrics(args: argparse.Namespace) -> int:
    gt = read_mesh(args.gt)
    pred = read_mesh(args.pred)
    report = evaluate_meshes(
        gt,
        pred,
        n_samples=args.samples,
        n_views=args.views,
        seed=args.seed,
    )
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        for line in report.to_kv_lines():
            print(line)
    return EXIT_OK


def cmd_downsample(args: argparse.Namespace) -> int:
    grid = ovx_format.load_grid(args.in_path)
    coords = downsample_structure(grid, args.factor)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, j, k in coords:
            fh.write(f"{i} {j} {k}\n")
    print(
        f"downsampled {len(grid)} voxels by {args.factor}: "
        f"{len(coords)} coarse cells"
    )
    return EXIT_OK


def cmd_resample(args: argparse.Namespace) -> int:
    from .resample import space_to_channel_down

    grid = ovx_format.load_features(args.in_path)
    if args.mode == "down":
        c_out = args.cout if args.cout else grid.channels
        out = space_to_channel_down(grid, c_out)
    else:
        block = grid.channels // 8 if grid.channels % 8 == 0 else 0
        if block == 0:
            return _fail(
                EXIT_STATE,
                f"channel width {grid.channels} is not divisible by 8",
            )
        c_out = args.cout if args.cout else block
        if args.mask:
            fine = ovx_format.load(args.mask)
            if isinstance(fine, OVoxelGrid):
                fine = SparseFeatureGrid(
                    fine.resolution, fine.coords, np.zeros((len(fine), 1))
                )
            if fine.resolution != grid.resolution * 2:
                return _fail(
                    EXIT_STATE,
                    f"mask resolution {fine.resolution} != 2x input "
                    f"{grid.resolution}",
                )
            mask_coords, masks = occupancy_masks(fine)
        else:
            # no mask given: emit all eight children of every parent
            mask_coords = grid.coords
            masks = np.full(len(grid.coords), 0xFF, dtype=np.uint8)
        out = channel_to_space_up(grid, mask_coords, masks, c_out)
    ovx_format.save_features(args.out, out)
    print(
        f"resampled {args.mode}: {grid.resolution}^3 x{grid.channels}ch -> "
        f"{out.resolution}^3 x{out.channels}ch, {len(out.coords)} cells"
    )
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    meta = ovx_format.info(args.in_path)
    print(f"resolution: {meta.resolution}")
    print(f"voxels: {meta.count}")
    print(f"shape: {'yes' if meta.has_shape else 'no'}")
    print(f"material: {'yes' if meta.has_material else 'no'}")
    if meta.generic_channels is not None:
        print(f"feature channels: {meta.generic_channels}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovx", description="sparse dual-grid voxel codec"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("voxelize", help="mesh -> voxel grid")
    p.add_argument("--in", dest="in_path", required=True, help="input mesh (.obj/.ply)")
    p.add_argument("--res", type=int, required=True, help="grid resolution N")
    p.add_argument("--lambda-bound", type=float, default=1.0)
    p.add_argument("--lambda-reg", type=float, default=1e-3)
    p.add_argument("--bake", action="store_true", help="also bake materials")
    p.add_argument("--out", required=True, help="output .ovx file")
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("mesh", help="voxel grid -> mesh")
    p.add_argument("--in", dest="in_path", required=True, help="input .ovx file")
    p.add_argument("--colors", choices=["vertex", "map"], default=None)
    p.add_argument("--uv-source", default=None, help="mesh providing the UV atlas")
    p.add_argument("--map-res", type=int, default=1024, help="baked map resolution")
    p.add_argument("--out", required=True, help="output mesh (.ply/.obj)")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("metrics", help="reconstruction quality metrics")
    p.add_argument("--gt", required=True, help="reference mesh")
    p.add_argument("--pred", required=True, help="mesh under test")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--views", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("downsample", help="structure coordinates at lower resolution")
    p.add_argument("--in", dest="in_path", required=True, help="input .ovx file")
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--out", required=True, help="output text file of i j k rows")
    p.set_defaults(func=cmd_downsample)

    p = sub.add_parser("resample", help="feature grid resolution transfer")
    p.add_argument("--in", dest="in_path", required=True, help="input features .ovx")
    p.add_argument("--mode", choices=["down", "up"], required=True)
    p.add_argument("--cout", type=int, default=None, help="output channel count")
    p.add_argument(
        "--mask",
        default=None,
        help="fine-resolution .ovx supplying child occupancy for --mode up",
    )
    p.add_argument("--out", required=True, help="output features .ovx")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("info", help="describe an .ovx file")
    p.add_argument("--in", dest="in_path", required=True)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    _thread_budget()  # validated for interface compatibility
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail(EXIT_INPUT, f"cannot read input: {exc}")
    except (MeshParseError, OvxFormatError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    except (ValueError, KeyError, IndexError) as exc:
        return _fail(EXIT_STATE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
