/**
 * Flat-array entry points over the `ovx` CLI.
 *
 * Nothing here reimplements geometry: each call serializes its inputs,
 * shells out to the native pipeline, and parses the result, so outputs
 * are bit-for-bit identical to driving the CLI by hand.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { MeshArrays, decodePly, encodeObj, meshFromArrays } from "./mesh.js";
import {
  ArrayGridView,
  decodeGrid,
  encodeGrid,
  voxelCount,
} from "./ovx.js";

export * from "./mesh.js";
export * from "./ovx.js";

export class OvxCliError extends Error {
  constructor(
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(`ovx exited with code ${exitCode}: ${stderr.trim()}`);
    this.name = "OvxCliError";
  }
}

export interface RunResult {
  stdout: string;
}

/** Invoke the `ovx` executable; throws OvxCliError on nonzero exit. */
export function runOvx(args: string[], env?: Record<string, string>): RunResult {
  try {
    const stdout = execFileSync("ovx", args, {
      encoding: "utf-8",
      env: env ? { ...process.env, ...env } : process.env,
    });
    return { stdout };
  } catch (err) {
    const e = err as { status?: number; stderr?: string | Buffer };
    if (typeof e.status === "number") {
      const stderr =
        typeof e.stderr === "string" ? e.stderr : (e.stderr?.toString() ?? "");
      throw new OvxCliError(e.status, stderr);
    }
    throw err;
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "ovx-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export interface VoxelizeOptions {
  lambdaBound?: number;
  lambdaReg?: number;
  bakeMaterials?: boolean;
}

/**
 * Voxelize an indexed triangle mesh at resolution N.
 *
 * Vertices are V x 3 row-major, faces F x 3 zero-based. Index bounds are
 * validated before the native call; an empty face list yields an empty
 * grid view.
 */
export function voxelizeArrays(
  vertices: ArrayLike<number>,
  faces: ArrayLike<number>,
  resolution: number,
  options: VoxelizeOptions = {},
): ArrayGridView {
  const mesh = meshFromArrays(vertices, faces);
  return withTempDir((dir) => {
    const objPath = join(dir, "in.obj");
    const ovxPath = join(dir, "out.ovx");
    writeFileSync(objPath, encodeObj(mesh));
    const args = [
      "voxelize",
      "--in",
      objPath,
      "--res",
      String(resolution),
      "--out",
      ovxPath,
    ];
    if (options.lambdaBound !== undefined) {
      args.push("--lambda-bound", String(options.lambdaBound));
    }
    if (options.lambdaReg !== undefined) {
      args.push("--lambda-reg", String(options.lambdaReg));
    }
    if (options.bakeMaterials) {
      args.push("--bake");
    }
    runOvx(args);
    return decodeGrid(readFileSync(ovxPath));
  });
}

export interface ExtractResult {
  vertices: Float64Array;
  faces: Int32Array;
  /** V x 6 linear attributes when the grid carries material. */
  colors: Float64Array | null;
}

/** Extract the dual-contour mesh (and colors, if material is present). */
export function extractArrays(view: ArrayGridView): ExtractResult {
  if (voxelCount(view) === 0) {
    return {
      vertices: new Float64Array(0),
      faces: new Int32Array(0),
      colors: view.material !== null ? new Float64Array(0) : null,
    };
  }
  return withTempDir((dir) => {
    const ovxPath = join(dir, "in.ovx");
    const plyPath = join(dir, "out.ply");
    writeFileSync(ovxPath, encodeGrid(view));
    const args = ["mesh", "--in", ovxPath, "--out", plyPath];
    if (view.material !== null) {
      args.push("--colors", "vertex");
    }
    runOvx(args);
    const { mesh, colors } = decodePly(readFileSync(plyPath));
    return { vertices: mesh.vertices, faces: mesh.faces, colors };
  });
}

export interface MetricsOptions {
  samples?: number;
  views?: number;
  seed?: number;
}

export interface MetricsReport {
  md: number;
  md_f1: number;
  cd: number;
  cd_f1: number;
  [key: string]: number;
}

/** Score a reconstruction against a reference mesh (`ovx metrics --json`). */
export function metricsArrays(
  gtVertices: ArrayLike<number>,
  gtFaces: ArrayLike<number>,
  predVertices: ArrayLike<number>,
  predFaces: ArrayLike<number>,
  options: MetricsOptions = {},
): MetricsReport {
  const gt = meshFromArrays(gtVertices, gtFaces);
  const pred = meshFromArrays(predVertices, predFaces);
  return withTempDir((dir) => {
    const gtPath = join(dir, "gt.obj");
    const predPath = join(dir, "pred.obj");
    writeFileSync(gtPath, encodeObj(gt));
    writeFileSync(predPath, encodeObj(pred));
    const args = ["metrics", "--gt", gtPath, "--pred", predPath, "--json"];
    if (options.samples !== undefined) {
      args.push("--samples", String(options.samples));
    }
    if (options.views !== undefined) {
      args.push("--views", String(options.views));
    }
    if (options.seed !== undefined) {
      args.push("--seed", String(options.seed));
    }
    const { stdout } = runOvx(args);
    return JSON.parse(stdout) as MetricsReport;
  });
}

/** Re-export mesh types for consumers that only need the data shapes. */
export type { MeshArrays };
