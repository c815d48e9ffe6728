import { describe, expect, it } from "vitest";

import {
  ArrayGridView,
  extractArrays,
  metricsArrays,
  voxelCount,
  voxelizeArrays,
} from "../src/index.js";
import { makeCube } from "./fixtures.js";

describe("voxelizeArrays", () => {
  it("produces a populated grid for a cube", () => {
    const cube = makeCube();
    const view = voxelizeArrays(cube.vertices, cube.faces, 16);
    expect(view.resolution).toBe(16);
    expect(voxelCount(view)).toBeGreaterThan(0);
    expect(view.shape.length).toBe(voxelCount(view) * 7);
    expect(view.material).toBeNull();
  });

  it("returns an empty view for an empty face list", () => {
    const view = voxelizeArrays([], [], 8);
    expect(voxelCount(view)).toBe(0);
  });

  it("rejects out-of-range face indices", () => {
    expect(() => voxelizeArrays([0, 0, 0, 1, 0, 0, 0, 1, 0], [0, 1, 9], 8)).toThrow(
      RangeError,
    );
  });

  it("bakes material on request", () => {
    const cube = makeCube();
    const view = voxelizeArrays(cube.vertices, cube.faces, 16, {
      bakeMaterials: true,
    });
    expect(view.material).not.toBeNull();
    expect(view.material!.length).toBe(voxelCount(view) * 6);
  });
});

describe("extractArrays", () => {
  it("round-trips a cube grid to a closed mesh", () => {
    const cube = makeCube();
    const view = voxelizeArrays(cube.vertices, cube.faces, 16);
    const out = extractArrays(view);
    expect(out.vertices.length).toBeGreaterThan(0);
    expect(out.faces.length % 3).toBe(0);
    expect(out.colors).toBeNull();
  });

  it("handles the empty grid without shelling out", () => {
    const empty: ArrayGridView = {
      resolution: 8,
      coords: new Uint16Array(0),
      shape: new Float32Array(0),
      material: null,
    };
    const out = extractArrays(empty);
    expect(out.vertices.length).toBe(0);
    expect(out.faces.length).toBe(0);
  });

  it("emits two triangles for a single flagged edge", () => {
    // four voxels around one +Z edge with base (1,1,1) at N=4
    const coords = Uint16Array.from([0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1, 1]);
    const shape = new Float32Array(4 * 7);
    for (let i = 0; i < 4; i++) {
      shape[i * 7] = 0.5;
      shape[i * 7 + 1] = 0.5;
      shape[i * 7 + 2] = 0.5;
      shape[i * 7 + 6] = 0.5;
    }
    shape[3 * 7 + 5] = 1; // +Z flag on voxel (1,1,1)
    const out = extractArrays({ resolution: 4, coords, shape, material: null });
    expect(out.vertices.length / 3).toBe(4);
    expect(out.faces.length / 3).toBe(2);
  });

  it("returns vertex colors for material grids", () => {
    const cube = makeCube();
    const view = voxelizeArrays(cube.vertices, cube.faces, 16, {
      bakeMaterials: true,
    });
    const out = extractArrays(view);
    expect(out.colors).not.toBeNull();
    expect(out.colors!.length).toBe((out.vertices.length / 3) * 6);
  });
});

describe("metricsArrays", () => {
  it("scores a self-comparison as zero", () => {
    const cube = makeCube();
    const report = metricsArrays(
      cube.vertices,
      cube.faces,
      cube.vertices,
      cube.faces,
      { samples: 2000, views: 8 },
    );
    expect(report.md).toBeCloseTo(0, 12);
    expect(report.md_f1).toBeCloseTo(1, 12);
  });

  it("is symmetric in md", () => {
    const cube = makeCube();
    const big = makeCube(0.6);
    const ab = metricsArrays(cube.vertices, cube.faces, big.vertices, big.faces, {
      samples: 2000,
      views: 8,
    });
    const ba = metricsArrays(big.vertices, big.faces, cube.vertices, cube.faces, {
      samples: 2000,
      views: 8,
    });
    expect(ab.md).toBeCloseTo(ba.md, 12);
  });
});
