/** Shared mesh fixtures: cube, sphere, and nested spheres. */

import { MeshArrays, meshFromArrays } from "../src/mesh.js";

export function makeCube(side = 0.8, center = [0.5, 0.5, 0.5]): MeshArrays {
  const h = side / 2;
  const verts: number[] = [];
  for (let i = 0; i < 8; i++) {
    verts.push(
      center[0] + (i & 1 ? h : -h),
      center[1] + (i & 2 ? h : -h),
      center[2] + (i & 4 ? h : -h),
    );
  }
  // outward-facing quads split into triangle fans
  const quads = [
    [0, 1, 3, 2],
    [4, 6, 7, 5],
    [0, 4, 5, 1],
    [2, 3, 7, 6],
    [0, 2, 6, 4],
    [1, 5, 7, 3],
  ];
  const faces: number[] = [];
  for (const [a, b, c, d] of quads) {
    faces.push(a, b, c, a, c, d);
  }
  return meshFromArrays(verts, faces);
}

export function makeSphere(
  nu = 24,
  nv = 24,
  radius = 0.4,
  center = [0.5, 0.5, 0.5],
): MeshArrays {
  const verts: number[] = [];
  for (let i = 0; i <= nv; i++) {
    const theta = (Math.PI * i) / nv;
    for (let j = 0; j < nu; j++) {
      const phi = (2 * Math.PI * j) / nu;
      verts.push(
        center[0] + radius * Math.sin(theta) * Math.cos(phi),
        center[1] + radius * Math.sin(theta) * Math.sin(phi),
        center[2] + radius * Math.cos(theta),
      );
    }
  }
  const faces: number[] = [];
  for (let i = 0; i < nv; i++) {
    for (let j = 0; j < nu; j++) {
      const a = i * nu + j;
      const b = i * nu + ((j + 1) % nu);
      const c = (i + 1) * nu + j;
      const d = (i + 1) * nu + ((j + 1) % nu);
      if (i > 0) faces.push(a, c, b);
      if (i < nv - 1) faces.push(b, c, d);
    }
  }
  return meshFromArrays(verts, faces);
}

export function makeNestedSpheres(): MeshArrays {
  const outer = makeSphere(24, 24, 0.4);
  const inner = makeSphere(24, 24, 0.2);
  const verts = new Float64Array(outer.vertices.length + inner.vertices.length);
  verts.set(outer.vertices);
  verts.set(inner.vertices, outer.vertices.length);
  const offset = outer.vertices.length / 3;
  const faces = new Int32Array(outer.faces.length + inner.faces.length);
  faces.set(outer.faces);
  for (let i = 0; i < inner.faces.length; i++) {
    faces[outer.faces.length + i] = inner.faces[i] + offset;
  }
  return { vertices: verts, faces };
}
