// Client-side ray picking over the loaded scene.
//
// Matches the engine's rule exactly: a point is hit when its projection
// onto the ray is at t >= 0 and its perpendicular distance squared is
// within (pickRadius * size)^2; the winner has the smallest t, ties
// broken by the lower row id.

import { SceneData } from "./format.js";

export type Vec3 = [number, number, number];

export interface Ray {
  origin: Vec3;
  direction: Vec3; // unit length
}

export function makeRay(origin: Vec3, toward: Vec3): Ray {
  const dx = toward[0] - origin[0];
  const dy = toward[1] - origin[1];
  const dz = toward[2] - origin[2];
  const norm = Math.sqrt(dx * dx + dy * dy + dz * dz);
  if (!(norm > 0)) {
    throw new Error("ray direction is zero");
  }
  return { origin: [...origin], direction: [dx / norm, dy / norm, dz / norm] };
}

/** Index of the picked point, or null when nothing is under the ray. */
export function pickPoint(
  scene: SceneData,
  ray: Ray,
  pickRadius: number,
): number | null {
  if (!(pickRadius > 0)) {
    throw new Error("pickRadius must be positive");
  }
  const [ox, oy, oz] = ray.origin;
  const [dx, dy, dz] = ray.direction;
  let bestT = Infinity;
  let bestRow = 0n;
  let bestIdx = -1;
  for (let i = 0; i < scene.count; i++) {
    const rx = scene.position[i * 3] - ox;
    const ry = scene.position[i * 3 + 1] - oy;
    const rz = scene.position[i * 3 + 2] - oz;
    const t = rx * dx + ry * dy + rz * dz;
    if (t < 0) continue;
    const perp2 = rx * rx + ry * ry + rz * rz - t * t;
    const limit = pickRadius * scene.size[i];
    if (perp2 > limit * limit) continue;
    const row = scene.rowId[i];
    if (t < bestT || (t === bestT && row < bestRow)) {
      bestT = t;
      bestRow = row;
      bestIdx = i;
    }
  }
  return bestIdx === -1 ? null : bestIdx;
}
