// Camera pose math: poses stay valid protocol viewpoints, the pick ray
// agrees with matrix unprojection, and projection puts points where
// the renderer will draw them.

import { describe, expect, it } from "vitest";
import { OrbitCamera, rayThroughNdc, viewProjection } from "../src/camera.js";
import { mat4Invert, transformPoint } from "../src/math3d.js";
import { Viewpoint } from "../src/protocol.js";
import { mulberry32, pythonJson } from "./helpers.js";

function quatNorm(q: [number, number, number, number]): number {
  return Math.hypot(q[0], q[1], q[2], q[3]);
}

describe("OrbitCamera", () => {
  it("starts on the default protocol viewpoint", () => {
    const vp = new OrbitCamera().viewpoint();
    expect(vp.position[0]).toBeCloseTo(0.5, 12);
    expect(vp.position[1]).toBeCloseTo(0.5, 12);
    expect(vp.position[2]).toBeCloseTo(2.5, 12);
    expect(vp.orientation).toEqual([1, 0, 0, 0]);
    expect(vp.field_of_view).toBe(60);
  });

  it("keeps a unit quaternion and fixed range through any motion", () => {
    const rand = mulberry32(99);
    const cam = new OrbitCamera();
    for (let i = 0; i < 200; i++) {
      cam.orbit(rand() * 2 - 1, rand() * 2 - 1);
      cam.dolly(0.5 + rand());
      const vp = cam.viewpoint();
      expect(Math.abs(quatNorm(vp.orientation) - 1)).toBeLessThan(1e-6);
      const r = Math.hypot(
        vp.position[0] - 0.5,
        vp.position[1] - 0.5,
        vp.position[2] - 0.5,
      );
      expect(r).toBeCloseTo(cam.distance, 9);
      expect(cam.distance).toBeGreaterThanOrEqual(0.05);
      expect(cam.distance).toBeLessThanOrEqual(50);
      expect(Math.abs(cam.pitch)).toBeLessThan(Math.PI / 2);
    }
  });

  it("produces poses the session protocol accepts", () => {
    const rand = mulberry32(5);
    const cam = new OrbitCamera();
    const poses: Viewpoint[] = [];
    for (let i = 0; i < 20; i++) {
      cam.orbit(rand() * 6 - 3, rand() * 2 - 1);
      cam.dolly(0.7 + rand() * 0.6);
      poses.push(cam.viewpoint());
    }
    const script = `
import json
from hyperviz import Viewpoint
poses = json.loads(r'''${JSON.stringify(poses)}''')
ok = []
for p in poses:
    try:
        Viewpoint.from_json(p)
        ok.append(True)
    except ValueError:
        ok.append(False)
print(json.dumps(ok))
`;
    expect(pythonJson<boolean[]>(script)).toEqual(poses.map(() => true));
  });
});

describe("rayThroughNdc", () => {
  const randomPose = (rand: () => number): Viewpoint => {
    const cam = new OrbitCamera();
    cam.orbit(rand() * 6 - 3, rand() * 2.8 - 1.4);
    cam.dolly(0.4 + rand() * 1.5);
    cam.fov = 30 + rand() * 90;
    return cam.viewpoint();
  };

  it("matches unprojection through the inverse view-projection", () => {
    const rand = mulberry32(31);
    for (let i = 0; i < 50; i++) {
      const vp = randomPose(rand);
      const aspect = 0.5 + rand() * 2;
      const ndcX = rand() * 2 - 1;
      const ndcY = rand() * 2 - 1;
      const inv = mat4Invert(viewProjection(vp, aspect));
      const near = transformPoint(inv, [ndcX, ndcY, -1]);
      const far = transformPoint(inv, [ndcX, ndcY, 1]);
      const len = Math.hypot(far[0] - near[0], far[1] - near[1], far[2] - near[2]);
      const expected = [
        (far[0] - near[0]) / len,
        (far[1] - near[1]) / len,
        (far[2] - near[2]) / len,
      ];
      const ray = rayThroughNdc(vp, ndcX, ndcY, aspect);
      for (let c = 0; c < 3; c++) {
        expect(ray.direction[c]).toBeCloseTo(expected[c], 4);
        expect(ray.origin[c]).toBeCloseTo(vp.position[c], 6);
      }
    }
  });

  it("points straight ahead at the center of the view", () => {
    const cam = new OrbitCamera();
    const ray = rayThroughNdc(cam.viewpoint(), 0, 0, 1.7);
    expect(ray.direction[0]).toBeCloseTo(0, 12);
    expect(ray.direction[1]).toBeCloseTo(0, 12);
    expect(ray.direction[2]).toBeCloseTo(-1, 12);
  });
});

describe("viewProjection", () => {
  it("projects a point on the view axis to the ndc center", () => {
    const vp = new OrbitCamera().viewpoint();
    const ndc = transformPoint(viewProjection(vp, 1.5), [0.5, 0.5, 0.5]);
    expect(ndc[0]).toBeCloseTo(0, 10);
    expect(ndc[1]).toBeCloseTo(0, 10);
    expect(Math.abs(ndc[2])).toBeLessThan(1);
  });

  it("orders three points left to right on screen as in the data", () => {
    const vp = new OrbitCamera().viewpoint();
    const m = viewProjection(vp, 1.0);
    const left = transformPoint(m, [0.2, 0.5, 0.5]);
    const mid = transformPoint(m, [0.5, 0.5, 0.5]);
    const right = transformPoint(m, [0.8, 0.5, 0.5]);
    expect(left[0]).toBeLessThan(mid[0]);
    expect(mid[0]).toBeLessThan(right[0]);
    // nearer points also sort in front in depth
    const near = transformPoint(m, [0.5, 0.5, 0.9]);
    expect(near[2]).toBeLessThan(mid[2]);
  });

  it("round-trips points through the inverse", () => {
    const rand = mulberry32(77);
    const cam = new OrbitCamera();
    cam.orbit(1.1, -0.4);
    const m = viewProjection(cam.viewpoint(), 1.25);
    const inv = mat4Invert(m);
    for (let i = 0; i < 30; i++) {
      const p: [number, number, number] = [rand(), rand(), rand()];
      const back = transformPoint(inv, transformPoint(m, p));
      // f32 matrix entries and the perspective divide cost a few digits
      for (let c = 0; c < 3; c++) {
        expect(back[c]).toBeCloseTo(p[c], 4);
      }
    }
  });
});
