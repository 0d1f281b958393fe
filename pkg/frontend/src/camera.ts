// Orbit camera over the unit data cube and the pixel-to-ray math used
// for picking. The shareable pose (position, unit quaternion, fov) is
// the same shape the session protocol carries.

import type { Viewpoint } from "./protocol.js";
import type { Ray, Vec3 } from "./pickmath.js";
import {
  Mat4,
  mat4FromRotationTranslationInverse,
  mat4Multiply,
  mat4Perspective,
  Quat,
  quatFromYawPitch,
  quatRotate,
} from "./math3d.js";

const MIN_DISTANCE = 0.05;
const MAX_DISTANCE = 50;
const MAX_PITCH = Math.PI / 2 - 0.01;

export class OrbitCamera {
  center: Vec3 = [0.5, 0.5, 0.5];
  distance = 2.0;
  yaw = 0;
  pitch = 0;
  fov = 60;

  orientation(): Quat {
    return quatFromYawPitch(this.yaw, this.pitch);
  }

  position(): Vec3 {
    const back = quatRotate(this.orientation(), [0, 0, this.distance]);
    return [
      this.center[0] + back[0],
      this.center[1] + back[1],
      this.center[2] + back[2],
    ];
  }

  viewpoint(): Viewpoint {
    const q = this.orientation();
    return {
      position: this.position(),
      orientation: [q[0], q[1], q[2], q[3]],
      field_of_view: this.fov,
    };
  }

  orbit(dYaw: number, dPitch: number): void {
    this.yaw = (this.yaw + dYaw) % (2 * Math.PI);
    this.pitch = Math.min(MAX_PITCH, Math.max(-MAX_PITCH, this.pitch + dPitch));
  }

  dolly(factor: number): void {
    this.distance = Math.min(
      MAX_DISTANCE,
      Math.max(MIN_DISTANCE, this.distance * factor),
    );
  }
}

export function viewProjection(
  vp: Viewpoint,
  aspect: number,
  near = 0.01,
  far = 100,
): Mat4 {
  const q: Quat = [
    vp.orientation[0],
    vp.orientation[1],
    vp.orientation[2],
    vp.orientation[3],
  ];
  const view = mat4FromRotationTranslationInverse(q, [
    vp.position[0],
    vp.position[1],
    vp.position[2],
  ]);
  return mat4Multiply(mat4Perspective(vp.field_of_view, aspect, near, far), view);
}

/** Ray from the eye through normalized device coordinates (x and y in
 * [-1, 1], y up). */
export function rayThroughNdc(
  vp: Viewpoint,
  ndcX: number,
  ndcY: number,
  aspect: number,
): Ray {
  const q: Quat = [
    vp.orientation[0],
    vp.orientation[1],
    vp.orientation[2],
    vp.orientation[3],
  ];
  const forward = quatRotate(q, [0, 0, -1]);
  const right = quatRotate(q, [1, 0, 0]);
  const up = quatRotate(q, [0, 1, 0]);
  const t = Math.tan((vp.field_of_view * Math.PI) / 360);
  const d: Vec3 = [
    forward[0] + ndcX * aspect * t * right[0] + ndcY * t * up[0],
    forward[1] + ndcX * aspect * t * right[1] + ndcY * t * up[1],
    forward[2] + ndcX * aspect * t * right[2] + ndcY * t * up[2],
  ];
  const n = Math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  return {
    origin: [vp.position[0], vp.position[1], vp.position[2]],
    direction: [d[0] / n, d[1] / n, d[2] / n],
  };
}
