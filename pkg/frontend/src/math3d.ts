// Just enough 4x4 matrix and quaternion math for one camera. Column
// major, matching WebGL uniform layout.

export type Mat4 = Float32Array; // 16 entries
export type Quat = [number, number, number, number]; // w, x, y, z
export type Vec3 = [number, number, number];

export function mat4Identity(): Mat4 {
  const m = new Float32Array(16);
  m[0] = m[5] = m[10] = m[15] = 1;
  return m;
}

export function mat4Multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let s = 0;
      for (let k = 0; k < 4; k++) {
        s += a[k * 4 + row] * b[col * 4 + k];
      }
      out[col * 4 + row] = s;
    }
  }
  return out;
}

export function mat4Perspective(
  fovYDeg: number,
  aspect: number,
  near: number,
  far: number,
): Mat4 {
  const f = 1 / Math.tan((fovYDeg * Math.PI) / 360);
  const m = new Float32Array(16);
  m[0] = f / aspect;
  m[5] = f;
  m[10] = (far + near) / (near - far);
  m[11] = -1;
  m[14] = (2 * far * near) / (near - far);
  return m;
}

/** Inverse for rigid-plus-perspective matrices via Gauss-Jordan. */
export function mat4Invert(m: Mat4): Mat4 {
  const a = new Float64Array(32);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) a[r * 8 + c] = m[c * 4 + r];
    a[r * 8 + 4 + r] = 1;
  }
  for (let col = 0; col < 4; col++) {
    let pivot = col;
    for (let r = col + 1; r < 4; r++) {
      if (Math.abs(a[r * 8 + col]) > Math.abs(a[pivot * 8 + col])) pivot = r;
    }
    if (a[pivot * 8 + col] === 0) {
      throw new Error("matrix is singular");
    }
    if (pivot !== col) {
      for (let c = 0; c < 8; c++) {
        const tmp = a[col * 8 + c];
        a[col * 8 + c] = a[pivot * 8 + c];
        a[pivot * 8 + c] = tmp;
      }
    }
    const inv = 1 / a[col * 8 + col];
    for (let c = 0; c < 8; c++) a[col * 8 + c] *= inv;
    for (let r = 0; r < 4; r++) {
      if (r === col) continue;
      const f = a[r * 8 + col];
      if (f === 0) continue;
      for (let c = 0; c < 8; c++) a[r * 8 + c] -= f * a[col * 8 + c];
    }
  }
  const out = new Float32Array(16);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) out[c * 4 + r] = a[r * 8 + 4 + c];
  }
  return out;
}

export function transformPoint(m: Mat4, p: Vec3): Vec3 {
  const x = m[0] * p[0] + m[4] * p[1] + m[8] * p[2] + m[12];
  const y = m[1] * p[0] + m[5] * p[1] + m[9] * p[2] + m[13];
  const z = m[2] * p[0] + m[6] * p[1] + m[10] * p[2] + m[14];
  const w = m[3] * p[0] + m[7] * p[1] + m[11] * p[2] + m[15];
  return [x / w, y / w, z / w];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(n > 0)) {
    throw new Error("zero quaternion");
  }
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatFromYawPitch(yaw: number, pitch: number): Quat {
  // yaw about +y then pitch about the rotated +x; the +0 terms keep
  // negative zeros out of poses that get compared after a JSON trip
  const cy = Math.cos(yaw / 2);
  const sy = Math.sin(yaw / 2);
  const cp = Math.cos(pitch / 2);
  const sp = Math.sin(pitch / 2);
  return quatNormalize([
    cy * cp + 0,
    sp * cy + 0,
    sy * cp + 0,
    -sy * sp + 0,
  ]);
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  // v + 2 * cross(q.xyz, cross(q.xyz, v) + w*v)
  const cx = y * v[2] - z * v[1] + w * v[0];
  const cy = z * v[0] - x * v[2] + w * v[1];
  const cz = x * v[1] - y * v[0] + w * v[2];
  return [
    v[0] + 2 * (y * cz - z * cy),
    v[1] + 2 * (z * cx - x * cz),
    v[2] + 2 * (x * cy - y * cx),
  ];
}

/** View matrix for an eye at `pos` with orientation `q` (camera looks
 * down its local -z). */
export function mat4FromRotationTranslationInverse(q: Quat, pos: Vec3): Mat4 {
  const [w, x, y, z] = q;
  // rotation matrix of q, transposed (inverse), column major
  const m = new Float32Array(16);
  const r00 = 1 - 2 * (y * y + z * z);
  const r01 = 2 * (x * y - w * z);
  const r02 = 2 * (x * z + w * y);
  const r10 = 2 * (x * y + w * z);
  const r11 = 1 - 2 * (x * x + z * z);
  const r12 = 2 * (y * z - w * x);
  const r20 = 2 * (x * z - w * y);
  const r21 = 2 * (y * z + w * x);
  const r22 = 1 - 2 * (x * x + y * y);
  // columns of the inverse rotation = rows of the rotation
  m[0] = r00; m[1] = r01; m[2] = r02;
  m[4] = r10; m[5] = r11; m[6] = r12;
  m[8] = r20; m[9] = r21; m[10] = r22;
  m[12] = -(r00 * pos[0] + r10 * pos[1] + r20 * pos[2]);
  m[13] = -(r01 * pos[0] + r11 * pos[1] + r21 * pos[2]);
  m[14] = -(r02 * pos[0] + r12 * pos[1] + r22 * pos[2]);
  m[15] = 1;
  return m;
}
