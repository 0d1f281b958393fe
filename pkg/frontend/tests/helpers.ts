// Shared test utilities: a tiny deterministic PRNG and a bridge that
// runs Python snippets against the engine package so fixtures come
// from the reference implementation rather than hand-rolled bytes.

import { execFileSync } from "node:child_process";

/** mulberry32: small seeded PRNG, uniform in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Run a Python snippet and return its stdout as text. */
export function pythonText(script: string): string {
  return execFileSync("python3", ["-c", script], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
}

/** Run a Python snippet that prints JSON and parse it. */
export function pythonJson<T>(script: string): T {
  return JSON.parse(pythonText(script)) as T;
}

export function base64ToArrayBuffer(b64: string): ArrayBuffer {
  const bytes = Buffer.from(b64, "base64");
  return bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength);
}

export interface TestPoint {
  pos: [number, number, number];
  rgba?: [number, number, number, number];
  size?: number;
  shape?: number;
  orientation?: number;
  row: number;
}

/** Assemble scene-file bytes for fixtures: header, planar attribute
 * blocks, then the JSON trailer. Same layout the parser reads. */
export function buildHvscBytes(
  points: TestPoint[],
  trailer: Record<string, unknown> = {},
): ArrayBuffer {
  const n = points.length;
  const trailerBytes = new TextEncoder().encode(
    JSON.stringify({
      mapping: null,
      column_names: [],
      excluded_rows: 0,
      ...trailer,
    }),
  );
  const buf = new ArrayBuffer(14 + 33 * n + 4 + trailerBytes.length);
  const view = new DataView(buf);
  const u8 = new Uint8Array(buf);
  u8.set([0x48, 0x56, 0x53, 0x43], 0); // "HVSC"
  view.setUint16(4, 1, true);
  view.setBigUint64(6, BigInt(n), true);
  let off = 14;
  for (const p of points) {
    for (const c of p.pos) {
      view.setFloat32(off, c, true);
      off += 4;
    }
  }
  for (const p of points) {
    u8.set(p.rgba ?? [255, 255, 255, 255], off);
    off += 4;
  }
  for (const p of points) {
    view.setFloat32(off, p.size ?? 1.0, true);
    off += 4;
  }
  for (const p of points) {
    u8[off++] = p.shape ?? 0;
  }
  for (const p of points) {
    view.setFloat32(off, p.orientation ?? 0, true);
    off += 4;
  }
  for (const p of points) {
    view.setBigUint64(off, BigInt(p.row), true);
    off += 8;
  }
  view.setUint32(off, trailerBytes.length, true);
  u8.set(trailerBytes, off + 4);
  return buf;
}
