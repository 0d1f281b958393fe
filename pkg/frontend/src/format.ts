// Binary scene file parser.
//
// Layout, all integers little-endian:
//   magic   4 bytes  "HVSC"
//   version u16      1
//   count   u64      number of points
//   arrays           positions f32*3, color rgba u8*4, size f32,
//                    shape u8, orientation f32, row id u64 (one
//                    planar block per attribute)
//   trailer u32 length + UTF-8 JSON (mapping, column names,
//                    excluded row count)
//
// A file is exactly 14 + 33*count + 4 + trailerLength bytes.

export const HEADER_BYTES = 14;
export const POINT_PAYLOAD_BYTES = 33;
const MAGIC = "HVSC";
const FORMAT_VERSION = 1;

/** The eight visual channels a column can drive, in display order. */
export const CHANNELS = [
  "pos_x",
  "pos_y",
  "pos_z",
  "color",
  "size",
  "shape",
  "alpha",
  "orientation",
] as const;

export interface ChannelAssignmentJson {
  column: string;
  transform?: { kind?: string; clip_lo?: number; clip_hi?: number };
}

export interface MappingJson {
  version?: number;
  channels?: Record<string, ChannelAssignmentJson>;
}

export interface SceneData {
  count: number;
  position: Float32Array; // 3 per point
  rgba: Uint8Array; // 4 per point
  size: Float32Array;
  shapeId: Uint8Array;
  orientation: Float32Array;
  rowId: BigUint64Array;
  mapping: MappingJson | null;
  columnNames: string[];
  excludedRows: number;
}

export function parseScene(buf: ArrayBuffer): SceneData {
  const view = new DataView(buf);
  if (buf.byteLength < HEADER_BYTES) {
    throw new Error("truncated HVSC file");
  }
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== MAGIC) {
    throw new Error("not an HVSC file (bad magic)");
  }
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported HVSC version ${version}`);
  }
  const countBig = view.getBigUint64(6, true);
  if (countBig > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new Error("point count too large");
  }
  const count = Number(countBig);

  const expected = HEADER_BYTES + POINT_PAYLOAD_BYTES * count + 4;
  if (buf.byteLength < expected) {
    throw new Error("truncated HVSC file");
  }

  // Attribute blocks start at odd offsets, so copy each slice to get
  // the alignment typed arrays need.
  let offset = HEADER_BYTES;
  const block = (bytes: number): ArrayBuffer => {
    const out = buf.slice(offset, offset + bytes);
    offset += bytes;
    return out;
  };

  const position = new Float32Array(block(count * 12));
  const rgba = new Uint8Array(block(count * 4));
  const size = new Float32Array(block(count * 4));
  const shapeId = new Uint8Array(block(count));
  const orientation = new Float32Array(block(count * 4));
  const rowId = new BigUint64Array(block(count * 8));

  const trailerLen = view.getUint32(offset, true);
  offset += 4;
  if (buf.byteLength < offset + trailerLen) {
    throw new Error("truncated HVSC file");
  }
  const trailerText = new TextDecoder().decode(
    new Uint8Array(buf, offset, trailerLen),
  );
  const trailer = JSON.parse(trailerText) as {
    mapping?: MappingJson | null;
    column_names?: string[] | null;
    excluded_rows?: number;
  };

  return {
    count,
    position,
    rgba,
    size,
    shapeId,
    orientation,
    rowId,
    mapping: trailer.mapping ?? null,
    columnNames: trailer.column_names ?? [],
    excludedRows: trailer.excluded_rows ?? 0,
  };
}

/** Keep at most `cap` points, strided deterministically across the
 * whole scene so structure survives. Returns the input when it fits. */
export function capPoints(scene: SceneData, cap: number): SceneData {
  if (!Number.isInteger(cap) || cap < 1) {
    throw new Error("cap must be a positive integer");
  }
  if (scene.count <= cap) {
    return scene;
  }
  const keep = new Array<number>(cap);
  for (let i = 0; i < cap; i++) {
    keep[i] = Math.floor((i * scene.count) / cap);
  }
  const position = new Float32Array(cap * 3);
  const rgba = new Uint8Array(cap * 4);
  const size = new Float32Array(cap);
  const shapeId = new Uint8Array(cap);
  const orientation = new Float32Array(cap);
  const rowId = new BigUint64Array(cap);
  keep.forEach((src, dst) => {
    position.set(scene.position.subarray(src * 3, src * 3 + 3), dst * 3);
    rgba.set(scene.rgba.subarray(src * 4, src * 4 + 4), dst * 4);
    size[dst] = scene.size[src];
    shapeId[dst] = scene.shapeId[src];
    orientation[dst] = scene.orientation[src];
    rowId[dst] = scene.rowId[src];
  });
  return { ...scene, count: cap, position, rgba, size, shapeId, orientation, rowId };
}
