// Procedural sprite palette for the eight point glyphs. Each shape id
// maps to one tile of a single-channel texture atlas; the shader picks
// the tile from the point's shape attribute.

export const GLYPH_COUNT = 8;
export const TILE_SIZE = 32;

/** Coverage of glyph `shape` at texture coordinates (u, v) in [0, 1).
 * Returns 0 or 255. Shape ids outside the palette wrap around. */
export function glyphMask(shape: number, u: number, v: number): number {
  const s = ((shape % GLYPH_COUNT) + GLYPH_COUNT) % GLYPH_COUNT;
  // center the tile on the origin, radius 1 box
  const x = u * 2 - 1;
  const y = v * 2 - 1;
  const r = Math.sqrt(x * x + y * y);
  let hit: boolean;
  switch (s) {
    case 0: // disc
      hit = r <= 0.9;
      break;
    case 1: // square
      hit = Math.max(Math.abs(x), Math.abs(y)) <= 0.8;
      break;
    case 2: // diamond
      hit = Math.abs(x) + Math.abs(y) <= 1.0;
      break;
    case 3: // upward triangle
      hit = y >= -0.75 && Math.abs(x) <= (0.85 - y) * 0.55;
      break;
    case 4: // ring
      hit = r <= 0.9 && r >= 0.5;
      break;
    case 5: // plus
      hit = (Math.abs(x) <= 0.28 || Math.abs(y) <= 0.28) && r <= 1.0;
      break;
    case 6: // cross (x)
      {
        const d1 = Math.abs(x - y) / Math.SQRT2;
        const d2 = Math.abs(x + y) / Math.SQRT2;
        hit = (d1 <= 0.22 || d2 <= 0.22) && r <= 1.0;
      }
      break;
    default: // 7: downward triangle
      hit = y <= 0.75 && Math.abs(x) <= (0.85 + y) * 0.55;
      break;
  }
  return hit ? 255 : 0;
}

/** Single-row atlas of all glyph tiles, one byte per texel,
 * GLYPH_COUNT * TILE_SIZE wide and TILE_SIZE tall. */
export function buildAtlas(): Uint8Array {
  const width = GLYPH_COUNT * TILE_SIZE;
  const data = new Uint8Array(width * TILE_SIZE);
  for (let s = 0; s < GLYPH_COUNT; s++) {
    for (let py = 0; py < TILE_SIZE; py++) {
      for (let px = 0; px < TILE_SIZE; px++) {
        const u = (px + 0.5) / TILE_SIZE;
        const v = (py + 0.5) / TILE_SIZE;
        data[py * width + s * TILE_SIZE + px] = glyphMask(s, u, v);
      }
    }
  }
  return data;
}
