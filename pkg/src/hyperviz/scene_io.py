"""HVSC scene file format.

Layout, all integers little-endian:

    magic   4 bytes  b"HVSC"
    version u16      1
    count   u64      number of points
    arrays           positions f32*3 interleaved, color_rgba u8*4,
                     size f32, shape_id u8, orientation f32, row_id u64
    trailer u32 length + UTF-8 JSON with the mapping, the source
                     catalog's column names, and excluded_rows

Fixed payload is 33 bytes per point, so a file is exactly
14 + 33*count + 4 + len(trailer) bytes.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from .mapping import ChannelMapping, Scene

MAGIC = b"HVSC"
FORMAT_VERSION = 1
HEADER_BYTES = 14  # magic + u16 version + u64 count
POINT_PAYLOAD_BYTES = 33


def encode_trailer(scene: Scene) -> bytes:
    trailer = {
        "mapping": scene.mapping.to_json() if scene.mapping is not None else None,
        "column_names": scene.column_names,
        "excluded_rows": scene.excluded_rows,
    }
    return json.dumps(trailer, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_scene_bytes(scene: Scene) -> bytes:
    """Serialize a scene to HVSC bytes."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HQ", FORMAT_VERSION, scene.count))
    buf.write(scene.position.astype("<f4", copy=False).tobytes())
    buf.write(scene.color_rgba.astype("<u1", copy=False).tobytes())
    buf.write(scene.size.astype("<f4", copy=False).tobytes())
    buf.write(scene.shape_id.astype("<u1", copy=False).tobytes())
    buf.write(scene.orientation.astype("<f4", copy=False).tobytes())
    buf.write(scene.row_id.astype("<u8", copy=False).tobytes())
    trailer = encode_trailer(scene)
    buf.write(struct.pack("<I", len(trailer)))
    buf.write(trailer)
    return buf.getvalue()


def write_scene(scene: Scene, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_scene_bytes(scene))


def read_scene_bytes(data: bytes) -> Scene:
    """Parse HVSC bytes back into a Scene."""
    if data[:4] != MAGIC:
        raise ValueError("not an HVSC file (bad magic)")
    version, count = struct.unpack_from("<HQ", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported HVSC version {version}")

    offset = HEADER_BYTES
    expected = HEADER_BYTES + POINT_PAYLOAD_BYTES * count + 4
    if len(data) < expected:
        raise ValueError("truncated HVSC file")

    def block(dtype, width):
        nonlocal offset
        arr = np.frombuffer(data, dtype=dtype, count=count * width, offset=offset)
        offset += arr.nbytes
        if width > 1:
            arr = arr.reshape(count, width)
        return arr.copy()

    position = block("<f4", 3)
    color_rgba = block("<u1", 4)
    size = block("<f4", 1)
    shape_id = block("<u1", 1)
    orientation = block("<f4", 1)
    row_id = block("<u8", 1)

    (trailer_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    trailer = json.loads(data[offset : offset + trailer_len].decode("utf-8"))
    mapping = trailer.get("mapping")
    return Scene(
        position,
        color_rgba,
        size,
        shape_id,
        orientation,
        row_id,
        excluded_rows=int(trailer.get("excluded_rows", 0)),
        mapping=ChannelMapping.from_json(mapping) if mapping is not None else None,
        column_names=trailer.get("column_names"),
    )


def read_scene(path) -> Scene:
    with open(path, "rb") as fh:
        return read_scene_bytes(fh.read())
