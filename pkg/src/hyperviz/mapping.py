"""Channel mapping engine: catalog columns onto 8 visual channels.

A point cloud scene encodes up to 8 data dimensions per point: the
three spatial axes plus color, size, shape, transparency, and
orientation. Each channel is fed by one catalog column through a
normalizing transform; one column may feed several channels.

Transforms produce values in [0, 1]:

  linear  clamp((v - lo) / (hi - lo)) with lo/hi taken at the clip_lo /
          clip_hi percentiles of the column's present values
  log     the linear rule applied to log10(v) (requires v > 0)
  rank    average-tie rank / (n_present - 1)

Missing inputs stay missing through a transform. When a transform's
lo == hi (constant column, or degenerate clips) every present value
maps to 0.5.

Scene assembly drops rows that lack a value for any *assigned*
positional channel and substitutes per-channel defaults everywhere
else, so a point always has a location while the remaining channels
degrade gracefully.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np
from scipy.stats import rankdata

from .catalog import CATEGORICAL, NUMERIC, Catalog, Column, column_stats
from .errors import (
    AllMissingError,
    KindMismatchError,
    NonPositiveForLogError,
    UnknownColumnError,
)

POS_X = "pos_x"
POS_Y = "pos_y"
POS_Z = "pos_z"
COLOR = "color"
SIZE = "size"
SHAPE = "shape"
ALPHA = "alpha"
ORIENTATION = "orientation"

CHANNELS = (POS_X, POS_Y, POS_Z, COLOR, SIZE, SHAPE, ALPHA, ORIENTATION)
POSITIONAL_CHANNELS = (POS_X, POS_Y, POS_Z)

TRANSFORM_KINDS = ("linear", "log", "rank")

_TWO_PI = 2.0 * math.pi
# Largest float32 strictly below 2*pi; keeps orientation inside [0, 2*pi)
# without breaking monotonicity at t = 1.
_ORIENT_MAX = np.nextafter(np.float32(_TWO_PI), np.float32(0.0))


@dataclass(frozen=True)
class ChannelTransform:
    """Normalization applied to a column before it feeds a channel."""

    kind: str = "linear"
    clip_lo: float = 0.0
    clip_hi: float = 100.0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if not (0.0 <= self.clip_lo < self.clip_hi <= 100.0):
            raise ValueError(
                f"need 0 <= clip_lo < clip_hi <= 100, got {self.clip_lo}, {self.clip_hi}"
            )

    def to_json(self) -> dict:
        return {"kind": self.kind, "clip_lo": self.clip_lo, "clip_hi": self.clip_hi}

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelTransform":
        return cls(
            kind=obj.get("kind", "linear"),
            clip_lo=float(obj.get("clip_lo", 0.0)),
            clip_hi=float(obj.get("clip_hi", 100.0)),
        )


@dataclass(frozen=True)
class ChannelAssignment:
    column: str
    transform: ChannelTransform = ChannelTransform()


@dataclass(frozen=True)
class ChannelMapping:
    """Assignment of catalog columns to visual channels.

    ``version`` is bumped by the session machinery on each accepted
    change; the engine itself treats a mapping as an immutable value.
    """

    assignments: dict[str, ChannelAssignment] = field(default_factory=dict)
    version: int = 0

    def __post_init__(self):
        for channel in self.assignments:
            if channel not in CHANNELS:
                raise ValueError(f"unknown channel {channel!r}")

    def assigned(self, channel: str) -> Optional[ChannelAssignment]:
        return self.assignments.get(channel)

    def with_version(self, version: int) -> "ChannelMapping":
        return replace(self, version=version)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "channels": {
                ch: {"column": a.column, "transform": a.transform.to_json()}
                for ch, a in self.assignments.items()
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelMapping":
        if not isinstance(obj, dict):
            raise ValueError("mapping must be a JSON object")
        channels = obj.get("channels", {})
        if not isinstance(channels, dict):
            raise ValueError("mapping 'channels' must be an object")
        assignments = {}
        for ch, spec in channels.items():
            if not isinstance(spec, dict) or "column" not in spec:
                raise ValueError(f"channel {ch!r} needs a 'column' field")
            transform = ChannelTransform.from_json(spec.get("transform", {}))
            assignments[ch] = ChannelAssignment(str(spec["column"]), transform)
        return cls(assignments=assignments, version=int(obj.get("version", 0)))


@dataclass(frozen=True)
class ChannelDefaults:
    """Values used for unassigned channels and missing cells."""

    position: float = 0.5
    color: tuple[int, int, int] = (128, 128, 128)
    size: float = 0.6
    shape_id: int = 0
    alpha: float = 1.0
    orientation: float = 0.0


class Scene:
    """Render-ready point cloud: parallel per-point attribute arrays.

    All arrays are locked after construction; a Scene is safe to share.
    Attribute payload is 33 bytes per point (f32x3 position, u8x4 rgba,
    f32 size, u8 shape, f32 orientation, u64 row id).
    """

    __slots__ = (
        "position",
        "color_rgba",
        "size",
        "shape_id",
        "orientation",
        "row_id",
        "excluded_rows",
        "mapping",
        "column_names",
    )

    def __init__(
        self,
        position: np.ndarray,
        color_rgba: np.ndarray,
        size: np.ndarray,
        shape_id: np.ndarray,
        orientation: np.ndarray,
        row_id: np.ndarray,
        excluded_rows: int = 0,
        mapping: Optional[ChannelMapping] = None,
        column_names: Optional[list[str]] = None,
    ):
        self.position = np.ascontiguousarray(position, dtype=np.float32)
        self.color_rgba = np.ascontiguousarray(color_rgba, dtype=np.uint8)
        self.size = np.ascontiguousarray(size, dtype=np.float32)
        self.shape_id = np.ascontiguousarray(shape_id, dtype=np.uint8)
        self.orientation = np.ascontiguousarray(orientation, dtype=np.float32)
        self.row_id = np.ascontiguousarray(row_id, dtype=np.uint64)
        n = len(self.row_id)
        if self.position.shape != (n, 3) or self.color_rgba.shape != (n, 4):
            raise ValueError("scene arrays have inconsistent lengths")
        if not (len(self.size) == len(self.shape_id) == len(self.orientation) == n):
            raise ValueError("scene arrays have inconsistent lengths")
        for arr in (
            self.position,
            self.color_rgba,
            self.size,
            self.shape_id,
            self.orientation,
            self.row_id,
        ):
            arr.flags.writeable = False
        self.excluded_rows = int(excluded_rows)
        self.mapping = mapping
        self.column_names = column_names

    @property
    def count(self) -> int:
        return len(self.row_id)

    def take(self, indices: np.ndarray) -> "Scene":
        """New scene holding the given point indices, attributes copied."""
        return Scene(
            self.position[indices],
            self.color_rgba[indices],
            self.size[indices],
            self.shape_id[indices],
            self.orientation[indices],
            self.row_id[indices],
            excluded_rows=self.excluded_rows,
            mapping=self.mapping,
            column_names=self.column_names,
        )

    def equals(self, other: "Scene") -> bool:
        return (
            self.count == other.count
            and self.excluded_rows == other.excluded_rows
            and np.array_equal(self.position, other.position)
            and np.array_equal(self.color_rgba, other.color_rgba)
            and np.array_equal(self.size, other.size)
            and np.array_equal(self.shape_id, other.shape_id)
            and np.array_equal(self.orientation, other.orientation)
            and np.array_equal(self.row_id, other.row_id)
        )


def _as_float_array(values) -> np.ndarray:
    if isinstance(values, Column):
        return values.data
    if isinstance(values, np.ndarray):
        return values.astype(np.float64, copy=False)
    return np.asarray(
        [math.nan if v is None else float(v) for v in values], dtype=np.float64
    )


def apply_transform(values, t: ChannelTransform) -> np.ndarray:
    """Normalize a numeric column into [0, 1].

    ``values`` may be a numeric Column, a float array with NaN for
    missing cells, or a sequence containing None. Returns a float64
    array where missing stays NaN and every present value lies in
    [0, 1].
    """
    data = _as_float_array(values)
    present = np.isfinite(data)
    n_present = int(present.sum())
    if n_present == 0:
        raise AllMissingError("transform input has no present values")

    out = np.full(data.shape, np.nan)
    src = data[present]

    if t.kind == "rank":
        if n_present == 1:
            out[present] = 0.5
        else:
            ranks = rankdata(src, method="average") - 1.0
            out[present] = ranks / (n_present - 1)
        return out

    if t.kind == "log":
        if np.any(src <= 0.0):
            raise NonPositiveForLogError(
                "log transform requires strictly positive values"
            )
        src = np.log10(src)

    lo, hi = np.percentile(src, [t.clip_lo, t.clip_hi])
    if hi == lo:
        out[present] = 0.5
    else:
        out[present] = np.clip((src - lo) / (hi - lo), 0.0, 1.0)
    return out


def _hue_rgb_bytes(t: np.ndarray) -> np.ndarray:
    """Blue-to-red hue sweep: h = 240 * (1 - t) degrees at full
    saturation and value. Vectorized; inputs clamped to [0, 1]."""
    h = 240.0 * (1.0 - np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0))
    k = h / 60.0
    out = np.empty(h.shape + (3,), dtype=np.uint8)
    for i, n in enumerate((5.0, 3.0, 1.0)):  # r, g, b
        kn = np.mod(n + k, 6.0)
        comp = 1.0 - np.maximum(0.0, np.minimum(np.minimum(kn, 4.0 - kn), 1.0))
        out[..., i] = np.rint(comp * 255.0).astype(np.uint8)
    return out


def hue_to_rgb(t: float) -> tuple[int, int, int]:
    """Map t in [0, 1] to (r, g, b) bytes; 0 is blue, 1 is red."""
    r, g, b = _hue_rgb_bytes(np.asarray([t]))[0]
    return int(r), int(g), int(b)


def encode_shape(column: Column, n_bins: int = 8) -> np.ndarray:
    """Shape ids in [0, n_bins) per row; missing cells yield -1.

    Categorical columns index their sorted distinct categories modulo
    n_bins; numeric columns are linearly normalized and binned.
    """
    if column.n_present == 0:
        raise AllMissingError(f"column {column.name!r} has no present cells")
    if column.kind == CATEGORICAL:
        cats = column_stats(column).distinct_categories
        cat_id = {c: i % n_bins for i, c in enumerate(cats)}
        return np.asarray(
            [-1 if c is None else cat_id[c] for c in column.values], dtype=np.int64
        )
    t = apply_transform(column, ChannelTransform("linear"))
    ids = np.full(len(t), -1, dtype=np.int64)
    present = np.isfinite(t)
    binned = np.minimum(np.floor(t[present] * n_bins), n_bins - 1)
    ids[present] = binned.astype(np.int64)
    return ids


def validate_mapping(catalog: Catalog, mapping: ChannelMapping) -> None:
    """Check every assignment against the catalog.

    Raises UnknownColumnError or KindMismatchError (only the shape
    channel accepts a categorical column).
    """
    for channel, assignment in mapping.assignments.items():
        if assignment.column not in catalog:
            raise UnknownColumnError(
                f"channel {channel!r}: no column {assignment.column!r}"
            )
        col = catalog.column(assignment.column)
        if channel != SHAPE and col.kind != NUMERIC:
            raise KindMismatchError(
                f"channel {channel!r} requires a numeric column, "
                f"{assignment.column!r} is {col.kind}"
            )


def build_scene(
    catalog: Catalog,
    mapping: ChannelMapping,
    defaults: ChannelDefaults = ChannelDefaults(),
) -> Scene:
    """Assemble a Scene from a catalog under a channel mapping.

    Rows missing a value for any assigned positional channel are
    excluded (and counted); missing values on other channels fall back
    to the channel default. Unassigned positional channels pin every
    point to the default coordinate. Pure: identical inputs produce a
    bit-identical scene.
    """
    validate_mapping(catalog, mapping)
    n = catalog.n_rows

    # Per-channel normalized values over the full column, so each
    # channel depends only on its own source column.
    channel_t: dict[str, np.ndarray] = {}
    shape_ids: Optional[np.ndarray] = None
    for channel, assignment in mapping.assignments.items():
        col = catalog.column(assignment.column)
        if channel == SHAPE:
            shape_ids = encode_shape(col, n_bins=8)
        else:
            channel_t[channel] = apply_transform(col, assignment.transform)

    keep = np.ones(n, dtype=bool)
    for channel in POSITIONAL_CHANNELS:
        assignment = mapping.assigned(channel)
        if assignment is not None:
            keep &= catalog.column(assignment.column).present_mask
    idx = np.nonzero(keep)[0]
    k = len(idx)
    excluded = n - k

    position = np.full((k, 3), defaults.position, dtype=np.float32)
    for axis, channel in enumerate(POSITIONAL_CHANNELS):
        if channel in channel_t:
            position[:, axis] = channel_t[channel][idx].astype(np.float32)

    color_rgba = np.empty((k, 4), dtype=np.uint8)
    color_rgba[:, :3] = defaults.color
    color_rgba[:, 3] = int(round(255.0 * defaults.alpha))
    if COLOR in channel_t:
        t = channel_t[COLOR][idx]
        m = np.isfinite(t)
        color_rgba[m, :3] = _hue_rgb_bytes(t[m])
    if ALPHA in channel_t:
        t = channel_t[ALPHA][idx]
        m = np.isfinite(t)
        # Alpha floor of 0.1 keeps every point at least faintly visible.
        color_rgba[m, 3] = np.rint(255.0 * (0.1 + 0.9 * t[m])).astype(np.uint8)

    size = np.full(k, defaults.size, dtype=np.float32)
    if SIZE in channel_t:
        t = channel_t[SIZE][idx]
        m = np.isfinite(t)
        size[m] = (0.2 + 0.8 * t[m]).astype(np.float32)

    shape = np.full(k, defaults.shape_id, dtype=np.uint8)
    if shape_ids is not None:
        ids = shape_ids[idx]
        m = ids >= 0
        shape[m] = ids[m].astype(np.uint8)

    orientation = np.full(k, defaults.orientation, dtype=np.float32)
    if ORIENTATION in channel_t:
        t = channel_t[ORIENTATION][idx]
        m = np.isfinite(t)
        orientation[m] = np.minimum(
            (_TWO_PI * t[m]).astype(np.float32), _ORIENT_MAX
        )

    return Scene(
        position,
        color_rgba,
        size,
        shape,
        orientation,
        idx.astype(np.uint64),
        excluded_rows=excluded,
        mapping=mapping,
        column_names=catalog.column_names,
    )


def remap(catalog: Catalog, new_mapping: ChannelMapping) -> Scene:
    """Rebuild under a different mapping; stateless, equal to a fresh
    build_scene with the same arguments."""
    return build_scene(catalog, new_mapping)
