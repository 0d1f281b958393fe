"""Collaborative high-dimensional data visualization stack.

Maps feature-vector catalogs onto up to 8 visual channels, builds
million-point render scenes with spatial indexing for picking and
decimation, runs authoritative collaborative sessions with broadcast
navigation, and scores hand-drawn landmark maps for situation-awareness
studies.
"""

from .catalog import (
    CATEGORICAL,
    NUMERIC,
    Catalog,
    Column,
    ColumnStats,
    column_stats,
    format_float_shortest,
    infer_column_kind,
    parse_catalog,
)
from .errors import (
    AllMissingError,
    DuplicateHeaderError,
    EmptyInputError,
    EmptyLandmarkSetError,
    HypervizError,
    IdMismatchError,
    IdSetMismatchError,
    KindMismatchError,
    NonPositiveForLogError,
    RaggedRowError,
    RowOutOfRangeError,
    UnknownColumnError,
    UnknownPlaceholderError,
)
from .index import Ray, SpatialIndex, build_index, decimate, knn, make_ray, pick
from .links import LinkTemplate, resolve_link
from .mapping import (
    CHANNELS,
    POSITIONAL_CHANNELS,
    ChannelAssignment,
    ChannelDefaults,
    ChannelMapping,
    ChannelTransform,
    Scene,
    apply_transform,
    build_scene,
    hue_to_rgb,
    remap,
    validate_mapping,
)
from .mapscore import (
    Landmark,
    LandmarkSet,
    MapScore,
    angle_difference,
    best_rotation,
    load_landmarks_csv,
    score_map,
    wrap_bearing,
)
from .scene_io import read_scene, read_scene_bytes, write_scene, write_scene_bytes
from .session import (
    Annotation,
    ClientReplica,
    ProtocolMessage,
    SessionState,
    Viewpoint,
    ViewpointThrottle,
    decode_message,
    handle_message,
    initial_state,
    server_state_tuple,
    snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "AllMissingError",
    "Annotation",
    "CATEGORICAL",
    "CHANNELS",
    "Catalog",
    "ChannelAssignment",
    "ChannelDefaults",
    "ChannelMapping",
    "ChannelTransform",
    "ClientReplica",
    "Column",
    "ColumnStats",
    "DuplicateHeaderError",
    "EmptyInputError",
    "EmptyLandmarkSetError",
    "HypervizError",
    "IdMismatchError",
    "IdSetMismatchError",
    "KindMismatchError",
    "Landmark",
    "LandmarkSet",
    "LinkTemplate",
    "MapScore",
    "NUMERIC",
    "NonPositiveForLogError",
    "POSITIONAL_CHANNELS",
    "ProtocolMessage",
    "RaggedRowError",
    "Ray",
    "RowOutOfRangeError",
    "Scene",
    "SessionState",
    "SpatialIndex",
    "UnknownColumnError",
    "UnknownPlaceholderError",
    "Viewpoint",
    "ViewpointThrottle",
    "angle_difference",
    "apply_transform",
    "best_rotation",
    "build_index",
    "build_scene",
    "column_stats",
    "format_float_shortest",
    "decimate",
    "decode_message",
    "handle_message",
    "hue_to_rgb",
    "infer_column_kind",
    "initial_state",
    "server_state_tuple",
    "knn",
    "load_landmarks_csv",
    "make_ray",
    "parse_catalog",
    "pick",
    "read_scene",
    "read_scene_bytes",
    "remap",
    "resolve_link",
    "score_map",
    "snapshot",
    "validate_mapping",
    "wrap_bearing",
    "write_scene",
    "write_scene_bytes",
]
