"""Map-drawing accuracy scoring for situation-awareness evaluation.

Landmarks are observer-centric polar positions (bearing in degrees,
range in meters). A drawn map is scored against ground truth landmark
by landmark: the angle error is the bearing difference wrapped into
[0, 180] and the distance error is the absolute range difference; both
are summed across landmarks. An optional alignment step removes any
global rotation of the drawn map before scoring, since a map editor's
rotate control makes absolute orientation arbitrary.

The alignment objective (total wrapped angle error as a function of the
applied rotation) is piecewise linear, so the exact optimum is found by
evaluating each landmark's exact-match rotation plus the zero endpoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyLandmarkSetError,
    IdMismatchError,
    IdSetMismatchError,
)


def wrap_bearing(deg: float) -> float:
    """Normalize a bearing into [0, 360)."""
    return float(np.mod(deg, 360.0))


def angle_difference(a: float, b: float) -> float:
    """Absolute angular separation of two bearings, in [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


@dataclass(frozen=True)
class Landmark:
    id: str
    bearing: float  # degrees, normalized to [0, 360)
    range: float  # meters, > 0

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError(f"landmark {self.id!r}: range must be positive")
        object.__setattr__(self, "bearing", wrap_bearing(self.bearing))
        object.__setattr__(self, "range", float(self.range))


@dataclass(frozen=True)
class LandmarkSet:
    landmarks: tuple[Landmark, ...]

    def __init__(self, landmarks):
        marks = tuple(landmarks)
        ids = [m.id for m in marks]
        if len(set(ids)) != len(ids):
            raise ValueError("landmark ids must be unique")
        object.__setattr__(self, "landmarks", marks)

    def __len__(self) -> int:
        return len(self.landmarks)

    def ids(self) -> set[str]:
        return {m.id for m in self.landmarks}

    def by_id(self, id: str) -> Landmark:
        for m in self.landmarks:
            if m.id == id:
                return m
        raise KeyError(id)

    def rotated(self, delta_deg: float) -> "LandmarkSet":
        """Same landmarks with every bearing shifted by delta_deg."""
        return LandmarkSet(
            Landmark(m.id, wrap_bearing(m.bearing + delta_deg), m.range)
            for m in self.landmarks
        )


@dataclass(frozen=True)
class MapScore:
    per_landmark: dict[str, tuple[float, float]]  # id -> (distance, angle)
    total_distance_error: float
    total_angle_error: float
    rotation_applied: float

    def to_json(self) -> dict:
        return {
            "per_landmark": {
                id: {"distance_error": d, "angle_error": a}
                for id, (d, a) in self.per_landmark.items()
            },
            "total_distance_error": self.total_distance_error,
            "total_angle_error": self.total_angle_error,
            "rotation_applied": self.rotation_applied,
        }


def landmark_errors(truth: Landmark, drawn: Landmark) -> tuple[float, float]:
    """(distance_error, angle_error) for one landmark pair."""
    if truth.id != drawn.id:
        raise IdMismatchError(f"comparing {truth.id!r} against {drawn.id!r}")
    return (
        abs(truth.range - drawn.range),
        angle_difference(truth.bearing, drawn.bearing),
    )


def _check_id_sets(truth: LandmarkSet, drawn: LandmarkSet) -> None:
    if truth.ids() != drawn.ids():
        raise IdSetMismatchError(
            missing=truth.ids() - drawn.ids(), extra=drawn.ids() - truth.ids()
        )


def _total_angle_error(offsets: np.ndarray, delta: float) -> float:
    d = np.abs(offsets - delta) % 360.0
    return float(np.sum(np.where(d > 180.0, 360.0 - d, d)))


def best_rotation(truth: LandmarkSet, drawn: LandmarkSet) -> float:
    """Rotation to add to every drawn bearing minimizing the total
    wrapped angle error.

    Returned in signed form in (-180, 180]; when several rotations tie,
    the one with the smallest non-negative bearing offset wins.
    """
    _check_id_sets(truth, drawn)
    ids = sorted(truth.ids())
    offsets = np.asarray(
        [
            wrap_bearing(truth.by_id(i).bearing - drawn.by_id(i).bearing)
            for i in ids
        ]
    )
    # The objective is piecewise linear in delta with its convex corners
    # at the exact-match offsets, so those (plus 0) cover every minimum.
    candidates = np.unique(np.concatenate([[0.0], offsets]))
    totals = np.asarray([_total_angle_error(offsets, d) for d in candidates])
    delta = float(candidates[int(np.argmin(totals))])
    return delta - 360.0 if delta > 180.0 else delta


def score_map(truth: LandmarkSet, drawn: LandmarkSet, align: bool = False) -> MapScore:
    """Score a drawn map against ground truth.

    With ``align`` the globally optimal rotation is applied to the
    drawn bearings first (distance errors are rotation-invariant).
    """
    _check_id_sets(truth, drawn)
    if len(truth) == 0:
        raise EmptyLandmarkSetError("need at least one landmark")

    rotation = best_rotation(truth, drawn) if align else 0.0
    adjusted = drawn.rotated(rotation) if rotation != 0.0 else drawn

    per_landmark = {}
    for id in sorted(truth.ids()):
        per_landmark[id] = landmark_errors(truth.by_id(id), adjusted.by_id(id))
    return MapScore(
        per_landmark=per_landmark,
        total_distance_error=float(sum(d for d, _ in per_landmark.values())),
        total_angle_error=float(sum(a for _, a in per_landmark.values())),
        rotation_applied=rotation,
    )


def load_landmarks_csv(path) -> LandmarkSet:
    """Read a landmark set from CSV with header id,bearing_deg,range_m."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "bearing_deg", "range_m"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError("landmark CSV needs header id,bearing_deg,range_m")
        marks = [
            Landmark(row["id"], float(row["bearing_deg"]), float(row["range_m"]))
            for row in reader
        ]
    return LandmarkSet(marks)
