"""Octree spatial index over the unit cube: picking, kNN, decimation.

The tree is built bulk-style: points are sorted by 36-bit Morton code
(12 bits per axis, x highest), and nodes are contiguous ranges of the
sorted order. A cell splits while it holds more than LEAF_CAPACITY
points, down to MAX_DEPTH; a depth-12 cell keeps everything it has, so
coincident points cannot recurse forever. Every point lands in exactly
one leaf, and a leaf's members are kept in ascending point order.

All query tie-breaks use the point's row_id, lowest first, so results
are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappush, heapreplace
from typing import Optional

import numpy as np

from .mapping import Scene

LEAF_CAPACITY = 64
MAX_DEPTH = 12
_GRID = 1 << MAX_DEPTH


@dataclass(frozen=True)
class Ray:
    """Half-line from origin along a unit direction."""

    origin: tuple[float, float, float]
    direction: tuple[float, float, float]

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"ray direction norm {norm} is not 1 within 1e-6")


def make_ray(origin, toward) -> Ray:
    """Ray from origin pointing at the given target point."""
    d = np.asarray(toward, dtype=np.float64) - np.asarray(origin, dtype=np.float64)
    n = float(np.linalg.norm(d))
    if n == 0.0:
        raise ValueError("ray target coincides with origin")
    d = d / n
    return Ray(tuple(float(v) for v in origin), tuple(float(v) for v in d))


def _part1by2(v: np.ndarray) -> np.ndarray:
    # Spread the low 21 bits of each value two apart (standard 3D Morton).
    v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << 32)) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << 16)) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << 8)) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << 4)) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << 2)) & np.uint64(0x1249249249249249)
    return v


def morton_codes(positions: np.ndarray) -> np.ndarray:
    """36-bit Morton code per point at the max-depth grid resolution."""
    cells = np.clip(
        (positions.astype(np.float64) * _GRID).astype(np.int64), 0, _GRID - 1
    ).astype(np.uint64)
    return (
        (_part1by2(cells[:, 0]) << 2)
        | (_part1by2(cells[:, 1]) << 1)
        | _part1by2(cells[:, 2])
    )


class SpatialIndex:
    """Immutable octree over a scene; see build_index."""

    def __init__(self, scene: Scene):
        self.scene = scene
        n = scene.count
        pos = scene.position.astype(np.float64)
        codes = morton_codes(pos) if n else np.empty(0, dtype=np.uint64)
        order = np.argsort(codes, kind="stable")
        sorted_codes = codes[order]

        children: list[Optional[list]] = []
        starts: list[int] = []
        ends: list[int] = []
        cells: list[tuple[int, int, int]] = []
        depths: list[int] = []

        def new_node(start, end, cell, depth):
            children.append(None)
            starts.append(start)
            ends.append(end)
            cells.append(cell)
            depths.append(depth)
            return len(children) - 1

        root = new_node(0, n, (0, 0, 0), 0)
        stack = [root]
        while stack:
            node = stack.pop()
            start, end, depth = starts[node], ends[node], depths[node]
            if end - start <= LEAF_CAPACITY or depth == MAX_DEPTH:
                continue  # stays a leaf
            shift = 3 * (MAX_DEPTH - 1 - depth)
            base = (sorted_codes[start] >> np.uint64(shift + 3)) << np.uint64(
                shift + 3
            )
            bounds = base + (np.arange(1, 8, dtype=np.uint64) << np.uint64(shift))
            splits = np.searchsorted(sorted_codes[start:end], bounds) + start
            edges = [start, *splits.tolist(), end]
            kids = [-1] * 8
            cx, cy, cz = cells[node]
            for o in range(8):
                s, e = edges[o], edges[o + 1]
                if s == e:
                    continue
                cell = (2 * cx + (o >> 2), 2 * cy + ((o >> 1) & 1), 2 * cz + (o & 1))
                kid = new_node(s, e, cell, depth + 1)
                kids[o] = kid
                stack.append(kid)
            children[node] = kids

        n_nodes = len(children)
        self.node_children = np.full((n_nodes, 8), -1, dtype=np.int32)
        for i, kids in enumerate(children):
            if kids is not None:
                self.node_children[i] = kids
        self.is_leaf = np.asarray([k is None for k in children], dtype=bool)
        self.node_start = np.asarray(starts, dtype=np.int64)
        self.node_end = np.asarray(ends, dtype=np.int64)
        self.node_cell = np.asarray(cells, dtype=np.int64)
        self.node_depth = np.asarray(depths, dtype=np.int64)

        # Leaf membership in ascending point order ("insertion order").
        members = order.copy()
        leaf_ids = np.nonzero(self.is_leaf)[0]
        for leaf in leaf_ids:
            members[self.node_start[leaf] : self.node_end[leaf]] = np.sort(
                members[self.node_start[leaf] : self.node_end[leaf]]
            )
        self.members = members
        # Node ranges are contiguous in Morton order, so sorting leaves
        # by range start lists them in Morton order.
        self.leaves_morton = leaf_ids[np.argsort(self.node_start[leaf_ids])]

        for arr in (
            self.node_children,
            self.is_leaf,
            self.node_start,
            self.node_end,
            self.node_cell,
            self.node_depth,
            self.members,
            self.leaves_morton,
        ):
            arr.flags.writeable = False

    @property
    def n_leaves(self) -> int:
        return len(self.leaves_morton)

    def leaf_members(self, leaf: int) -> np.ndarray:
        return self.members[self.node_start[leaf] : self.node_end[leaf]]

    def node_bounds(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        size = 1.0 / (1 << self.node_depth[node])
        lo = self.node_cell[node] * size
        return lo, lo + size

    def leaf_at(self, position) -> int:
        """Leaf node id whose cell contains the given position."""
        cell = np.clip(
            (np.asarray(position, dtype=np.float64) * _GRID).astype(np.int64),
            0,
            _GRID - 1,
        )
        node = 0
        while not self.is_leaf[node]:
            depth = self.node_depth[node]
            bit = MAX_DEPTH - 1 - depth
            o = (
                (int(cell[0] >> bit) & 1) << 2
                | (int(cell[1] >> bit) & 1) << 1
                | (int(cell[2] >> bit) & 1)
            )
            child = self.node_children[node, o]
            if child < 0:
                return -1
            node = child
        return node


def build_index(scene: Scene) -> SpatialIndex:
    """Octree over all scene points; deterministic for a given scene."""
    return SpatialIndex(scene)


def squared_norms(rel: np.ndarray) -> np.ndarray:
    # Fixed x+y+z accumulation order so distances are bit-reproducible.
    return rel[:, 0] * rel[:, 0] + rel[:, 1] * rel[:, 1] + rel[:, 2] * rel[:, 2]


def ray_params(rel: np.ndarray, direction: np.ndarray) -> np.ndarray:
    return (
        rel[:, 0] * direction[0]
        + rel[:, 1] * direction[1]
        + rel[:, 2] * direction[2]
    )


def _ray_hits_box(origin, inv_dir, lo, hi) -> bool:
    """Slab test for the half-line t >= 0 against an AABB."""
    tmin, tmax = 0.0, math.inf
    for a in range(3):
        if math.isinf(inv_dir[a]):
            if origin[a] < lo[a] or origin[a] > hi[a]:
                return False
            continue
        t1 = (lo[a] - origin[a]) * inv_dir[a]
        t2 = (hi[a] - origin[a]) * inv_dir[a]
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return False
    return True


def pick(index: SpatialIndex, ray: Ray, pick_radius: float) -> Optional[int]:
    """Point the ray designates, or None.

    A point is a candidate when its perpendicular distance to the ray
    is at most pick_radius times the point's size and its projection
    falls on the forward half-line. The candidate nearest along the ray
    wins; ties go to the lower row_id.
    """
    if pick_radius <= 0:
        raise ValueError("pick_radius must be positive")
    scene = index.scene
    if scene.count == 0:
        return None

    origin = np.asarray(ray.origin, dtype=np.float64)
    direction = np.asarray(ray.direction, dtype=np.float64)
    with np.errstate(divide="ignore"):
        inv_dir = 1.0 / direction
    max_reach = pick_radius * float(scene.size.max()) * (1.0 + 1e-9) + 1e-12

    best: Optional[tuple[float, int, int]] = None  # (t, row_id, point index)
    stack = [0]
    while stack:
        node = stack.pop()
        lo, hi = index.node_bounds(node)
        if not _ray_hits_box(origin, inv_dir, lo - max_reach, hi + max_reach):
            continue
        if index.is_leaf[node]:
            pts = index.leaf_members(node)
            if len(pts) == 0:
                continue
            rel = scene.position[pts].astype(np.float64) - origin
            t = ray_params(rel, direction)
            perp2 = squared_norms(rel) - t * t
            limit = pick_radius * scene.size[pts].astype(np.float64)
            hit = (t >= 0.0) & (perp2 <= limit * limit)
            for j in np.nonzero(hit)[0]:
                cand = (float(t[j]), int(scene.row_id[pts[j]]), int(pts[j]))
                if best is None or cand[:2] < best[:2]:
                    best = cand
        else:
            for child in index.node_children[node]:
                if child >= 0:
                    stack.append(child)
    return best[2] if best else None


def knn(index: SpatialIndex, query, k: int) -> list[int]:
    """Indices of the k nearest points to the query position.

    Ascending by Euclidean distance, distance ties broken by lower
    row_id; returns fewer than k only when the scene is smaller.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scene = index.scene
    if scene.count == 0:
        return []
    q = np.asarray(query, dtype=np.float64)

    # Max-heap (negated keys) of the best k candidates seen so far.
    kept: list[tuple[float, int, int]] = []  # (-d2, -row_id, point index)

    def worst_d2() -> float:
        return -kept[0][0]

    def offer(d2: float, row: int, idx: int):
        entry = (-d2, -row, idx)
        if len(kept) < k:
            heappush(kept, entry)
        elif entry > kept[0]:
            heapreplace(kept, entry)

    def node_min_d2(node: int) -> float:
        lo, hi = index.node_bounds(node)
        delta = np.maximum(0.0, np.maximum(lo - q, q - hi))
        return float(delta @ delta)

    # Best-first over nodes; prune once a node cannot beat the current
    # worst kept distance (equal distances still explored for row ties).
    frontier: list[tuple[float, int]] = [(node_min_d2(0), 0)]
    while frontier:
        d2, node = frontier.pop()
        if len(kept) == k and d2 > worst_d2():
            continue
        if index.is_leaf[node]:
            pts = index.leaf_members(node)
            if len(pts) == 0:
                continue
            rel = scene.position[pts].astype(np.float64) - q
            dist2 = squared_norms(rel)
            for j in range(len(pts)):
                offer(float(dist2[j]), int(scene.row_id[pts[j]]), int(pts[j]))
        else:
            kids = [
                (node_min_d2(c), int(c))
                for c in index.node_children[node]
                if c >= 0
            ]
            # Visit nearest child first: pop() takes the list tail.
            kids.sort(reverse=True)
            frontier.extend(kids)

    ordered = sorted(kept, key=lambda e: (-e[0], -e[1]))
    return [idx for _, _, idx in ordered]


def decimate(
    scene: Scene, budget: int, index: Optional[SpatialIndex] = None
) -> Scene:
    """Cut a scene down to at most ``budget`` points, stratified.

    Selection round-robins over the occupied octree leaves in Morton
    order, taking each leaf's points in insertion order, until the
    budget fills. Attributes of retained points are copied unmodified;
    the result keeps the source's relative point order.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if budget >= scene.count:
        return scene
    if index is None:
        index = build_index(scene)

    leaves = [
        index.leaf_members(leaf)
        for leaf in index.leaves_morton
        if index.node_end[leaf] > index.node_start[leaf]
    ]
    sizes = np.asarray([len(m) for m in leaves], dtype=np.int64)

    # Largest number of complete round-robin passes that fits.
    full_rounds = 0
    lo_r, hi_r = 0, int(sizes.max())
    while lo_r < hi_r:
        mid = (lo_r + hi_r + 1) // 2
        if int(np.minimum(sizes, mid).sum()) <= budget:
            lo_r = mid
        else:
            hi_r = mid - 1
    full_rounds = lo_r

    taken = [m[: min(len(m), full_rounds)] for m in leaves]
    remaining = budget - int(np.minimum(sizes, full_rounds).sum())
    if remaining:
        for m in leaves:
            if len(m) > full_rounds:
                taken.append(m[full_rounds : full_rounds + 1])
                remaining -= 1
                if remaining == 0:
                    break
    selected = np.sort(np.concatenate(taken))
    return scene.take(selected)
