"""Octree structure, picking, kNN, and decimation.

Query tests compare against brute-force linear scans written here; the
scans use the same per-axis arithmetic expressions as the library so
equality can be exact, but share none of its traversal code.
"""

import numpy as np
import pytest

from hyperviz import Scene, build_index, decimate, knn, make_ray, pick
from hyperviz.index import LEAF_CAPACITY, MAX_DEPTH, Ray

from conftest import random_scene


# --- oracles -----------------------------------------------------------

def brute_pick(scene, ray, pick_radius):
    ox, oy, oz = ray.origin
    dx, dy, dz = ray.direction
    best = None
    for i in range(scene.count):
        rx = float(scene.position[i, 0]) - ox
        ry = float(scene.position[i, 1]) - oy
        rz = float(scene.position[i, 2]) - oz
        t = rx * dx + ry * dy + rz * dz
        if t < 0.0:
            continue
        perp2 = (rx * rx + ry * ry + rz * rz) - t * t
        limit = pick_radius * float(scene.size[i])
        if perp2 <= limit * limit:
            cand = (t, int(scene.row_id[i]), i)
            if best is None or cand[:2] < best[:2]:
                best = cand
    return best[2] if best else None


def brute_knn(scene, query, k):
    qx, qy, qz = (float(v) for v in query)
    entries = []
    for i in range(scene.count):
        rx = float(scene.position[i, 0]) - qx
        ry = float(scene.position[i, 1]) - qy
        rz = float(scene.position[i, 2]) - qz
        d2 = rx * rx + ry * ry + rz * rz
        entries.append((d2, int(scene.row_id[i]), i))
    entries.sort()
    return [i for _, _, i in entries[:k]]


def literal_round_robin(leaf_member_lists, budget):
    """Take column by column across leaves until the budget fills."""
    chosen = []
    col = 0
    while len(chosen) < budget:
        advanced = False
        for members in leaf_member_lists:
            if col < len(members):
                chosen.append(int(members[col]))
                advanced = True
                if len(chosen) == budget:
                    break
        if not advanced:
            break
        col += 1
    return sorted(chosen)


# --- structure ---------------------------------------------------------

def test_empty_scene_single_leaf(rng):
    idx = build_index(random_scene(rng, 0, coincident=False))
    assert idx.n_leaves == 1
    assert idx.is_leaf[0]
    assert len(idx.leaf_members(0)) == 0


def test_coincident_points_depth_chain(rng):
    n = LEAF_CAPACITY + 1
    scene = Scene(
        position=np.full((n, 3), 0.377, dtype=np.float32),
        color_rgba=np.zeros((n, 4), dtype=np.uint8),
        size=np.full(n, 0.5, dtype=np.float32),
        shape_id=np.zeros(n, dtype=np.uint8),
        orientation=np.zeros(n, dtype=np.float32),
        row_id=np.arange(n, dtype=np.uint64),
    )
    idx = build_index(scene)
    assert idx.n_leaves == 1
    leaf = idx.leaves_morton[0]
    assert idx.node_depth[leaf] == MAX_DEPTH
    assert len(idx.leaf_members(leaf)) == n
    # one straight chain: every interior node has exactly one child
    interior = ~idx.is_leaf
    assert np.all((idx.node_children[interior] >= 0).sum(axis=1) == 1)


def test_every_point_in_exactly_one_leaf(rng):
    scene = random_scene(rng, 5000)
    idx = build_index(scene)
    seen = np.concatenate([idx.leaf_members(l) for l in idx.leaves_morton])
    assert len(seen) == scene.count
    assert np.array_equal(np.sort(seen), np.arange(scene.count))


def test_leaf_capacity_respected(rng):
    scene = random_scene(rng, 3000, coincident=False)
    idx = build_index(scene)
    for leaf in idx.leaves_morton:
        n = idx.node_end[leaf] - idx.node_start[leaf]
        assert n <= LEAF_CAPACITY or idx.node_depth[leaf] == MAX_DEPTH


def test_membership_by_exact_position(rng):
    scene = random_scene(rng, 100_000, coincident=False)
    idx = build_index(scene)
    probe = rng.integers(0, scene.count, 500)
    for i in probe:
        leaf = idx.leaf_at(scene.position[i])
        assert leaf >= 0
        assert int(i) in set(idx.leaf_members(leaf).tolist())


def test_leaf_members_in_insertion_order(rng):
    scene = random_scene(rng, 2000)
    idx = build_index(scene)
    for leaf in idx.leaves_morton:
        members = idx.leaf_members(leaf)
        assert np.all(np.diff(members) > 0)


def test_build_deterministic(rng):
    scene = random_scene(rng, 1500)
    a, b = build_index(scene), build_index(scene)
    assert np.array_equal(a.members, b.members)
    assert np.array_equal(a.node_children, b.node_children)


# --- picking -----------------------------------------------------------

def test_pick_single_point_on_axis():
    scene = Scene(
        position=np.asarray([[0.5, 0.5, 0.5]], dtype=np.float32),
        color_rgba=np.zeros((1, 4), dtype=np.uint8),
        size=np.asarray([0.5], dtype=np.float32),
        shape_id=np.zeros(1, dtype=np.uint8),
        orientation=np.zeros(1, dtype=np.float32),
        row_id=np.asarray([0], dtype=np.uint64),
    )
    ray = Ray((0.5, 0.5, -1.0), (0.0, 0.0, 1.0))
    assert pick(build_index(scene), ray, 0.01) == 0


def test_pick_nearer_of_two():
    scene = Scene(
        position=np.asarray([[0.5, 0.5, 0.8], [0.5, 0.5, 0.4]], dtype=np.float32),
        color_rgba=np.zeros((2, 4), dtype=np.uint8),
        size=np.full(2, 0.5, dtype=np.float32),
        shape_id=np.zeros(2, dtype=np.uint8),
        orientation=np.zeros(2, dtype=np.float32),
        row_id=np.asarray([0, 1], dtype=np.uint64),
    )
    ray = Ray((0.5, 0.5, 0.0), (0.0, 0.0, 1.0))
    assert pick(build_index(scene), ray, 0.01) == 1


def test_pick_tie_lower_row_id():
    scene = Scene(
        position=np.asarray([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]], dtype=np.float32),
        color_rgba=np.zeros((2, 4), dtype=np.uint8),
        size=np.full(2, 0.5, dtype=np.float32),
        shape_id=np.zeros(2, dtype=np.uint8),
        orientation=np.zeros(2, dtype=np.float32),
        row_id=np.asarray([7, 3], dtype=np.uint64),
    )
    ray = Ray((0.5, 0.5, 0.0), (0.0, 0.0, 1.0))
    assert pick(build_index(scene), ray, 0.01) == 1


def test_pick_behind_origin_is_none():
    scene = Scene(
        position=np.asarray([[0.5, 0.5, 0.5]], dtype=np.float32),
        color_rgba=np.zeros((1, 4), dtype=np.uint8),
        size=np.asarray([0.5], dtype=np.float32),
        shape_id=np.zeros(1, dtype=np.uint8),
        orientation=np.zeros(1, dtype=np.float32),
        row_id=np.asarray([0], dtype=np.uint64),
    )
    ray = Ray((0.5, 0.5, 1.0), (0.0, 0.0, 1.0))
    assert pick(build_index(scene), ray, 0.5) is None


def test_pick_radius_validation(rng):
    idx = build_index(random_scene(rng, 3))
    with pytest.raises(ValueError):
        pick(idx, Ray((0, 0, 0), (1.0, 0.0, 0.0)), 0.0)


def random_ray(rng):
    origin = rng.uniform(-0.5, 1.5, 3)
    toward = rng.random(3)
    if np.allclose(origin, toward):
        toward = toward + 0.25
    return make_ray(origin, toward)


def test_pick_matches_brute_force(rng):
    for _ in range(150):
        scene = random_scene(rng, int(rng.integers(0, 400)))
        idx = build_index(scene)
        for _ in range(4):
            ray = random_ray(rng)
            radius = float(rng.uniform(0.001, 0.2))
            assert pick(idx, ray, radius) == brute_pick(scene, ray, radius)


# --- knn ---------------------------------------------------------------

def test_knn_single_point(rng):
    scene = random_scene(rng, 1, coincident=False)
    assert knn(build_index(scene), (0.1, 0.2, 0.3), 1) == [0]


def test_knn_k_exceeds_count(rng):
    scene = random_scene(rng, 5)
    idx = build_index(scene)
    got = knn(idx, (0.5, 0.5, 0.5), 50)
    assert got == brute_knn(scene, (0.5, 0.5, 0.5), 50)
    assert len(got) == 5


def test_knn_matches_brute_force(rng):
    for _ in range(150):
        scene = random_scene(rng, int(rng.integers(1, 400)))
        idx = build_index(scene)
        for _ in range(4):
            q = rng.uniform(-0.2, 1.2, 3)
            k = int(rng.integers(1, 12))
            assert knn(idx, q, k) == brute_knn(scene, q, k)


def test_knn_validation(rng):
    idx = build_index(random_scene(rng, 3))
    with pytest.raises(ValueError):
        knn(idx, (0, 0, 0), 0)


# --- decimation --------------------------------------------------------

def test_decimate_budget_covers_everything(rng):
    scene = random_scene(rng, 64)
    assert decimate(scene, 64) is scene
    assert decimate(scene, 1000) is scene


def test_decimate_budget_one(rng):
    scene = random_scene(rng, 200)
    out = decimate(scene, 1)
    assert out.count == 1


def test_decimate_two_clusters_balanced():
    # Two dense clusters with mirrored internal structure: ten sites of
    # fifty points each, so both decompose into identical leaf shapes.
    sites = np.asarray([0.01 * k for k in range(10)])
    cluster1 = np.repeat(0.2 + sites, 50)
    cluster2 = np.repeat(0.7 + sites, 50)
    coords = np.concatenate([cluster1, cluster2]).astype(np.float32)
    pos = np.stack([coords, coords, coords], axis=1)
    n = 1000
    scene = Scene(
        position=pos,
        color_rgba=np.zeros((n, 4), dtype=np.uint8),
        size=np.full(n, 0.5, dtype=np.float32),
        shape_id=np.zeros(n, dtype=np.uint8),
        orientation=np.zeros(n, dtype=np.float32),
        row_id=np.arange(n, dtype=np.uint64),
    )
    out = decimate(scene, 100)
    assert out.count == 100
    first = int((out.row_id < 500).sum())
    assert 48 <= first <= 52


def test_decimate_matches_literal_round_robin(rng):
    for _ in range(40):
        scene = random_scene(rng, int(rng.integers(2, 600)))
        budget = int(rng.integers(1, scene.count))
        idx = build_index(scene)
        leaf_lists = [
            idx.leaf_members(l).tolist()
            for l in idx.leaves_morton
            if idx.node_end[l] > idx.node_start[l]
        ]
        expected = literal_round_robin(leaf_lists, budget)
        out = decimate(scene, budget, idx)
        got = sorted(
            int(np.nonzero(scene.row_id == r)[0][0]) for r in out.row_id
        )
        assert got == expected
        assert out.count == min(budget, scene.count)


def test_decimate_preserves_attributes(rng):
    scene = random_scene(rng, 300)
    out = decimate(scene, 50)
    rows = {int(r): i for i, r in enumerate(scene.row_id)}
    for j, r in enumerate(out.row_id):
        i = rows[int(r)]
        assert np.array_equal(out.position[j], scene.position[i])
        assert np.array_equal(out.color_rgba[j], scene.color_rgba[i])
        assert out.size[j] == scene.size[i]
        assert out.shape_id[j] == scene.shape_id[i]
        assert out.orientation[j] == scene.orientation[i]
    assert out.excluded_rows == scene.excluded_rows


def test_decimate_rows_are_subset(rng):
    scene = random_scene(rng, 500)
    out = decimate(scene, 123)
    assert set(out.row_id.tolist()) <= set(scene.row_id.tolist())


def test_decimate_validation(rng):
    with pytest.raises(ValueError):
        decimate(random_scene(rng, 10), 0)


# --- rays --------------------------------------------------------------

def test_ray_requires_unit_direction():
    with pytest.raises(ValueError):
        Ray((0, 0, 0), (1.0, 1.0, 0.0))
    Ray((0, 0, 0), (1.0, 0.0, 0.0))


def test_make_ray_normalizes():
    ray = make_ray((0, 0, 0), (3.0, 4.0, 0.0))
    assert ray.direction == (0.6, 0.8, 0.0)
    with pytest.raises(ValueError):
        make_ray((1, 1, 1), (1, 1, 1))


# --- build cost scaling --------------------------------------------------

def test_build_time_scales_near_linearithmic():
    # Growing the point count 64x should cost at most ~2.4x per
    # doubling on average (2.4^6 overall). Individual steps are lumpy
    # because the leaf count jumps 8x whenever the tree gains a level,
    # so per-step we only guard against gross blowups. Median of three
    # runs per size tames timer noise. Uniform positions keep the tree
    # shape comparable across sizes.
    import time

    rng = np.random.default_rng(99)
    sizes = [15_625 * 2 ** k for k in range(7)]  # 15625 .. 1e6
    medians = []
    for n in sizes:
        scene = Scene(
            position=rng.random((n, 3)).astype(np.float32),
            color_rgba=np.zeros((n, 4), np.uint8),
            size=np.full(n, 0.5, np.float32),
            shape_id=np.zeros(n, np.uint8),
            orientation=np.zeros(n, np.float32),
            row_id=np.arange(n, dtype=np.uint64),
        )
        runs = []
        for _ in range(3):
            t0 = time.perf_counter()
            build_index(scene)
            runs.append(time.perf_counter() - t0)
        medians.append(sorted(runs)[1])
    assert medians[-1] <= medians[0] * 2.4 ** 6, (medians, sizes)
    for small, big in zip(medians, medians[1:]):
        assert big <= small * 4.0, (medians, sizes)
