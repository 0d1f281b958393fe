# Spatial queries on a scene: ray picking, nearest neighbors, and
# budget-driven decimation.
#
# The index is an octree over the unit cube. Picking walks it front to
# back and returns the first point whose screen-space radius the ray
# passes through; ties go to the lower row id so results are stable.

import numpy as np

from hyperviz import Catalog, ChannelMapping, build_index, build_scene, decimate, knn, make_ray, pick

rng = np.random.default_rng(11)

# Two dense clusters plus a sparse background.
a = rng.normal(0.25, 0.04, (4000, 3))
b = rng.normal(0.75, 0.04, (4000, 3))
bg = rng.random((2000, 3))
pts = np.clip(np.vstack([a, b, bg]), 0.0, 1.0)

catalog = Catalog.from_arrays({"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2]})
mapping = ChannelMapping.from_json(
    {"channels": {"pos_x": {"column": "x"}, "pos_y": {"column": "y"}, "pos_z": {"column": "z"}}}
)
scene = build_scene(catalog, mapping)
index = build_index(scene)
print(f"indexed {scene.count} points in {index.n_leaves} octree leaves")

# Shoot a ray from a camera in front of the cube toward cluster a.
ray = make_ray(origin=(0.5, 0.5, 2.5), toward=scene.position[123])
hit = pick(index, ray, pick_radius=0.01)
print(f"pick along ray: point {hit}, row_id {scene.row_id[hit]}")

# Nearest neighbors around the first cluster center.
nearest = knn(index, (0.25, 0.25, 0.25), k=5)
print("5 nearest to cluster center:", [int(scene.row_id[i]) for i in nearest])

# Decimate to a budget. Selection is stratified across octree leaves,
# so both clusters keep roughly proportional representation.
small = decimate(scene, budget=500, index=index)
kept = small.position
in_a = int((np.abs(kept - 0.25).max(axis=1) < 0.2).sum())
in_b = int((np.abs(kept - 0.75).max(axis=1) < 0.2).sum())
print(f"decimated to {small.count} points: ~{in_a} near cluster a, ~{in_b} near cluster b")

# The decimated scene is a real scene: it can be indexed and queried too.
small_index = build_index(small)
print(f"re-picking in the decimated scene works: {pick(small_index, ray, 0.05) is not None}")
