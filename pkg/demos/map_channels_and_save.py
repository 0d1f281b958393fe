# Map table columns onto visual channels and save the result.
#
# A mapping assigns columns to up to eight channels (three position
# axes, color, size, shape, alpha, orientation), each with a linear,
# log, or rank transform. Rows missing a positional value are excluded;
# missing values on other channels fall back to neutral defaults.

import numpy as np

from hyperviz import Catalog, ChannelMapping, build_scene, read_scene_bytes, write_scene_bytes

rng = np.random.default_rng(7)
n = 10_000

mass = 10.0 ** rng.normal(1.0, 0.8, n)  # log-normal, so use a log transform
temp = rng.uniform(3000.0, 12000.0, n)
dist = rng.exponential(50.0, n)
dist[rng.random(n) < 0.02] = np.nan  # a few rows have no distance

catalog = Catalog.from_arrays(
    {
        "x": rng.random(n),
        "y": rng.random(n),
        "dist": dist,
        "temp": temp,
        "mass": mass,
    }
)

mapping = ChannelMapping.from_json(
    {
        "channels": {
            "pos_x": {"column": "x"},
            "pos_y": {"column": "y"},
            "pos_z": {"column": "dist", "transform": {"kind": "rank"}},
            "color": {"column": "temp"},
            # Clip the top/bottom percentile so outliers do not flatten
            # the size range.
            "size": {
                "column": "mass",
                "transform": {"kind": "log", "clip_lo": 1.0, "clip_hi": 99.0},
            },
        }
    }
)

scene = build_scene(catalog, mapping)
print(f"scene points: {scene.count}, excluded rows: {scene.excluded_rows}")
print(f"position range: {scene.position.min():.3f} .. {scene.position.max():.3f}")
print(f"size range: {scene.size.min():.3f} .. {scene.size.max():.3f}")

# Serialize to the binary scene format and read it back.
blob = write_scene_bytes(scene)
overhead = len(blob) - 33 * scene.count  # 33 attribute bytes per point
print(f"file size: {len(blob)} bytes (33 per point + {overhead} header/trailer)")

back = read_scene_bytes(blob)
print(f"round trip exact: {back.equals(scene)}")
print(f"mapping travels with the file: {back.mapping == mapping}")
