# Score a sketched landmark map against ground truth.
#
# Each landmark has a bearing (degrees) and range (meters) from the
# observer. The raw score sums per-landmark bearing and range errors;
# with alignment enabled, the scorer first removes the best global
# rotation, so a map that is internally consistent but turned as a
# whole is not penalized for the turn.

import numpy as np

from hyperviz import Landmark, LandmarkSet, score_map

truth = LandmarkSet(
    [
        Landmark("tower", 10.0, 5.0),
        Landmark("gate", 60.0, 3.5),
        Landmark("well", 120.0, 8.0),
        Landmark("barn", 200.0, 2.0),
        Landmark("mill", 275.0, 6.5),
        Landmark("bridge", 330.0, 4.0),
    ]
)

# The subject drew every landmark 15 degrees clockwise of reality, with
# a little per-landmark noise on top.
rng = np.random.default_rng(3)
drawn = LandmarkSet(
    Landmark(m.id, m.bearing + 15.0 + rng.normal(0.0, 1.0), m.range + rng.normal(0.0, 0.2))
    for m in truth.landmarks
)

raw = score_map(truth, drawn, align=False)
print("raw score (no alignment):")
print(f"  total angle error:    {raw.total_angle_error:.2f} deg")
print(f"  total distance error: {raw.total_distance_error:.2f} m")

aligned = score_map(truth, drawn, align=True)
print("aligned score (global rotation removed):")
print(f"  rotation applied:     {aligned.rotation_applied:.2f} deg")
print(f"  total angle error:    {aligned.total_angle_error:.2f} deg")
print(f"  total distance error: {aligned.total_distance_error:.2f} m")

print("per-landmark aligned errors:")
for id, (dist_err, angle_err) in sorted(aligned.per_landmark.items()):
    print(f"  {id}: {angle_err:.2f} deg, {dist_err:.2f} m")
