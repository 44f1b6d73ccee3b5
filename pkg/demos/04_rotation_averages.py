"""A quarter-turn of the unit disk.

The orbit of (1, 0) cycles through four points forever, so plain
iteration never settles. Its running averages cancel every full turn
and converge to the fixed point 0 at rate 1/N.
"""
import numpy as np

from bregcyclic import cesaro, find_fixed_point, orbit
from bregcyclic.systems import rotation_system

sys = rotation_system()
print(orbit(sys, [1.0, 0.0], 4).points)
print("iteration:", find_fixed_point(sys, None, [1.0, 0.0], max_iter=1000).classification)

S = cesaro(sys, [1.0, 0.0], "plain", 12)
for n in range(1, 13):
    print(f"N = {n:2d}  |S_N| = {np.linalg.norm(S[n]):.4f}")
