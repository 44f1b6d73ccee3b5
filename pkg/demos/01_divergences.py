"""Bregman distances for the bundled functions.

Run with ``python3 demos/01_divergences.py``.
"""
import numpy as np

from bregcyclic import (Box, FunctionSpec, bregman, bregman_sum_identity, build,
                        total_convexity_modulus, uniform_convexity_modulus)

# %% three functions, one pair of points
specs = [FunctionSpec("squared_norm", 2),
         FunctionSpec("weighted_quadratic", 2, {"Q": [[1.0, 0.0], [0.0, 4.0]]}),
         FunctionSpec("negative_entropy", 2)]
x, y = np.array([1.0, 2.0]), np.array([3.0, 0.5])
for spec in specs:
    f = build(spec)
    print(f"{spec.kind:20s} D(y,x) = {bregman(f, y, x):.6f}   D(x,y) = {bregman(f, x, y):.6f}")

# %% the quadratics are symmetric; entropy is not. The symmetrised sum is
# always the gradient pairing, up to rounding.
ent = build(specs[2])
chk = bregman_sum_identity(ent, x, y)
print("sum identity residual:", chk.residual)

# %% moduli: inf of D over a sphere, and the midpoint gap over a region
region = Box([0.1, 0.1], [10.0, 10.0])
for t in (0.1, 0.5, 1.0):
    v = total_convexity_modulus(ent, [4.0, 4.0], t)
    d = uniform_convexity_modulus(ent, t, region, budget=3000)
    print(f"t = {t:4.1f}  total {v.value:.3e}  uniform {d.value:.3e}")
