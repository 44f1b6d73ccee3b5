"""A one-set contraction: Tx = x/2 on [-1, 1].

The hybrid inequality holds with K = 1/4, so divergences along paired
orbits shrink by a factor 4 per step and the orbit settles at 0.
"""
import numpy as np

from bregcyclic import (FunctionSpec, HybridParams, bregman_trajectory, build, find_fixed_point,
                        geometric_bound_check, hybrid_certificate, orbit)
from bregcyclic.systems import halving_system

f = build(FunctionSpec("squared_norm", 1))
sys = halving_system()
hp = HybridParams.constant(0.25)

cert = hybrid_certificate(sys, f, hp)
print("hybrid, K = 1/4:", cert.verdict, "worst margin", cert.worst_margin)
print("hybrid, K = 1/10:", hybrid_certificate(sys, f, HybridParams.constant(0.1)).witness)

d = bregman_trajectory(f, orbit(sys, [1.0], 10), orbit(sys, [-1.0], 10))
print("D(T^n x, T^n y):", d)
print("equals 4 * 4^-n:", np.array_equal(d, 4.0 * 0.25 ** np.arange(11)))

rep = geometric_bound_check(f, sys, hp, [1.0], [-1.0], 10)
print("geometric bound margins >= 0:", bool(np.all(rep.margins >= 0)))

fp = find_fixed_point(sys, f, [1.0])
print(f"fixed point {fp.limit[0]:.2e} after {fp.iterations_used} steps")
