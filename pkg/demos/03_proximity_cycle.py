"""Two disjoint intervals and a map that swaps them.

A0 = [1, 3], A1 = [-3, -1]. T sends A0 into A1 and back. No point is
fixed, but the two-step map x -> (x + 3)/4 on A0 has the fixed point 1,
and the pair (1, -1) sits at the distance between the sets.
"""
from bregcyclic import (FunctionSpec, build, cesaro, composite_hybrid_certificate,
                        cyclic_contraction_certificate, find_proximity_cycle, validate_cyclicity)
from bregcyclic.systems import two_interval_system

sys = two_interval_system()
f = build(FunctionSpec("squared_norm", 1))

print("cyclic:", validate_cyclicity(sys).verdict)
print("two-step map hybrid with K = 1/16:", composite_hybrid_certificate(sys, f, 0, 1 / 16).verdict)
c = cyclic_contraction_certificate(sys, 0.5)
print("cyclic contraction, k = 1/2:", c.verdict, "set distance", c.details["distances"][0])

rep = find_proximity_cycle(sys, [3.0])
print("cycle:", [float(v[0]) for v in rep.cycle], "after", rep.iterations_used, "composite steps")
print("gaps equal set distances:", rep.details["realizes_distance"])

# averages of the two-step orbit and of its shift land on the two cycle points
print("comp average  :", cesaro(sys, [3.0], "comp_i", 2000)[2000])
print("shifted avg   :", cesaro(sys, [3.0], "comp_ij", 2000, j=1)[2000])
