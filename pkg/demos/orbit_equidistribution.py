"""Orbit of the base point under growing norm balls of SL(3,Z).

For each T we push x0 = (Z^2 x 0, e3) through every gamma with
||gamma|| <= T, project to (shape, normal) and compare with the limit
measure: spherical-cap discrepancy for the normal and plain differences
of means for a few test functions.

    python demos/orbit_equidistribution.py [T ...]
"""
import sys

import numpy as np

from x23orbits import limitlaw, moduli
from x23orbits.harness import orbit_measure
from x23orbits.harness.stats import random_caps, cap_discrepancy

Ts = [float(t) for t in sys.argv[1:]] or [4.0, 8.0, 12.0]

lm = limitlaw.LimitMeasure(moduli.base_point())
names = ["bump_i", "bump_int", "w3sq"]
target = {n: lm.expectation(n).value for n in names}
caps = random_caps(1000, 7)

print(f"{'T':>5} {'#Gamma_T':>12} {'points':>9} {'cap disc':>9} " +
      " ".join(f"{n:>10}" for n in names))
for T in Ts:
    em = orbit_measure(T)
    d, _ = cap_discrepancy(em.w, em.weight, caps)
    diffs = [abs(em.mean(limitlaw.DICTIONARY[n]) - target[n]) for n in names]
    print(f"{T:5g} {em.total:12d} {len(em):9d} {d:9.4f} " + " ".join(f"{x:10.2e}" for x in diffs))

# the shapes pile up near the orbifold points at small T and spread out
em = orbit_measure(Ts[-1])
h, edges = np.histogram(em.z.imag, bins=[np.sqrt(3) / 2, 1, 1.2, 1.5, 2, 3, 5, np.inf], weights=em.weight)
print("\nmass of Im z in bins", np.round(edges[:-1], 2).tolist())
print("  empirical:", np.round(h, 4).tolist())
print("  limit    :", [round(limitlaw.mass_above(lm, a) - limitlaw.mass_above(lm, b), 4)
                      if np.isfinite(b) else round(limitlaw.mass_above(lm, a), 4)
                      for a, b in zip(edges[:-1], edges[1:])])
