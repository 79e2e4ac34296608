"""Lattice point counts of h^-1 Z^3 for h drawn from the skewed ball.

As T grows the average of F_r (nonzero vectors of norm <= r) tends to
the Siegel mean (4/3) pi r^3.  Random Hecke sublattices give an
independent reference sample for the same mean.
"""
import numpy as np

from x23orbits.harness import RunConfig, dual_experiment

for T in (10.0, 30.0, 60.0):
    cfg = RunConfig.from_dict({"dual": {"T": T, "samples": 20000, "hecke_samples": 5000,
                                        "radii": [0.5, 1.0, 1.5, 2.0]}})
    rep = dual_experiment(cfg)
    print(f"T = {T:g}")
    for r in rep["counts"]:
        print(f"   r={r['r']:<4g} F_r {r['mean']:8.3f} +- {r['se']:.3f}   target {r['target']:8.3f}"
              f"   hecke {r['oracle_mean']:8.3f}   P(F_r=0) {r['zero_fraction']:.3f}")
    print("   systole median", round(rep["systole"]["median"], 4))
