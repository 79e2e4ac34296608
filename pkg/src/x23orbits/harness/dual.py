"""H-averages on G/Gamma: lattice-point counts of h^-1 g1 Z^3 over skewed balls."""
import math

import numpy as np

from .. import skewvol
from . import lattices


def ball_volume_r(r):
    return 4.0 / 3.0 * math.pi * r ** 3


def siegel_oracle(radii, p=10007, n=20000, seed=0):
    """Mean F_r over random index-p Hecke lattices (independent of H)."""
    rng = np.random.default_rng(seed)
    B = lattices.hecke_lattices(p, n, rng)
    cnt, _ = lattices.batch_counts(B, np.asarray(radii, dtype=float))
    m = cnt.mean(axis=0)
    se = cnt.std(axis=0, ddof=1) / math.sqrt(n)
    return m, se


def lattice_counts(g1, g2, T, radii, n, seed):
    spec = skewvol.SkewedBallSpec(np.asarray(g1, float), np.asarray(g2, float), float(T))
    hs = skewvol.h_ball_sampler(spec, seed, n)
    H = hs.embed()
    bases = np.linalg.solve(H, np.broadcast_to(spec.g1, H.shape))   # columns of h^-1 g1
    return lattices.batch_counts(np.ascontiguousarray(bases), np.asarray(radii, dtype=float))


def dual_experiment(cfg, r_list=None):
    d = cfg.dual
    radii = list(r_list if r_list is not None else d["radii"])
    ss = np.random.SeedSequence(cfg.seed)
    s_h, s_o = ss.spawn(2)
    cnt, sys = lattice_counts(d["g1"], d["g2"], d["T"], radii, d["samples"],
                              np.random.default_rng(s_h).integers(2 ** 63))
    n = cnt.shape[0]
    om, ose = siegel_oracle(radii, d["hecke_p"], d["hecke_samples"],
                            np.random.default_rng(s_o).integers(2 ** 63))
    rows = []
    for j, r in enumerate(radii):
        c = cnt[:, j]
        mean = float(c.mean())
        se = float(c.std(ddof=1) / math.sqrt(n))
        vol = ball_volume_r(r)
        zero_frac = float(np.mean(c == 0))
        rows.append({
            "r": r, "mean": mean, "se": se, "target": vol,
            "rel_dev": (mean - vol) / vol,
            "oracle_mean": float(om[j]), "oracle_se": float(ose[j]),
            "oracle_rel_dev": float((om[j] - vol) / vol),
            "zero_fraction": zero_frac,
            "systole_above_r": float(np.mean(sys > r)),
        })
    edges = np.asarray(d["systole_bins"] + [np.inf], dtype=float)
    hist, _ = np.histogram(sys, bins=edges)
    return {
        "T": d["T"], "samples": n, "g1": d["g1"], "g2": d["g2"],
        "counts": rows,
        "systole": {"edges": [float(e) for e in edges[:-1]] + ["inf"],
                    "hist": hist.tolist(), "min": float(sys.min()),
                    "median": float(np.median(sys))},
        "oracle": {"kind": "Hecke index-p sublattices", "p": d["hecke_p"],
                   "samples": d["hecke_samples"]},
    }
