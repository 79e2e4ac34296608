"""mu(H_T)/#Gamma_T and the implied covolume of SL(3,Z)."""
import math

import numpy as np

from .. import skewvol, zenum, haarcal


def ratio_experiment(cfg, workers=None):
    T_list = cfg.ratio["T_list"]
    workers = workers or cfg.workers
    # S_4(I,I) as a bracket: head at K plus the tail bound
    S = zenum.skewed_series(4, np.eye(2), np.eye(2), cfg.K)
    rows = []
    for T in T_list:
        spec = skewvol.SkewedBallSpec(np.eye(3), np.eye(3), float(T))
        vol = skewvol.ball_volume(spec)
        count = zenum.count_sl3z(T, workers)
        c = vol.mid / count
        # c_Gamma = m(G/Gamma) S_4 / (2 pi^3): the interval follows the S_4 bracket
        m_lo = 2 * math.pi ** 3 * vol.lo / count / S.hi
        m_hi = 2 * math.pi ** 3 * vol.hi / count / S.lo
        mid = 0.5 * (m_lo + m_hi)
        rows.append({"T": float(T), "mu_H": vol.mid, "mu_H_lo": vol.lo, "mu_H_hi": vol.hi,
                     "gamma_count": count, "ratio": c,
                     "m_est": [m_lo, m_hi],
                     "count_times_m_over_T6": count * mid / T ** 6})
    ratios = [r["ratio"] for r in rows]
    mids = [0.5 * sum(r["m_est"]) for r in rows]
    return {
        "S4": {"lo": S.lo, "hi": S.hi, "K": S.K},
        "rows": rows,
        "ratio_spread": (max(ratios) - min(ratios)) / np.mean(ratios),
        "m_est_spread": (max(mids) - min(mids)) / np.mean(mids),
        "m_GT_target": haarcal.PI4_OVER_3,
        "flag": "m(G/Gamma) is an empirical estimate, not a computed constant",
    }
