"""Spherical-cap discrepancy and weighted summaries."""
import math

import numba
import numpy as np


def random_caps(n, seed):
    """n caps {w : w.c >= h}: centres uniform on S^2, h uniform in [-1,1]."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((n, 3))
    c /= np.linalg.norm(c, axis=1)[:, None]
    h = rng.uniform(-1.0, 1.0, n)
    return c, h


@numba.njit(cache=True)
def _cap_mass(w, wt, c, h):
    n = w.shape[0]
    m = c.shape[0]
    out = np.zeros(m)
    for j in range(m):
        s = 0.0
        for i in range(n):
            if w[i, 0] * c[j, 0] + w[i, 1] * c[j, 1] + w[i, 2] * c[j, 2] >= h[j]:
                s += wt[i]
        out[j] = s
    return out


def cap_discrepancy(w, weight, caps):
    """max over caps of |empirical mass - (1-h)/2|, plus the arg max."""
    c, h = caps
    w = np.ascontiguousarray(w, dtype=float)
    wt = np.ascontiguousarray(weight, dtype=float)
    wt = wt / wt.sum()
    mass = _cap_mass(w, wt, np.ascontiguousarray(c), np.ascontiguousarray(h))
    dev = np.abs(mass - 0.5 * (1.0 - h))
    j = int(np.argmax(dev))
    return float(dev[j]), j


def weighted_mean(values, weight):
    values = np.asarray(values, dtype=float)
    wt = np.asarray(weight, dtype=float)
    return float(np.dot(values, wt) / wt.sum())


def monotone_decreasing(xs, strict=True):
    xs = list(xs)
    if strict:
        return all(b < a for a, b in zip(xs, xs[1:]))
    return all(b <= a for a, b in zip(xs, xs[1:]))
