"""Exhaustive reference enumerations used by several test files."""
import itertools

import numpy as np


def brute_sl2(T):
    m = int(np.floor(T))
    r = np.arange(-m, m + 1)
    a, b, c, d = np.meshgrid(r, r, r, r, indexing="ij")
    ok = (a * d - b * c == 1) & (a * a + b * b + c * c + d * d <= T * T + 1e-9)
    return {tuple(x) for x in np.stack([a[ok], b[ok], c[ok], d[ok]], 1)}


def brute_sl3(T):
    """Every integer 3x3 matrix with entries |x| <= T, det 1, ||g|| <= T.

    Rows are drawn from all integer vectors with |r|^2 <= T^2 (a superset of
    the entry box restricted by the norm), so nothing is pruned that could
    satisfy the constraints.
    """
    m = int(np.floor(T))
    T2 = T * T + 1e-9
    V = np.array([v for v in itertools.product(range(-m, m + 1), repeat=3)
                  if v[0] ** 2 + v[1] ** 2 + v[2] ** 2 <= T2], dtype=np.int64)
    nv = np.sum(V * V, axis=1)
    out = set()
    for i in range(len(V)):
        for j in range(len(V)):
            if nv[i] + nv[j] > T2:
                continue
            n = np.cross(V[i], V[j])
            d = V @ n
            ok = (d == 1) & (nv[i] + nv[j] + nv <= T2)
            for k in np.nonzero(ok)[0]:
                out.add(tuple(V[i]) + tuple(V[j]) + tuple(V[k]))
    return out
