"""Short vectors of 3-D lattices: LLL reduction and Fincke-Pohst counting."""
import math

import numba
import numpy as np


@numba.njit(cache=True)
def _gso(B, Bs, mu):
    n = B.shape[1]
    for i in range(n):
        for k in range(B.shape[0]):
            Bs[k, i] = B[k, i]
        for j in range(i):
            num = 0.0
            den = 0.0
            for k in range(B.shape[0]):
                num += B[k, i] * Bs[k, j]
                den += Bs[k, j] * Bs[k, j]
            mu[i, j] = num / den
            for k in range(B.shape[0]):
                Bs[k, i] -= mu[i, j] * Bs[k, j]


@numba.njit(cache=True)
def lll(B, delta=0.99):
    """LLL-reduce the columns of B (copy returned)."""
    B = B.copy()
    n = B.shape[1]
    m = B.shape[0]
    Bs = np.zeros_like(B)
    mu = np.zeros((n, n))
    _gso(B, Bs, mu)
    k = 1
    it = 0
    while k < n and it < 10000:
        it += 1
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q != 0:
                for r in range(m):
                    B[r, k] -= q * B[r, j]
                _gso(B, Bs, mu)
        nk = 0.0
        nk1 = 0.0
        for r in range(m):
            nk += Bs[r, k] ** 2
            nk1 += Bs[r, k - 1] ** 2
        if nk >= (delta - mu[k, k - 1] ** 2) * nk1:
            k += 1
        else:
            for r in range(m):
                tmp = B[r, k]
                B[r, k] = B[r, k - 1]
                B[r, k - 1] = tmp
            _gso(B, Bs, mu)
            k = max(k - 1, 1)
    return B


@numba.njit(cache=True)
def _cholesky_upper(B):
    # Q = B^T B = R^T R with R upper triangular
    G = B.T @ B
    return np.linalg.cholesky(G).T


@numba.njit(cache=True)
def count_short(B, r):
    """#{x in Z^3 \\ 0 : |B x| <= r} for an LLL-reduced 3x3 basis."""
    R = _cholesky_upper(B)
    r2 = r * r * (1 + 1e-12)
    cnt = 0
    q22 = R[2, 2]
    m3 = int(math.floor(r / abs(q22) + 1e-9))
    for x3 in range(-m3, m3 + 1):
        s3 = (q22 * x3) ** 2
        rem3 = r2 - s3
        if rem3 < 0:
            continue
        c2 = -R[1, 2] * x3 / R[1, 1]
        w2 = math.sqrt(rem3) / abs(R[1, 1])
        for x2 in range(int(math.ceil(c2 - w2 - 1e-12)), int(math.floor(c2 + w2 + 1e-12)) + 1):
            s2 = (R[1, 1] * x2 + R[1, 2] * x3) ** 2
            rem2 = rem3 - s2
            if rem2 < 0:
                continue
            c1 = -(R[0, 1] * x2 + R[0, 2] * x3) / R[0, 0]
            w1 = math.sqrt(rem2) / abs(R[0, 0])
            for x1 in range(int(math.ceil(c1 - w1 - 1e-12)), int(math.floor(c1 + w1 + 1e-12)) + 1):
                if x1 == 0 and x2 == 0 and x3 == 0:
                    continue
                v = R[0, 0] * x1 + R[0, 1] * x2 + R[0, 2] * x3
                if v * v + s2 + s3 <= r2:
                    cnt += 1
    return cnt


@numba.njit(cache=True)
def systole(B):
    """Length of the shortest nonzero vector (B LLL-reduced)."""
    best = 1e300
    for j in range(B.shape[1]):
        s = 0.0
        for i in range(B.shape[0]):
            s += B[i, j] ** 2
        best = min(best, s)
    r = math.sqrt(best)
    R = _cholesky_upper(B)
    r2 = best * (1 + 1e-12)
    m3 = int(math.floor(r / abs(R[2, 2]) + 1e-9))
    for x3 in range(-m3, m3 + 1):
        s3 = (R[2, 2] * x3) ** 2
        rem3 = r2 - s3
        if rem3 < 0:
            continue
        c2 = -R[1, 2] * x3 / R[1, 1]
        w2 = math.sqrt(rem3) / abs(R[1, 1])
        for x2 in range(int(math.ceil(c2 - w2 - 1e-12)), int(math.floor(c2 + w2 + 1e-12)) + 1):
            s2 = (R[1, 1] * x2 + R[1, 2] * x3) ** 2
            rem2 = rem3 - s2
            if rem2 < 0:
                continue
            c1 = -(R[0, 1] * x2 + R[0, 2] * x3) / R[0, 0]
            w1 = math.sqrt(rem2) / abs(R[0, 0])
            for x1 in range(int(math.ceil(c1 - w1 - 1e-12)), int(math.floor(c1 + w1 + 1e-12)) + 1):
                if x1 == 0 and x2 == 0 and x3 == 0:
                    continue
                v = R[0, 0] * x1 + R[0, 1] * x2 + R[0, 2] * x3
                q = v * v + s2 + s3
                if q < best:
                    best = q
    return math.sqrt(best)


@numba.njit(cache=True)
def batch_counts(Bs, radii):
    """Counts (n, len(radii)) and systoles (n,) for a stack of column bases."""
    n = Bs.shape[0]
    out = np.zeros((n, radii.size), dtype=np.int64)
    sys = np.zeros(n)
    for i in range(n):
        L = lll(Bs[i])
        for j in range(radii.size):
            out[i, j] = count_short(L, radii[j])
        sys[i] = systole(L)
    return out, sys


def brute_count(B, r, box=None):
    """Reference count by scanning a box (small, well-conditioned B only)."""
    B = np.asarray(B, dtype=float)
    if box is None:
        box = int(math.ceil(r * np.linalg.norm(np.linalg.inv(B), 2))) + 1
    rng = np.arange(-box, box + 1)
    X = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), -1).reshape(-1, 3)
    X = X[np.any(X != 0, axis=1)]
    return int(np.sum(np.sum((X @ B.T) ** 2, axis=1) <= r * r * (1 + 1e-12)))


def index_p_basis(n, p):
    """Column basis of {x : n.x = 0 mod p} for n a nonzero vector mod p."""
    n = [int(v) % p for v in n]
    j = next(i for i in (2, 1, 0) if n[i] != 0)
    inv = pow(n[j], -1, p)
    cols = []
    for i in range(3):
        if i == j:
            continue
        e = [0, 0, 0]
        e[i] = 1
        e[j] = (-n[i] * inv) % p
        cols.append(e)
    e = [0, 0, 0]
    e[j] = p
    cols.append(e)
    return np.array(cols, dtype=float).T


def hecke_lattices(p, n, rng):
    """n random index-p sublattices of Z^3 (uniform over P^2(F_p)),
    scaled to covolume 1.  These equidistribute in SL(3,R)/SL(3,Z) as p grows."""
    out = np.empty((n, 3, 3))
    s = p ** (-1.0 / 3.0)
    for i in range(n):
        while True:
            v = rng.integers(0, p, 3)
            if np.any(v != 0):
                break
        # uniform on P^2: accept a nonzero vector, the projective class is uniform
        out[i] = s * index_p_basis(v, p)
    return out
