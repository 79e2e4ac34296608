"""numba kernels shared by the enumeration and volume code."""
import math

import numba
import numpy as np

BOUND_TOL = 1e-9


@numba.njit(cache=True)
def isqrt(n):
    if n <= 0:
        return 0
    r = int(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@numba.njit(cache=True)
def egcd(a, b):
    """(g, x, y) with g = gcd(a, b) >= 0 and x a + y b = g."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b != 0:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


@numba.njit(cache=True)
def gcd3(a, b, c):
    g, _, _ = egcd(a, b)
    g, _, _ = egcd(g, c)
    return g


@numba.njit(cache=True)
def int_bound(T):
    """Largest integer N with N <= T^2 (with a tiny tolerance)."""
    return np.int64(math.floor(T * T + BOUND_TOL * max(1.0, T * T)))


# ----------------------------------------------------------------------
# SL(2,Z)
# ----------------------------------------------------------------------

@numba.njit(cache=True)
def _sl2_scan(N2, out):
    """Count (and write, if out has rows) all gamma with ||gamma||^2 <= N2.

    Column form: primitive first column (a, c), then the line of second
    columns (b0 + k a, d0 + k c).
    """
    R = int(isqrt(N2))
    write = out.shape[0] > 0
    cnt = 0
    for a in range(-R, R + 1):
        for c in range(-R, R + 1):
            m = a * a + c * c
            if m == 0 or m > N2 - 1:
                continue
            g, x, y = egcd(a, c)
            if g != 1:
                continue
            b0 = -y
            d0 = x
            # |b0 + k a|^2 + |d0 + k c|^2 <= N2 - m
            p = a * b0 + c * d0
            q = b0 * b0 + d0 * d0
            rem = N2 - m
            kc = -p / m
            disc = (p * p - m * (q - rem)) / (m * m)
            if disc < 0.0:
                if disc < -1e-9:
                    continue
                disc = 0.0
            h = math.sqrt(disc)
            klo = int(math.floor(kc - h)) - 1
            khi = int(math.ceil(kc + h)) + 1
            for k in range(klo, khi + 1):
                b = b0 + k * a
                d = d0 + k * c
                if b * b + d * d <= rem:
                    if write:
                        out[cnt, 0] = a
                        out[cnt, 1] = b
                        out[cnt, 2] = c
                        out[cnt, 3] = d
                    cnt += 1
    return cnt


@numba.njit(cache=True)
def _ellipse_points(G, rho2):
    """Integer points x in Z^2 with x^T G x <= rho2 (G 2x2 SPD)."""
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[0, 1]
    # |x0| <= sqrt(rho2 G11 / det)
    r0 = math.sqrt(max(rho2, 0.0) * G[1, 1] / det)
    lo0 = int(math.floor(-r0)) - 1
    hi0 = int(math.ceil(r0)) + 1
    cap = 16
    pts = np.empty((cap, 2), dtype=np.int64)
    n = 0
    for x0 in range(lo0, hi0 + 1):
        rem = rho2 - (det / G[1, 1]) * x0 * x0
        if rem < 0.0:
            continue
        c = -G[0, 1] * x0 / G[1, 1]
        h = math.sqrt(rem / G[1, 1])
        for x1 in range(int(math.floor(c - h)) - 1, int(math.ceil(c + h)) + 2):
            if G[0, 0] * x0 * x0 + 2 * G[0, 1] * x0 * x1 + G[1, 1] * x1 * x1 <= rho2 * (1 + 1e-12):
                if n == cap:
                    cap *= 2
                    new = np.empty((cap, 2), dtype=np.int64)
                    new[:n] = pts[:n]
                    pts = new
                pts[n, 0] = x0
                pts[n, 1] = x1
                n += 1
    return pts[:n]


@numba.njit(cache=True)
def sl2_skew_scan(A, B, K):
    """All gamma in SL(2,Z) with ||A gamma B|| <= K.

    Returns (gammas (n,4) rows a,b,c,d ; squared norms (n,)).
    For gamma = [c1 | c2]:  A gamma B = (A c1) r1 + (A c2) r2 with r_i the
    rows of B, and along c2 = c20 + k c1 the squared norm is
    alpha ((k + shift)^2 + v^2).
    """
    dA = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    dB = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    r1 = B[0]
    r2 = B[1]
    r2n = r2[0] * r2[0] + r2[1] * r2[1]
    sstar = -(r1[0] * r2[0] + r1[1] * r2[1]) / r2n
    K2 = K * K
    rho = K * math.sqrt(r2n) / abs(dB)
    AtA = A.T @ A
    cand = _ellipse_points(AtA, rho * rho * (1 + 1e-12))
    cap = 64
    gam = np.empty((cap, 4), dtype=np.int64)
    nrm = np.empty(cap)
    n = 0
    for i in range(cand.shape[0]):
        a = cand[i, 0]
        c = cand[i, 1]
        if a == 0 and c == 0:
            continue
        g, x, y = egcd(a, c)
        if g != 1:
            continue
        b0 = -y
        d0 = x
        u0 = A[0, 0] * a + A[0, 1] * c
        u1 = A[1, 0] * a + A[1, 1] * c
        w0 = A[0, 0] * b0 + A[0, 1] * d0
        w1 = A[1, 0] * b0 + A[1, 1] * d0
        uu = u0 * u0 + u1 * u1
        s0 = (w0 * u0 + w1 * u1) / uu
        al = uu * r2n
        v2 = dB * dB / (r2n * r2n) + dA * dA / (uu * uu)
        rem = K2 / al - v2
        if rem < -1e-9:
            continue
        h = math.sqrt(max(rem, 0.0))
        sh = s0 - sstar
        for k in range(int(math.floor(-sh - h)) - 1, int(math.ceil(-sh + h)) + 2):
            b = b0 + k * a
            d = d0 + k * c
            # M = A gamma B
            g00 = a * B[0, 0] + b * B[1, 0]
            g01 = a * B[0, 1] + b * B[1, 1]
            g10 = c * B[0, 0] + d * B[1, 0]
            g11 = c * B[0, 1] + d * B[1, 1]
            m00 = A[0, 0] * g00 + A[0, 1] * g10
            m01 = A[0, 0] * g01 + A[0, 1] * g11
            m10 = A[1, 0] * g00 + A[1, 1] * g10
            m11 = A[1, 0] * g01 + A[1, 1] * g11
            F = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
            if F <= K2:
                if n == cap:
                    cap *= 2
                    ng = np.empty((cap, 4), dtype=np.int64)
                    ng[:n] = gam[:n]
                    gam = ng
                    nn = np.empty(cap)
                    nn[:n] = nrm[:n]
                    nrm = nn
                gam[n, 0] = a
                gam[n, 1] = b
                gam[n, 2] = c
                gam[n, 3] = d
                nrm[n] = F
                n += 1
    return gam[:n], nrm[:n]


# ----------------------------------------------------------------------
# SL(3,Z)
# ----------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _sl3_for_r1(a1, a2, a3, N2, out, start, W, Woff):
    """All gamma in SL(3,Z) with first row r1=(a1,a2,a3), ||gamma||^2 <= N2.

    Returns the number found.  If out has rows they are written from
    index `start`.  If W has more than one cell, W[n + Woff] += 1 for the
    normal n = r1 x r2 of each gamma.
    """
    write = out.shape[0] > 0
    agg = W.shape[0] > 1
    m1 = a1 * a1 + a2 * a2 + a3 * a3
    cnt = 0
    lim2 = N2 - 1 - m1
    if lim2 < 1:
        return 0
    R2 = int(isqrt(lim2))
    for b1 in range(-R2, R2 + 1):
        for b2 in range(-R2, R2 + 1):
            rem = lim2 - b1 * b1 - b2 * b2
            if rem < 0:
                continue
            R3 = int(isqrt(rem))
            for b3 in range(-R3, R3 + 1):
                m2 = b1 * b1 + b2 * b2 + b3 * b3
                n1 = a2 * b3 - a3 * b2
                n2 = a3 * b1 - a1 * b3
                n3 = a1 * b2 - a2 * b1
                g12, x, y = egcd(n1, n2)
                gg, al, be = egcd(g12, n3)
                if gg != 1:
                    continue
                p1 = al * x
                p2 = al * y
                p3 = be
                G11 = m1
                G22 = m2
                G12 = a1 * b1 + a2 * b2 + a3 * b3
                det = G11 * G22 - G12 * G12
                rho2 = N2 - m1 - m2
                q1 = a1 * p1 + a2 * p2 + a3 * p3
                q2 = b1 * p1 + b2 * p2 + b3 * p3
                sc = -(G22 * q1 - G12 * q2) / det
                uc = -(-G12 * q1 + G11 * q2) / det
                pp = p1 * p1 + p2 * p2 + p3 * p3
                mn = pp + sc * q1 + uc * q2
                rr = rho2 - mn
                if rr < -1e-7:
                    continue
                if rr < 0.0:
                    rr = 0.0
                ds = math.sqrt(rr * G22 / det)
                for s in range(int(math.floor(sc - ds)) - 1, int(math.ceil(sc + ds)) + 2):
                    dsv = s - sc
                    ucent = uc - G12 * dsv / G22
                    rem2 = rr - (det / G22) * dsv * dsv
                    if rem2 < -1e-7:
                        continue
                    du = math.sqrt(max(rem2, 0.0) / G22)
                    for u in range(int(math.floor(ucent - du)) - 1, int(math.ceil(ucent + du)) + 2):
                        c1 = p1 + s * a1 + u * b1
                        c2 = p2 + s * a2 + u * b2
                        c3 = p3 + s * a3 + u * b3
                        if c1 * c1 + c2 * c2 + c3 * c3 <= rho2:
                            if write:
                                i = start + cnt
                                out[i, 0] = a1
                                out[i, 1] = a2
                                out[i, 2] = a3
                                out[i, 3] = b1
                                out[i, 4] = b2
                                out[i, 5] = b3
                                out[i, 6] = c1
                                out[i, 7] = c2
                                out[i, 8] = c3
                            if agg:
                                W[n1 + Woff, n2 + Woff, n3 + Woff] += 1
                            cnt += 1
    return cnt


@numba.njit(cache=True)
def primitive_rows(N2max):
    """Primitive integer 3-vectors with squared norm <= N2max, lex order."""
    R = int(isqrt(max(N2max, 0)))
    cap = 64
    out = np.empty((cap, 3), dtype=np.int64)
    n = 0
    for a1 in range(-R, R + 1):
        for a2 in range(-R, R + 1):
            for a3 in range(-R, R + 1):
                m = a1 * a1 + a2 * a2 + a3 * a3
                if m == 0 or m > N2max:
                    continue
                if gcd3(a1, a2, a3) != 1:
                    continue
                if n == cap:
                    cap *= 2
                    new = np.empty((cap, 3), dtype=np.int64)
                    new[:n] = out[:n]
                    out = new
                out[n, 0] = a1
                out[n, 1] = a2
                out[n, 2] = a3
                n += 1
    return out[:n]


@numba.njit(cache=True, nogil=True)
def sl3_count_rows(rows, N2):
    dummy = np.empty((0, 9), dtype=np.int64)
    W = np.zeros((1, 1, 1), dtype=np.int64)
    counts = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[0]):
        counts[i] = _sl3_for_r1(rows[i, 0], rows[i, 1], rows[i, 2], N2, dummy, 0, W, 0)
    return counts


@numba.njit(cache=True, nogil=True)
def sl3_list_rows(rows, N2, counts):
    total = 0
    for i in range(counts.shape[0]):
        total += counts[i]
    out = np.empty((total, 9), dtype=np.int64)
    W = np.zeros((1, 1, 1), dtype=np.int64)
    start = 0
    for i in range(rows.shape[0]):
        start += _sl3_for_r1(rows[i, 0], rows[i, 1], rows[i, 2], N2, out, start, W, 0)
    return out


@numba.njit(cache=True, nogil=True)
def sl3_aggregate_normals(rows, N2, W, Woff):
    dummy = np.empty((0, 9), dtype=np.int64)
    tot = 0
    for i in range(rows.shape[0]):
        tot += _sl3_for_r1(rows[i, 0], rows[i, 1], rows[i, 2], N2, dummy, 0, W, Woff)
    return tot


# ----------------------------------------------------------------------
# strata of skewed balls
# ----------------------------------------------------------------------

@numba.njit(cache=True)
def root_a(F, T2, c2):
    """Smaller positive root of p(t) = -c2 t^3 + T2 t - F (Newton from the left)."""
    t = F / T2
    for _ in range(200):
        p = -c2 * t * t * t + T2 * t - F
        dp = -3.0 * c2 * t * t + T2
        if dp <= 0.0:
            break
        step = -p / dp
        t += step
        if abs(step) <= 1e-14 * t:
            break
    return t


@numba.njit(cache=True)
def root_b(F, T2, c2, t0):
    """Larger positive root (Newton from sqrt(3) t0, where p = -F < 0)."""
    t = math.sqrt(3.0) * t0
    for _ in range(200):
        p = -c2 * t * t * t + T2 * t - F
        dp = -3.0 * c2 * t * t + T2
        if dp >= 0.0:
            break
        step = -p / dp
        t += step
        if abs(step) <= 1e-14 * t:
            break
    return t


@numba.njit(cache=True)
def stratum_unit(F, T, c):
    """Stratum volume divided by pi/(G4^2 |det H1|); 0 if (near) degenerate."""
    T2 = T * T
    c2 = c * c
    MT = 2.0 * T * T2 / (3.0 * math.sqrt(3.0) * c)
    if F >= MT or MT - F < 1e-9 * MT:
        return 0.0
    t0 = T / (math.sqrt(3.0) * c)
    a = root_a(F, T2, c2)
    b = root_b(F, T2, c2, t0)
    v = c2 * math.log(a / b) + T2 / 6.0 * (1.0 / (a * a) - 1.0 / (b * b))
    if v < 0.0:
        v = 0.0
    return v


@numba.njit(cache=True, nogil=True)
def skew_volume_stream(A, B, K, T, c):
    """Stream all gamma with ||A gamma B|| <= K and accumulate

        sum of stratum_unit(F), sum of F^-2, number of terms, number of
        near-degenerate strata

    using compensated summation.  Nothing is materialised.
    """
    dA = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    dB = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    r1 = B[0]
    r2 = B[1]
    r2n = r2[0] * r2[0] + r2[1] * r2[1]
    sstar = -(r1[0] * r2[0] + r1[1] * r2[1]) / r2n
    K2 = K * K
    rho = K * math.sqrt(r2n) / abs(dB)
    AtA = A.T @ A
    cand = _ellipse_points(AtA, rho * rho * (1 + 1e-12))
    T2 = T * T
    MT = 2.0 * T * T2 / (3.0 * math.sqrt(3.0) * c)
    sv = 0.0
    cv = 0.0
    sl = 0.0
    cl = 0.0
    n = 0
    ndeg = 0
    for i in range(cand.shape[0]):
        a = cand[i, 0]
        cc = cand[i, 1]
        if a == 0 and cc == 0:
            continue
        g, x, y = egcd(a, cc)
        if g != 1:
            continue
        b0 = -y
        d0 = x
        u0 = A[0, 0] * a + A[0, 1] * cc
        u1 = A[1, 0] * a + A[1, 1] * cc
        w0 = A[0, 0] * b0 + A[0, 1] * d0
        w1 = A[1, 0] * b0 + A[1, 1] * d0
        uu = u0 * u0 + u1 * u1
        s0 = (w0 * u0 + w1 * u1) / uu
        al = uu * r2n
        v2 = dB * dB / (r2n * r2n) + dA * dA / (uu * uu)
        rem = K2 / al - v2
        if rem < -1e-9:
            continue
        h = math.sqrt(max(rem, 0.0))
        sh = s0 - sstar
        for k in range(int(math.floor(-sh - h)) - 1, int(math.ceil(-sh + h)) + 2):
            b = b0 + k * a
            d = d0 + k * cc
            g00 = a * B[0, 0] + b * B[1, 0]
            g01 = a * B[0, 1] + b * B[1, 1]
            g10 = cc * B[0, 0] + d * B[1, 0]
            g11 = cc * B[0, 1] + d * B[1, 1]
            m00 = A[0, 0] * g00 + A[0, 1] * g10
            m01 = A[0, 0] * g01 + A[0, 1] * g11
            m10 = A[1, 0] * g00 + A[1, 1] * g10
            m11 = A[1, 0] * g01 + A[1, 1] * g11
            F = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
            if F > K2:
                continue
            n += 1
            y1 = 1.0 / (F * F) - cl
            t1 = sl + y1
            cl = (t1 - sl) - y1
            sl = t1
            if F >= MT:
                continue
            if MT - F < 1e-9 * MT:
                ndeg += 1
                continue
            val = stratum_unit(F, T, c)
            y2 = val - cv
            t2 = sv + y2
            cv = (t2 - sv) - y2
            sv = t2
    return sv, sl, n, ndeg


# ----------------------------------------------------------------------
# limiting density
# ----------------------------------------------------------------------

@numba.njit(cache=True)
def kline_sum(u, v):
    """sum over k in Z of ((k + u)^2 + v^2)^-2, closed form (v > 0)."""
    E = math.exp(-2.0 * math.pi * v)
    cs = math.cos(2.0 * math.pi * u)
    D = 1.0 - 2.0 * cs * E + E * E
    sig = (1.0 - E * E) / D
    rest = (4.0 * E * E - 2.0 * cs * E * (1.0 + E * E)) / (D * D)
    return (1.0 / (2.0 * v)) * ((math.pi / (v * v)) * sig - (2.0 * math.pi * math.pi / v) * rest)


@numba.njit(cache=True, nogil=True)
def psi_lines(x, y, uu, s0, tail):
    """Psi at z = x + iy from precomputed primitive-column data.

    For B = H1(z) the k-line of gamma with first column c1 contributes
    (y^2/|u|^4) S(s0 + x, sqrt(y^2 + 1/|u|^4)) with u = A c1.
    `tail` multiplies 1/y to approximate the discarded columns.
    """
    out = np.empty(x.shape[0])
    for j in range(x.shape[0]):
        xj = x[j]
        yj = y[j]
        y2 = yj * yj
        tot = 0.0
        for i in range(uu.shape[0]):
            q = uu[i]
            q2 = q * q
            tot += y2 / q2 * kline_sum(s0[i] + xj, math.sqrt(y2 + 1.0 / q2))
        out[j] = tot + tail / yj
    return out


@numba.njit(cache=True)
def mgt_samples(U, T):
    """Per-sample estimator of m(G_T)/T^6 (unit-mass SO(2) normalisation).

    U: (n,4) uniforms.  (x,y) ~ (2/pi)(1+x^2+y^2)^-2 on the half-plane,
    t ~ t^-3 on [a,b]; the v-integral is the exact ellipse area.
    """
    n = U.shape[0]
    out = np.empty(n)
    T2 = T * T
    T6 = T2 * T2 * T2
    MT = 2.0 * T * T2 / (3.0 * math.sqrt(3.0))
    t0 = T / math.sqrt(3.0)
    for i in range(n):
        u = U[i, 0]
        r = math.sqrt(u / (1.0 - u))
        ph = math.pi * U[i, 1]
        x = r * math.cos(ph)
        y = r * math.sin(ph)
        if y <= 0.0:
            out[i] = 0.0
            continue
        F = (x * x + y * y + 1.0) / y
        if F >= MT or MT - F < 1e-9 * MT:
            out[i] = 0.0
            continue
        a = root_a(F, T2, 1.0)
        b = root_b(F, T2, 1.0, t0)
        ia = 1.0 / (a * a)
        ib = 1.0 / (b * b)
        t = 1.0 / math.sqrt(ia - U[i, 2] * (ia - ib))
        p = t * T2 - t * t * t - F
        if p < 0.0:
            p = 0.0
        wt = p * (ia - ib) / (2.0 * t)
        q = (2.0 / math.pi) / (1.0 + r * r) ** 2
        out[i] = 4.0 * math.pi * math.pi * math.pi * wt / (y * y * q * T6)
    return out


@numba.njit(cache=True)
def roots_batch(F, T, c):
    """Vectorised (a, b) roots; degenerate entries get a = b = t0."""
    n = F.size
    a = np.empty(n)
    b = np.empty(n)
    T2 = T * T
    c2 = c * c
    MT = 2.0 * T * T2 / (3.0 * math.sqrt(3.0) * c)
    t0 = T / (math.sqrt(3.0) * c)
    for i in range(n):
        f = F[i]
        if f >= MT or MT - f < 1e-9 * MT:
            a[i] = t0
            b[i] = t0
        else:
            a[i] = root_a(f, T2, c2)
            b[i] = root_b(f, T2, c2, t0)
    return a, b


@numba.njit(cache=True)
def unit_batch(F, T, c):
    out = np.empty(F.size)
    for i in range(F.size):
        out[i] = stratum_unit(F[i], T, c)
    return out
