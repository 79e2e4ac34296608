"""The limiting measure nu~_{x0}: density Psi, expectations, sampling, alpha.

Psi(z) = sum over gamma in SL(2,Z) of ||M0^-1 gamma H1(z)||^-4, where M0 is
the planar 2x2 matrix of Lambda0 and H1(z) the upper triangular
representative of z.  On the fundamental domain F,

    integral of Psi dx dy / y^2 = pi      (any x0, by unfolding),

so nu~ has density Psi/pi against dx dy/y^2 on F times the uniform
measure on S^2.  With u = 1/y the hyperbolic measure is dx du, which maps
F onto {|x| <= 1/2, 0 < u <= 1/sqrt(1-x^2)}: the cusp becomes the edge u = 0
and no cutoff is needed.
"""
from dataclasses import dataclass, field, asdict
import json
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _kern, zenum
from .matcore import (as_mat, block_iwasawa_left, block_iwasawa_right, rotation_to_e3,
                      sigma_max)
from .moduli import (H1_of, PointX23, base_point, in_fundamental_domain, matrix_to_z,
                     mobius, planar_matrix, reduce_modular_array)

PSI_R = 40.0
SQ3H = math.sqrt(3.0) / 2.0


# ----------------------------------------------------------------------
# Psi
# ----------------------------------------------------------------------

def plane_matrix(basis, w=None):
    """2x2 planar matrix of a unimodular basis (oriented by w, or by v1 x v2)."""
    b = as_mat(basis).reshape(2, 3)
    if w is None:
        n = np.cross(b[0], b[1])
        w = n / np.linalg.norm(n)
    M, _, _ = planar_matrix(PointX23(b, w))
    return M


def _check_unimodular(M, what):
    d = abs(np.linalg.det(M))
    if abs(d - 1.0) > 1e-9:
        raise ValueError(f"{what} is not unimodular (covolume {d})")


def psi(x0_basis, lambda_basis, K=None):
    """Bracketed Psi_{Lambda0}(Lambda) by direct enumeration."""
    M0 = plane_matrix(x0_basis)
    M = plane_matrix(lambda_basis)
    _check_unimodular(M0, "x0 basis")
    _check_unimodular(M, "lambda basis")
    A = np.linalg.inv(M0)
    if K is None:
        K = 200.0 * max(1.0, sigma_max(A) * sigma_max(M))
    return zenum.skewed_series(4, A, M, K)


class PsiEvaluator:
    """Psi_{Lambda0} on the upper half-plane for a fixed x0.

    `bracket` enumerates (rigorous up to the fitted tail constant);
    `__call__` is the fast line-sum evaluator used by quadrature and the
    sampler (relative error about 1e-6 at the default R).
    """

    def __init__(self, x0=None, R=PSI_R, K=None):
        if x0 is None:
            x0 = base_point()
        if isinstance(x0, PointX23):
            M0, _, _ = planar_matrix(x0)
        else:
            M0 = plane_matrix(x0)
        _check_unimodular(M0, "x0 basis")
        self.M0 = M0
        self.A = np.linalg.inv(M0)
        self.K = K
        self.R = float(R)
        self._prep()

    def _prep(self):
        A = self.A
        # primitive c1 with |A c1| <= R
        G = A.T @ A
        pts = _kern._ellipse_points(np.ascontiguousarray(G), self.R ** 2)
        uu, s0 = [], []
        for a, c in pts:
            if a == 0 and c == 0:
                continue
            g, x, y = _kern.egcd(int(a), int(c))
            if g != 1:
                continue
            u = A @ np.array([a, c], dtype=float)
            w0 = A @ np.array([-y, x], dtype=float)
            q = u @ u
            uu.append(q)
            s0.append((w0 @ u) / q)
        self.uu = np.array(uu)
        self.s0 = np.array(s0)
        dA = abs(np.linalg.det(A))
        self.tail = 3.0 / (dA * self.R ** 2)

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        return _kern.psi_lines(np.ascontiguousarray(z.real.ravel()),
                               np.ascontiguousarray(z.imag.ravel()),
                               self.uu, self.s0, self.tail).reshape(z.shape)

    def bracket(self, z, K=None):
        B = H1_of(complex(z))
        if K is None:
            K = self.K or 200.0 * max(1.0, sigma_max(self.A) * sigma_max(B))
        return zenum.skewed_series(4, self.A, B, K)


# ----------------------------------------------------------------------
# alpha ratio
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, x):
        return self.lo <= x <= self.hi

    def overlaps(self, other):
        return self.lo <= other.hi and other.lo <= self.hi


def alpha_ratio(g1, g2, K=200.0):
    """lim mu(H_T[g1,g2]) / mu(H_T) as an interval.

    (1/(G4^2 |det H1|)) S4(G1,H1) / S4(I,I), G from the left form of g1
    and H from the right form of g2.
    """
    L = block_iwasawa_left(g1)
    R = block_iwasawa_right(g2)
    pre = 1.0 / (L.G4 ** 2 * abs(np.linalg.det(R.G1)))
    I2 = np.eye(2)
    if (np.max(np.abs(L.G1.T @ L.G1 - I2)) < 1e-12
            and np.max(np.abs(R.G1 @ R.G1.T - I2)) < 1e-12):
        # orthogonal factors: the two series agree term by term
        return Interval(float(pre), float(pre))
    S = zenum.skewed_series(4, L.G1, R.G1, K)
    S0 = zenum.skewed_series(4, I2, I2, K)
    lo = np.nextafter(pre * S.lo / S0.hi, -np.inf)
    hi = np.nextafter(pre * S.hi / S0.lo, np.inf)
    return Interval(float(lo), float(hi))


# ----------------------------------------------------------------------
# test functions
# ----------------------------------------------------------------------

def hyp_dist(z1, z2):
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    arg = 1.0 + np.abs(z1 - z2) ** 2 / (2.0 * z1.imag * z2.imag)
    return np.arccosh(np.maximum(arg, 1.0))


def bump_profile(d, r):
    s = np.asarray(d, dtype=float) / r
    out = np.zeros_like(s)
    m = s < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


# SL(2,Z) words of length <= 3 in S, T^{+-1}: their images of a centre in
# F cover every orbit point within distance ~1 of F
def _neighbour_words():
    S = np.array([[0, -1], [1, 0]])
    Tp = np.array([[1, 1], [0, 1]])
    Tm = np.array([[1, -1], [0, 1]])
    gens = [S, Tp, Tm]
    words = [np.eye(2, dtype=int)]
    frontier = [np.eye(2, dtype=int)]
    for _ in range(3):
        nxt = []
        for w in frontier:
            for g in gens:
                nxt.append(g @ w)
        words.extend(nxt)
        frontier = nxt
    uniq = {}
    for w in words:
        key = tuple(w.ravel()) if w[0, 0] > 0 or (w[0, 0] == 0 and w[0, 1] > 0) else tuple((-w).ravel())
        uniq[key] = np.array(key).reshape(2, 2)
    return list(uniq.values())


NEIGHBOUR_WORDS = _neighbour_words()


@dataclass(frozen=True)
class Bump:
    """Smooth bump in the hyperbolic distance to the orbit of `center`."""
    center: complex
    radius: float

    def images(self):
        return np.array([mobius(g, self.center) for g in NEIGHBOUR_WORDS])

    def stabiliser_order(self):
        im = self.images()
        return int(np.sum(np.abs(im - self.center) < 1e-9))

    def check_embedded(self):
        """Distinct orbit points must be more than 2r apart."""
        im = self.images()
        d = hyp_dist(im, self.center)
        other = d[d > 1e-9]
        if other.size and other.min() <= 2 * self.radius:
            raise ValueError("bump radius too large for an embedded disk")

    def __call__(self, z):
        z = np.asarray(z)
        im = self.images()
        d = hyp_dist(z[..., None], im)
        return bump_profile(d.min(axis=-1), self.radius)


@dataclass(frozen=True)
class TestFunction:
    """f(z, w) = zpart(z) * wpart(w); either part may be None (== 1)."""
    name: str
    zpart: object = None
    wpart: object = None
    pure_w: bool = False

    def __call__(self, z, w):
        z = np.asarray(z)
        w = np.asarray(w, dtype=float)
        out = np.ones(np.broadcast_shapes(z.shape, w.shape[:-1]))
        if self.zpart is not None:
            out = out * self.zpart(z)
        if self.wpart is not None:
            out = out * self.wpart(w)
        return out


def _w3sq(w):
    return w[..., 2] ** 2


def _wmix(w):
    return w[..., 0] * w[..., 1] + w[..., 1] * w[..., 2]


def _wpoly(w):
    return 1.0 + w[..., 0] * w[..., 2] + w[..., 2] ** 2


BUMP_I = Bump(1j, 0.45)
BUMP_INT = Bump(0.25 + 1.25j, 0.18)

DICTIONARY = {
    "w3sq": TestFunction("w3sq", None, _w3sq, True),
    "wmix": TestFunction("wmix", None, _wmix, True),
    "bump_i": TestFunction("bump_i", BUMP_I, None),
    "bump_int": TestFunction("bump_int", BUMP_INT, None),
    "bump_i_w3sq": TestFunction("bump_i_w3sq", BUMP_I, _w3sq),
    "bump_int_wpoly": TestFunction("bump_int_wpoly", BUMP_INT, _wpoly),
}


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------

@dataclass
class ExpectationSpec:
    function: str = "one"
    x_nodes: int = 48
    y_nodes: int = 48
    y_max: float = None        # None: integrate to the cusp (u = 1/y -> 0)
    sphere_nodes: int = 24
    disk_nodes: int = 48
    normalization: float = None

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, s):
        return cls(**(json.loads(s) if isinstance(s, str) else s))


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float


def sphere_rule(n):
    """Product rule on S^2 (probability weights), exact for degree < 2n."""
    ct, wt = leggauss(n)
    m = 2 * n
    ph = 2 * np.pi * (np.arange(m) + 0.5) / m
    st = np.sqrt(1 - ct ** 2)
    W = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)),
                  np.outer(ct, np.ones(m))], axis=-1).reshape(-1, 3)
    wts = np.outer(wt / 2.0, np.full(m, 1.0 / m)).ravel()
    return W, wts


def domain_rule(nx, ns, y_max=None):
    """Nodes z and weights for dx dy/y^2 on F (optionally cut at y_max)."""
    gx, wx = leggauss(nx)
    x = 0.5 * gx
    wxx = 0.5 * wx
    gs, ws = leggauss(ns)
    s = 0.5 * (gs + 1.0)
    wss = 0.5 * ws
    umax = 1.0 / np.sqrt(1.0 - x ** 2)
    umin = 0.0 if y_max is None else 1.0 / y_max
    U = umin + np.outer(umax - umin, s)
    Wt = np.outer(wxx * (umax - umin), wss)
    Z = x[:, None] + 1j / U
    return Z.ravel(), Wt.ravel()


def disk_rule(center, radius, nr, nth=None):
    """Nodes and weights for dmu_hyp on the hyperbolic disk B(center, radius)."""
    nth = nth or 2 * nr
    g, w = leggauss(nr)
    rho = 0.5 * radius * (g + 1.0)
    wr = 0.5 * radius * w * np.sinh(rho)
    th = 2 * np.pi * np.arange(nth) / nth
    xi = np.tanh(rho / 2)[:, None] * np.exp(1j * th)[None, :]
    c = complex(center)
    Z = (c - np.conj(c) * xi) / (1 - xi)
    Wt = np.outer(wr, np.full(nth, 2 * np.pi / nth))
    return Z.ravel(), Wt.ravel()


class LimitMeasure:
    """nu~_{x0} with quadrature and sampling."""

    def __init__(self, x0=None, R=PSI_R):
        self.x0 = base_point() if x0 is None else x0
        self.psi = PsiEvaluator(self.x0, R=R)
        self._zcache = {}

    # -- z-integrals of g(z) Psi(z) dmu_hyp over F
    def _z_integral(self, zpart, nx, ns, y_max=None):
        if isinstance(zpart, Bump):
            zpart.check_embedded()
            Z, W = disk_rule(zpart.center, zpart.radius, nx)
            vals = bump_profile(hyp_dist(Z, zpart.center), zpart.radius) * self.psi(Z)
            return float(np.sum(W * vals)) / zpart.stabiliser_order()
        Z, W = domain_rule(nx, ns, y_max)
        vals = self.psi(Z)
        if zpart is not None:
            vals = vals * zpart(Z)
        return float(np.sum(W * vals))

    def z_integral(self, zpart, nx=48, ns=48, y_max=None):
        key = (id(zpart) if zpart is not None and not isinstance(zpart, Bump) else zpart,
               nx, ns, y_max)
        if key not in self._zcache:
            a = self._z_integral(zpart, nx, ns, y_max)
            b = self._z_integral(zpart, 2 * nx, 2 * ns, y_max)
            self._zcache[key] = Estimate(b, abs(b - a))
        return self._zcache[key]

    def normaliser(self, spec=None):
        spec = spec or ExpectationSpec()
        return self.z_integral(None, spec.x_nodes, spec.y_nodes, spec.y_max)

    def evaluator_bias(self, spec=None):
        """Relative bias of the fast Psi evaluator, read off from the
        known total mass pi (doubled for safety)."""
        return 2.0 * abs(self.normaliser(spec).value - math.pi) / math.pi

    def expectation(self, f, spec=None):
        """E f under nu~, with an error estimate (node doubling)."""
        spec = spec or ExpectationSpec()
        if isinstance(f, str):
            if f == "one":
                return Estimate(1.0, 0.0)
            f = DICTIONARY[f]
        Zs = self.normaliser(spec)
        if isinstance(f, TestFunction):
            wv = Estimate(1.0, 0.0)
            if f.wpart is not None:
                W, wts = sphere_rule(spec.sphere_nodes)
                W2, wts2 = sphere_rule(2 * spec.sphere_nodes)
                a = float(np.sum(wts * f.wpart(W)))
                b = float(np.sum(wts2 * f.wpart(W2)))
                wv = Estimate(b, abs(b - a))
            if f.zpart is None:
                zv = Estimate(1.0, 0.0)
            else:
                n = spec.disk_nodes if isinstance(f.zpart, Bump) else spec.x_nodes
                zi = self.z_integral(f.zpart, n, spec.y_nodes, spec.y_max)
                zv = Estimate(zi.value / Zs.value,
                              zi.error / Zs.value + abs(zi.value) * Zs.error / Zs.value ** 2)
            val = zv.value * wv.value
            err = abs(zv.value) * wv.error + abs(wv.value) * zv.error
            if f.zpart is not None:
                err += abs(val) * self.evaluator_bias(spec)
            return Estimate(val, err)
        # generic callable f(z, w): tensor rule
        vals = []
        for k in (1, 2):
            Z, Wz = domain_rule(k * spec.x_nodes, k * spec.y_nodes, spec.y_max)
            W, ws = sphere_rule(k * spec.sphere_nodes)
            P = self.psi(Z)
            F = f(Z[:, None], W[None, :, :])
            num = float(np.sum(Wz[:, None] * P[:, None] * ws[None, :] * F))
            den = float(np.sum(Wz * P))
            vals.append(num / den)
        err = abs(vals[1] - vals[0]) + abs(vals[1]) * self.evaluator_bias(spec)
        return Estimate(vals[1], err)

    # -- sampling
    def envelope(self, n=64):
        Z, _ = domain_rule(n, n)
        Z = np.concatenate([Z, [1j, 0.5 + SQ3H * 1j, -0.5 + SQ3H * 1j]])
        return 1.5 * float(self.psi(Z).max())

    def sample(self, seed, n, workers=1, max_attempts=None):
        """n draws (z, theta, w) from nu~; independent streams per worker."""
        ss = np.random.SeedSequence(seed)
        kids = ss.spawn(workers)
        sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
        M = self.envelope()
        parts = [self._sample_stream(np.random.default_rng(k), m, M, max_attempts)
                 for k, m in zip(kids, sizes)]
        z = np.concatenate([p[0] for p in parts])
        th = np.concatenate([p[1] for p in parts])
        w = np.concatenate([p[2] for p in parts])
        return NuSamples(z, th, w)

    def _sample_stream(self, rng, n, M, max_attempts):
        # proposal: uniform hyperbolic measure on F, i.e. uniform (x, u=1/y)
        umax = 1.0 / SQ3H
        if max_attempts is None:
            max_attempts = 50 * n + 1000
        out = []
        got = 0
        tried = 0
        while got < n:
            m = max(1024, 2 * (n - got))
            if tried >= max_attempts:
                raise RuntimeError(f"rejection sampler stalled after {tried} proposals")
            tried += m
            x = rng.random(m) - 0.5
            u = umax * rng.random(m)
            acc_u = rng.random(m)
            ok = (u > 0) & (u <= 1.0 / np.sqrt(1.0 - x * x))
            z = x[ok] + 1j / u[ok]
            p = self.psi(z)
            if np.any(p > M):
                raise RuntimeError("envelope violated")
            keep = acc_u[ok] * M < p
            out.append(z[keep])
            got += int(keep.sum())
        z = np.concatenate(out)[:n]
        th = 2 * np.pi * rng.random(n)
        g = rng.standard_normal((n, 3))
        w = g / np.linalg.norm(g, axis=1, keepdims=True)
        return z, th, w


@dataclass
class NuSamples:
    z: np.ndarray
    theta: np.ndarray
    w: np.ndarray

    def __len__(self):
        return self.z.size

    def points(self):
        """Materialise samples as PointX23 values."""
        pts = []
        for z, th, w in zip(self.z, self.theta, self.w):
            c, s = math.cos(th), math.sin(th)
            M = H1_of(z) @ np.array([[c, -s], [s, c]])
            rho = rotation_to_e3(w)
            B = np.zeros((2, 3))
            B[:, :2] = M
            pts.append(PointX23(B @ rho.T, w))
        return pts

    def mean(self, f):
        v = f(self.z, self.w)
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))

    def to_csv(self, path):
        arr = np.column_stack([self.z.real, self.z.imag, self.w, np.full(self.z.size, 1.0 / self.z.size)])
        np.savetxt(path, arr, delimiter=",", fmt="%.17g", header="z_re,z_im,w1,w2,w3,weight",
                   comments="")


def nu_expectation(x0, spec):
    """E f under nu~_{x0}; returns Estimate(value, error)."""
    return LimitMeasure(x0).expectation(spec.function, spec)


def nu_sampler(x0, seed, n, workers=1):
    return LimitMeasure(x0).sample(seed, n, workers=workers)


def mass_above(lm, y_cut, n=64):
    """nu~ mass of {Im z > y_cut} on the reduced domain, by quadrature."""
    Z, W = domain_rule(n, n)
    tot = np.sum(W * lm.psi(Z))
    y0 = math.sqrt(3.0) / 2.0
    if y_cut <= y0:
        return 1.0
    gx, wx = leggauss(n)
    if y_cut < 1.0:
        # complement: y in [y0, y_cut], sqrt(1 - y^2) <= |x| <= 1/2 (dx dy / y^2)
        y = y0 + 0.5 * (gx + 1.0) * (y_cut - y0)
        wy = 0.5 * wx * (y_cut - y0)
        x1 = np.sqrt(1.0 - y * y)
        X = x1[:, None] + 0.5 * (gx[None, :] + 1.0) * (0.5 - x1[:, None])
        WX = 0.5 * wx[None, :] * (0.5 - x1[:, None])
        ZZ = X + 1j * y[:, None]
        WW = 2.0 * WX * (wy / (y * y))[:, None]
        return 1.0 - float(np.sum(WW * lm.psi(ZZ.ravel()).reshape(ZZ.shape)) / tot)
    # region y > y_cut: u in (0, 1/y_cut], full x-range
    x = 0.5 * gx
    gs, ws = leggauss(n)
    u = 0.5 * (gs + 1.0) / y_cut
    ZZ = x[:, None] + 1j / u[None, :]
    WW = np.outer(0.5 * wx, 0.5 * ws / y_cut)
    return float(np.sum(WW * lm.psi(ZZ.ravel()).reshape(ZZ.shape)) / tot)
