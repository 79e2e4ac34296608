"""The stabiliser H = U x| (SL(2,Z) x A), skewed balls and their volumes.

An element h = u_v a_t gamma is the matrix

    [[t^-1/2 gamma, 0], [t^-1/2 v gamma, t]]

and the left Haar measure is dv dt / t^4 times counting measure on gamma.

Skewed ball H_T[g1,g2] = {h in H : ||g1 h g2|| < T}.  With
g1 = k1 [[G1,0],[G3,G4]] and g2 = [[H1,0],[H3,H4]] k2, the stratum of a
fixed gamma is {(v,t): ||(G3 + G4 v) gamma H1 + G4 H3 t^1.5||^2 <= p(t)},
p(t) = -c^2 t^3 + T^2 t - F, c = G4 H4, F = ||G1 gamma H1||^2: an ellipse
in v of area pi p(t) / (G4^2 |det H1|) for t between the two roots a < b
of p.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from . import _kern
from .matcore import (as_intmat, as_mat, block_iwasawa_left, block_iwasawa_right,
                      hs_norm, sigma_min)
from . import zenum

SQRT3 = math.sqrt(3.0)
FULL_BUDGET = 3e7      # strata we are willing to stream for an exact total
HEAD_K = 200.0


# ----------------------------------------------------------------------
# H elements
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HElement:
    v: np.ndarray
    t: float
    gamma: np.ndarray

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(2))
        object.__setattr__(self, "gamma", as_intmat(self.gamma, 2))

    @property
    def density(self):
        return self.t ** -4


def h_embed(h):
    g = np.zeros((3, 3))
    s = h.t ** -0.5
    g[:2, :2] = s * h.gamma
    g[2, :2] = s * (h.v @ h.gamma)
    g[2, 2] = h.t
    return g


def h_embed_arrays(v, t, gamma):
    """Vectorised embedding; v (n,2), t (n,), gamma (n,2,2) -> (n,3,3)."""
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    gam = np.asarray(gamma, dtype=float)
    s = t ** -0.5
    g = np.zeros((t.size, 3, 3))
    g[:, :2, :2] = s[:, None, None] * gam
    g[:, 2, :2] = s[:, None] * np.einsum("ni,nij->nj", v, gam)
    g[:, 2, 2] = t
    return g


def h_compose(h1, h2):
    """Group law: (v1,t1,g1)(v2,t2,g2) = (v1 + t1^1.5 v2 g1^-1, t1 t2, g1 g2)."""
    g1 = h1.gamma
    g1inv = np.array([[g1[1, 1], -g1[0, 1]], [-g1[1, 0], g1[0, 0]]])
    v = h1.v + h1.t ** 1.5 * (h2.v @ g1inv)
    return HElement(v, h1.t * h2.t, g1 @ h2.gamma)


def h_decompose(m, tol=1e-8):
    """Inverse of h_embed for a matrix in H."""
    m = as_mat(m, 3)
    if np.max(np.abs(m[:2, 2])) > tol:
        raise ValueError("matrix is not in H")
    t = m[2, 2]
    gam = t ** 0.5 * m[:2, :2]
    gi = np.rint(gam)
    if np.max(np.abs(gam - gi)) > 1e-6:
        raise ValueError("SL(2) part is not integral")
    gi = gi.astype(np.int64)
    ginv = np.array([[gi[1, 1], -gi[0, 1]], [-gi[1, 0], gi[0, 0]]], dtype=float)
    v = t ** 0.5 * m[2, :2] @ ginv
    return HElement(v, t, gi)


def haar_density(t):
    return np.asarray(t, dtype=float) ** -4


# ----------------------------------------------------------------------
# skewed balls
# ----------------------------------------------------------------------

@dataclass
class SkewedBallSpec:
    g1: np.ndarray
    g2: np.ndarray
    T: float
    left: object = field(init=False, repr=False)
    right: object = field(init=False, repr=False)

    def __post_init__(self):
        self.g1 = as_mat(self.g1, 3)
        self.g2 = as_mat(self.g2, 3)
        self.T = float(self.T)
        if not self.T > 0:
            raise ValueError("T must be positive")
        for g in (self.g1, self.g2):
            if abs(np.linalg.det(g) - 1.0) > 1e-9:
                raise ValueError("g1, g2 must have determinant 1")
        self.left = block_iwasawa_left(self.g1)
        self.right = block_iwasawa_right(self.g2)

    @property
    def G1(self):
        return self.left.G1

    @property
    def G3(self):
        return self.left.G3

    @property
    def G4(self):
        return self.left.G4

    @property
    def H1(self):
        return self.right.G1

    @property
    def H3(self):
        return self.right.G3

    @property
    def H4(self):
        return self.right.G4

    @property
    def c(self):
        return self.G4 * self.H4

    @property
    def M_T(self):
        return 2.0 * self.T ** 3 / (3.0 * SQRT3 * self.c)

    @property
    def t0(self):
        return self.T / (SQRT3 * self.c)

    @property
    def prefactor(self):
        return math.pi / (self.G4 ** 2 * abs(np.linalg.det(self.H1)))

    def with_T(self, T):
        return SkewedBallSpec(self.g1, self.g2, T)

    def F(self, gamma):
        return hs_norm(self.G1 @ np.asarray(gamma, dtype=float) @ self.H1) ** 2

    def strata_bound(self):
        """Enumeration radius in ||gamma|| for all nonempty strata."""
        return math.sqrt(self.M_T) / (sigma_min(self.G1) * sigma_min(self.H1))

    def expected_strata(self):
        s = sigma_min(self.G1) * sigma_min(self.H1)
        return 6.0 * self.M_T / (s * s) / abs(np.linalg.det(self.G1) * np.linalg.det(self.H1))


@dataclass(frozen=True)
class CubicRoots:
    a: float
    b: float
    degenerate: bool


def cubic_roots_F(F, T, c):
    """Roots a <= b of -c^2 t^3 + T^2 t - F (scalar).

    Degenerate (F >= M_T or within 1e-9 relative of it) returns a = b = t0.
    """
    T2 = T * T
    c2 = c * c
    MT = 2.0 * T ** 3 / (3.0 * SQRT3 * c)
    t0 = T / (SQRT3 * c)
    if F >= MT or MT - F < 1e-9 * MT:
        return CubicRoots(t0, t0, True)
    return CubicRoots(_kern.root_a(F, T2, c2), _kern.root_b(F, T2, c2, t0), False)


def cubic_roots(spec, gamma):
    return cubic_roots_F(spec.F(gamma), spec.T, spec.c)


def _unit_volume(F, T, c):
    return _kern.stratum_unit(float(F), float(T), float(c))


def stratum_volume(spec, gamma):
    """Exact Haar volume of the stratum V_{gamma,T}[g1,g2]."""
    return spec.prefactor * _unit_volume(spec.F(gamma), spec.T, spec.c)


def stratum_volume_F(spec, F):
    return spec.prefactor * np.array([_unit_volume(f, spec.T, spec.c) for f in np.atleast_1d(F)])


def stratum_upper(spec, F):
    """Upper bound V <= pref T^6 / (6 F^2)."""
    return spec.prefactor * spec.T ** 6 / (6.0 * np.asarray(F, dtype=float) ** 2)


def ellipse_area(spec, F, t):
    p = -spec.c ** 2 * t ** 3 + spec.T ** 2 * t - F
    return spec.prefactor * np.maximum(p, 0.0)


def strata(spec):
    """All nonempty strata: (gammas, F, volumes), lexicographic in gamma."""
    gam, F = zenum.skew_terms(spec.G1, spec.H1, math.sqrt(spec.M_T))
    keep = F < spec.M_T
    gam, F = gam[keep], F[keep]
    vol = spec.prefactor * _kern.unit_batch(F, float(spec.T), float(spec.c))
    return gam, F, vol


@dataclass
class VolumeResult:
    lo: float
    hi: float
    exact: bool
    K: float
    n_strata: int
    n_degenerate: int
    lead_lo: float
    lead_hi: float

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def as_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in self.__dict__.items()}


def ball_volume(spec, K=None, full=None, S4=None):
    """mu(H_T[g1,g2]) as a bracket, plus the leading asymptotic bracket.

    full=True streams every stratum with F < M_T (exact, lo == hi).
    Otherwise strata with ||G1 gamma H1|| <= K are summed exactly and the
    rest is bounded by V_gamma <= pref T^6/(6 F^2) and the series tail.
    By default the full sum is used when it fits FULL_BUDGET.
    """
    T = spec.T
    A = np.ascontiguousarray(spec.G1)
    B = np.ascontiguousarray(spec.H1)
    pref = spec.prefactor
    if full is None:
        full = spec.expected_strata() <= FULL_BUDGET
    if S4 is None:
        S4 = zenum.skewed_series(4, A, B, HEAD_K)
    lead_lo = pref * T ** 6 / 6.0 * S4.lo
    lead_hi = pref * T ** 6 / 6.0 * S4.hi
    if full:
        Kf = math.sqrt(spec.M_T)
        sv, _, n, ndeg = _kern.skew_volume_stream(A, B, Kf, T, spec.c)
        if ndeg:
            warnings.warn(f"{ndeg} near-degenerate strata set to zero")
        val = pref * sv
        return VolumeResult(val, val, True, Kf, int(n), int(ndeg), lead_lo, lead_hi)
    if K is None:
        K = HEAD_K * max(1.0, np.linalg.norm(A, 2) * np.linalg.norm(B, 2))
    complete = float(K) >= math.sqrt(spec.M_T)
    K = min(float(K), math.sqrt(spec.M_T))
    sv, _, n, ndeg = _kern.skew_volume_stream(A, B, K, T, spec.c)
    lo = pref * sv
    hi = lo if complete else lo + pref * T ** 6 / 6.0 * zenum.tail_bound(4, A, B, K)
    return VolumeResult(lo, hi, complete, K, int(n), int(ndeg), lead_lo, lead_hi)


def relative_deviation(vol):
    """(exact - leading)/leading using the midpoint of the leading bracket."""
    lead = 0.5 * (vol.lead_lo + vol.lead_hi)
    return (vol.mid - lead) / lead


def precise_deviation(spec, S4_est=None, K=500.0):
    """(exact - leading)/leading with the full stratum sum and a point
    estimate of S4; resolves deviations down to ~1e-9."""
    if S4_est is None:
        S4_est = zenum.skewed_series_estimate(4, spec.G1, spec.H1, K)
    v = ball_volume(spec, full=True)
    lead = spec.prefactor * spec.T ** 6 / 6.0 * S4_est
    return (v.mid - lead) / lead


def check_d1(g1, g2, delta, epsilon, T_grid=(10, 30, 100, 300, 1000)):
    """Check mu(H_{(1+delta)T}) <= (1+epsilon) mu(H_T) along a T grid.

    Uses the conservative comparison hi((1+delta)T) <= (1+eps) lo(T).
    Reports T0 = smallest grid T from which every larger grid point passes.
    """
    rows = []
    S4 = None
    for T in T_grid:
        s = SkewedBallSpec(g1, g2, T)
        if S4 is None:
            S4 = zenum.skewed_series(4, s.G1, s.H1, HEAD_K)
        v0 = ball_volume(s, S4=S4)
        if delta == 0:
            ok = True
            v1 = v0
        else:
            v1 = ball_volume(s.with_T((1 + delta) * T), S4=S4)
            ok = v1.hi <= (1 + epsilon) * v0.lo
        rows.append({"T": float(T), "mu_T": [v0.lo, v0.hi],
                     "mu_T_delta": [v1.lo, v1.hi], "pass": bool(ok)})
    T0 = None
    for r in reversed(rows):
        if not r["pass"]:
            break
        T0 = r["T"]
    return {"delta": float(delta), "epsilon": float(epsilon), "rows": rows,
            "T0": T0, "pass": T0 is not None}


def truncation_diagnostics(spec, gamma):
    """The t-partition a < a + delta_T < c_trunc < b used in the U-invariance
    argument, with the fraction of the stratum volume in each piece."""
    F = spec.F(gamma)
    r = cubic_roots_F(F, spec.T, spec.c)
    nrm = math.sqrt(F)
    ctr = nrm ** 1.5 / spec.T ** 1.5
    dT = nrm ** 2.5 / spec.T ** 2.5
    phi = _antideriv(F, spec.T, spec.c)
    if r.degenerate:
        return {"c": ctr, "delta_T": dT, "a": r.a, "b": r.b, "fractions": None}
    cuts = [r.a, min(max(r.a + dT, r.a), r.b), min(max(ctr, r.a + dT), r.b), r.b]
    tot = phi(r.b) - phi(r.a)
    fr = [(phi(cuts[i + 1]) - phi(cuts[i])) / tot for i in range(3)]
    return {"c": ctr, "delta_T": dT, "a": r.a, "b": r.b, "fractions": fr}


def _antideriv(F, T, c):
    def phi(t):
        return -c * c * math.log(t) - T * T / (2 * t * t) + F / (3 * t ** 3)
    return phi


def strata_csv(spec, path):
    gam, F, vol = strata(spec)
    with open(path, "w") as fh:
        fh.write("g11,g12,g21,g22,a,b,volume\n")
        for gm, f, v in zip(gam, F, vol):
            r = cubic_roots_F(f, spec.T, spec.c)
            fh.write("%d,%d,%d,%d,%.17g,%.17g,%.17g\n" % (*gm.ravel(), r.a, r.b, v))


# ----------------------------------------------------------------------
# sampling the restricted Haar measure
# ----------------------------------------------------------------------

@dataclass
class HSamples:
    v: np.ndarray
    t: np.ndarray
    gamma: np.ndarray
    stratum: np.ndarray

    def __len__(self):
        return self.t.size

    def embed(self):
        return h_embed_arrays(self.v, self.t, self.gamma)


def _invert_t(u, F, T, c, a, b):
    """Solve (Phi(t)-Phi(a))/(Phi(b)-Phi(a)) = u on [a,b], vectorised."""
    c2 = c * c
    T2 = T * T

    def phi(t):
        return -c2 * np.log(t) - T2 / (2 * t * t) + F / (3 * t ** 3)

    pa = phi(a)
    tot = phi(b) - pa
    target = u * tot
    lo = a.copy()
    hi = b.copy()
    t = 0.5 * (lo + hi)
    for _ in range(100):
        g = phi(t) - pa - target
        lo = np.where(g < 0, t, lo)
        hi = np.where(g >= 0, t, hi)
        dens = (-c2 * t ** 3 + T2 * t - F) / t ** 4
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - g / dens
        bad = ~np.isfinite(tn) | (tn <= lo) | (tn >= hi)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        if np.all(np.abs(tn - t) <= 1e-15 * t):
            t = tn
            break
        t = tn
    return t


def h_ball_sampler(spec, seed, n, strata_data=None):
    """n samples of normalised Haar measure restricted to H_T[g1,g2]."""
    rng = np.random.default_rng(seed)
    if strata_data is None:
        strata_data = strata(spec)
    gam, F, vol = strata_data
    if vol.size == 0 or vol.sum() <= 0:
        raise ValueError("empty skewed ball")
    cdf = np.cumsum(vol)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    idx = np.minimum(idx, vol.size - 1)
    Fi = F[idx]
    T, c = spec.T, spec.c
    a, b = _kern.roots_batch(np.ascontiguousarray(Fi), float(T), float(c))
    t = _invert_t(rng.random(n), Fi, T, c, a, b)
    # v uniform on the ellipse: y = (G3 + G4 v) gamma H1 + G4 H3 t^1.5 uniform on a disk
    R = np.sqrt(np.maximum(-c * c * t ** 3 + T * T * t - Fi, 0.0))
    r = R * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    y = np.column_stack([r * np.cos(th), r * np.sin(th)])
    y -= spec.G4 * spec.H3[None, :] * t[:, None] ** 1.5
    gH = np.einsum("nij,jk->nik", gam[idx].astype(float), spec.H1)
    sol = np.linalg.solve(np.transpose(gH, (0, 2, 1)), y[:, :, None])[:, :, 0]
    v = (sol - spec.G3[None, :]) / spec.G4
    return HSamples(v, t, gam[idx], idx)


def t_marginal_cdf(spec, strata_data, edges):
    """Exact probability of each t-bin under the normalised restricted measure."""
    gam, F, vol = strata_data
    T, c = spec.T, spec.c
    tot = vol.sum()
    out = np.zeros(len(edges) - 1)
    for f, w in zip(F, vol):
        if w <= 0:
            continue
        r = cubic_roots_F(f, T, c)
        phi = _antideriv(f, T, c)
        e = np.clip(edges, r.a, r.b)
        vals = np.array([phi(x) for x in e])
        out += spec.prefactor * np.diff(vals)
    return out / tot


def mc_ball_volume(spec, n, seed, T_ref=None):
    """Monte-Carlo mu(H_T[g1,g2]) using H_T[g1,g2] inside H_{T'}[e,e].

    Since ||h|| <= ||g1 h g2|| / (smin(g1) smin(g2)), sampling the
    identity ball at T' = T/(smin smin) and keeping members gives an
    unbiased estimate mu(H_T') * p_hat with a binomial standard error.
    """
    s1 = np.linalg.svd(spec.g1, compute_uv=False)[-1]
    s2 = np.linalg.svd(spec.g2, compute_uv=False)[-1]
    Tp = spec.T / (s1 * s2) * (1 + 1e-9) if T_ref is None else T_ref
    ref = SkewedBallSpec(np.eye(3), np.eye(3), Tp)
    sd = strata(ref)
    muref = float(sd[2].sum())
    hs = h_ball_sampler(ref, seed, n, sd)
    M = spec.g1 @ hs.embed() @ spec.g2
    inside = np.sum(M * M, axis=(1, 2)) < spec.T ** 2
    p = inside.mean()
    return muref * p, muref * math.sqrt(p * (1 - p) / n)
