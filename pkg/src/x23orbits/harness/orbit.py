"""Gamma-orbits of x0 in X_{2,3}: empirical measures and their comparison
with the limit law."""
from dataclasses import dataclass
import math
import os

import numba
import numpy as np

from .. import zenum, limitlaw
from ..moduli import shape_gram, reduce_modular_array, base_point
from . import stats


class BudgetExceeded(RuntimeError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass
class EmpiricalMeasure:
    T: float
    z: np.ndarray          # reduced shapes
    w: np.ndarray          # (n,3) unit normals
    weight: np.ndarray     # sums to 1
    counts: np.ndarray     # integer multiplicities
    total: int             # #Gamma_T

    def __len__(self):
        return self.z.size

    def check(self, tol=1e-12):
        if abs(math.fsum(self.weight) - 1.0) > tol:
            raise AssertionError("weights do not sum to 1")
        if not np.all(np.abs(self.z.real) <= 0.5 + 1e-9) or not np.all(np.abs(self.z) >= 1 - 1e-9):
            raise AssertionError("unreduced shape")
        return self

    def mean(self, f):
        vals = np.asarray(f(self.z, self.w), dtype=float)
        return math.fsum(vals * self.weight)

    def to_csv(self, path):
        M = np.column_stack([self.z.real, self.z.imag, self.w, self.counts])
        with open(path, "w") as fh:
            fh.write("z.re,z.im,w1,w2,w3,weight\n")
            for row in M:
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%d\n" % (*row[:5], int(row[5])))


@numba.njit(cache=True)
def normal_bases(N):
    """Gauss-reduced integer bases (b1, b2) of Z^3 ∩ n^perp with b1 x b2 = n."""
    n = N.shape[0]
    B1 = np.zeros((n, 3), dtype=np.int64)
    B2 = np.zeros((n, 3), dtype=np.int64)
    for i in range(n):
        n1, n2, n3 = N[i, 0], N[i, 1], N[i, 2]
        if n1 == 0 and n2 == 0:
            B1[i, 0] = 1
            B2[i, 1] = 1 if n3 > 0 else -1
            continue
        a, b = abs(n1), abs(n2)
        while b:
            a, b = b, a % b
        g = a
        m1 = n1 // g
        m2 = n2 // g
        r0, r1 = m1, m2
        s0, s1 = 1, 0
        t0, t1 = 0, 1
        while r1 != 0:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0 < 0:
            s0, t0 = -s0, -t0
        u = np.array([-m2, m1, 0], dtype=np.int64)
        v = np.array([-n3 * s0, -n3 * t0, g], dtype=np.int64)
        # Lagrange-Gauss reduction keeps u x v = n
        for _ in range(500):
            nu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
            dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
            q = (2 * dot + nu) // (2 * nu)
            v = v - q * u
            nv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
            if nv >= nu:
                break
            u, v = v, -u
        B1[i] = u
        B2[i] = v
    return B1, B2


def is_base_like(x0, tol=1e-12):
    """True when x0.Gamma aggregates by normals: w = e3, basis in SL(2,Z) x 0."""
    B = x0.basis
    if np.max(np.abs(x0.w - np.array([0, 0, 1.0]))) > tol or np.max(np.abs(B[:, 2])) > tol:
        return False
    M = B[:, :2]
    return np.max(np.abs(M - np.rint(M))) < tol and abs(np.linalg.det(M) - 1) < tol


def normal_memory(T):
    N2 = zenum._nsq_bound(T)
    side = 2 * ((N2 - 1) // 2) + 1
    return 8.0 * side ** 3


def expected_matrices(T):
    # #Gamma_T ~ 16.6 T^6 (measured); generous for small T
    return 17.0 * float(T) ** 6 + 100


def orbit_measure(T, x0=None, budget=None):
    """EmpiricalMeasure of {x0.gamma : ||gamma|| <= T}."""
    x0 = x0 or base_point()
    budget = budget or {}
    if is_base_like(x0):
        if normal_memory(T) > budget.get("max_bytes", 1.5e9):
            raise BudgetExceeded(f"T={T:g}: normal table needs {normal_memory(T):.3g} bytes")
        N, W, total = zenum.sl3_normal_weights(T)
        return _from_normals(T, N, W, total)
    if expected_matrices(T) > budget.get("max_matrices", 5e7):
        raise BudgetExceeded(f"T={T:g}: about {expected_matrices(T):.3g} matrices to stream")
    return _stream(T, x0)


def _from_normals(T, N, W, total):
    if N.shape[0] == 0:
        raise ValueError("empty ball: T must be at least sqrt(3)")
    B1, B2 = normal_bases(N)
    w = N / np.linalg.norm(N, axis=1)[:, None]
    z = reduce_modular_array(shape_gram(B1.astype(float), B2.astype(float), w))
    wt = W / float(total)
    return EmpiricalMeasure(float(T), z, w, wt, W.astype(np.int64), int(total))


def _stream(T, x0):
    zs, ws = [], []
    total = 0
    for _, gam in zenum.iter_sl3z_partitions(T):
        if gam.shape[0] == 0:
            continue
        g = gam.astype(float)
        P = np.einsum("ij,njk->nik", x0.basis, g)
        w = np.linalg.solve(g, np.broadcast_to(x0.w, (g.shape[0], 3))[:, :, None])[:, :, 0]
        w /= np.linalg.norm(w, axis=1)[:, None]
        zs.append(reduce_modular_array(shape_gram(P[:, 0], P[:, 1], w)))
        ws.append(w)
        total += g.shape[0]
    if total == 0:
        raise ValueError("empty ball: T must be at least sqrt(3)")
    z = np.concatenate(zs)
    w = np.concatenate(ws)
    return EmpiricalMeasure(float(T), z, w, np.full(total, 1.0 / total),
                            np.ones(total, dtype=np.int64), total)


def tag(T):
    return f"{T:g}"


def orbit_experiment(cfg, compare=True, write=True):
    """Empirical measures for each T in cfg.T_list plus the comparison report.

    Raises BudgetExceeded (with .partial holding the report so far) when a
    T in the list is beyond the configured budget.
    """
    caps = stats.random_caps(cfg.caps["n"], cfg.caps["seed"])
    lm = limitlaw.LimitMeasure(cfg.x0) if compare else None
    targets = {}
    if compare:
        for name in cfg.functions:
            e = lm.expectation(name, cfg.expectation_spec(name))
            targets[name] = {"value": e.value, "error": e.error}
    report = {"x0": {"basis": cfg.x0.basis.tolist(), "w": cfg.x0.w.tolist()},
              "caps": dict(cfg.caps), "runs": [], "targets": targets}
    measures = []
    if write:
        os.makedirs(cfg.out, exist_ok=True)
    for T in cfg.T_list:
        try:
            em = orbit_measure(T, cfg.x0, cfg.budget)
        except BudgetExceeded as e:
            report["aborted"] = str(e)
            _summarise(report, cfg)
            e.partial = report
            raise
        em.check()
        d, j = stats.cap_discrepancy(em.w, em.weight, caps)
        run = {"T": T, "count": em.total, "distinct_points": len(em),
               "cap_discrepancy": d, "worst_cap": j, "means": {}, "deltas": {}}
        for name in cfg.functions:
            m = em.mean(limitlaw.DICTIONARY[name])
            run["means"][name] = m
            if compare:
                run["deltas"][name] = abs(m - targets[name]["value"])
        if write:
            em.to_csv(os.path.join(cfg.out, f"orbit_T{tag(T)}.csv"))
        report["runs"].append(run)
        measures.append(em)
    _summarise(report, cfg)
    return measures, report


def resolution(target):
    """Below this |delta| the difference is at numerical resolution."""
    return max(1e-12, 2.0 * target["error"])


def _summarise(report, cfg):
    runs = report["runs"]
    disc = [r["cap_discrepancy"] for r in runs]
    summ = {"cap_discrepancy_decreasing": stats.monotone_decreasing(disc)}
    if report["targets"] and runs:
        dec = {}
        for name, tgt in report["targets"].items():
            ds = [r["deltas"][name] for r in runs]
            res = resolution(tgt)
            dec[name] = all(b < a or b <= res for a, b in zip(ds, ds[1:]))
        summ["delta_decreasing"] = dec
        last = runs[-1]
        pure = [n for n in report["targets"] if limitlaw.DICTIONARY[n].pure_w]
        summ["pure_w_within_tolerance"] = {
            n: last["deltas"][n] <= cfg.tolerance_pure_w for n in pure}
        summ["tolerance_pure_w"] = cfg.tolerance_pure_w
    warnings = []
    if not summ["cap_discrepancy_decreasing"]:
        warnings.append("cap discrepancy is not decreasing along T_list")
    summ["warnings"] = warnings
    report["summary"] = summ
