"""X_{2,3}: oriented unimodular 2-lattices (Lambda, w) in R^3.

Conventions
-----------
* A point stores a row basis (2x3) and the unit normal w explicitly.
* Shape: rotate w to e3 with rho = rotation_to_e3(w); the rows of
  basis @ rho span a lattice in R^2 x 0 with 2x2 row matrix M, oriented
  so that det M > 0 (equivalently (v1 x v2).w > 0).  Its upper
  half-plane point is z = M.i = (a i + b)/(c i + d) for M = [[a,b],[c,d]],
  which is unchanged under M -> M k (k in SO(2)) and moves by gamma
  under M -> gamma M.  In Gram terms z = ((v1.v2) + i)/|v2|^2.
* Reduction: |Re z| <= 1/2, |z| >= 1; ties go to Re z >= 0.
"""
from dataclasses import dataclass
import json

import numpy as np

from .matcore import as_mat, rotation_to_e3

TIE_TOL = 1e-12


@dataclass(frozen=True)
class PointX23:
    basis: np.ndarray   # 2x3
    w: np.ndarray       # unit 3-vector

    def __post_init__(self):
        b = np.array(self.basis, dtype=np.float64).reshape(2, 3)
        w = np.array(self.w, dtype=np.float64).reshape(3)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "w", w)

    def check(self, tol=1e-9):
        cov = covolume(self.basis)
        if abs(cov - 1.0) > tol:
            raise ValueError(f"covolume {cov} != 1")
        if abs(np.linalg.norm(self.w) - 1.0) > tol:
            raise ValueError("w is not a unit vector")
        if np.max(np.abs(self.basis @ self.w)) > tol:
            raise ValueError("w is not orthogonal to the lattice")
        return self

    def to_json(self):
        return json.dumps({"basis": self.basis.tolist(), "w": self.w.tolist()})

    @classmethod
    def from_json(cls, s):
        d = json.loads(s) if isinstance(s, str) else s
        return cls(np.array(d["basis"]), np.array(d["w"])).check()


def base_point():
    return PointX23(np.array([[1.0, 0, 0], [0, 1.0, 0]]), np.array([0, 0, 1.0]))


def covolume(basis):
    b = as_mat(basis).reshape(2, 3)
    G = b @ b.T
    d = G[0, 0] * G[1, 1] - G[0, 1] ** 2
    if d <= 1e-300:
        raise ValueError("basis rows are dependent")
    return float(np.sqrt(d))


def act(x, g):
    """Right action (Lambda, w).g = (Lambda g / sqrt(Cov), w g^-T / |.|)."""
    g = as_mat(g, 3)
    nb = x.basis @ g
    nb = nb / np.sqrt(covolume(nb))
    wn = np.linalg.solve(g, x.w)   # w g^-T as a row = (g^-1 w^T)^T
    wn = wn / np.linalg.norm(wn)
    return PointX23(nb, wn)


def perp(x):
    return x.w.copy()


@dataclass(frozen=True)
class ShapePoint:
    z: complex
    theta: float = 0.0
    reduced: bool = True


# ----------------------------------------------------------------------
# modular reduction
# ----------------------------------------------------------------------

def reduce_modular(z, return_matrix=False):
    """Reduce z to the standard fundamental domain.

    With return_matrix=True also returns the integer matrix g in SL(2,Z)
    with g.z equal to the result (up to rounding).
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    g = np.eye(2, dtype=np.int64)
    for _ in range(10000):
        n = int(np.floor(z.real + 0.5))
        if n != 0:
            z = z - n
            g = np.array([[1, -n], [0, 1]], dtype=np.int64) @ g
        if abs(z) ** 2 < 1.0 - TIE_TOL:
            z = -1.0 / z
            g = np.array([[0, -1], [1, 0]], dtype=np.int64) @ g
            continue
        break
    else:
        raise RuntimeError("reduction did not terminate")
    # ties
    if z.real < -0.5 + TIE_TOL:
        z = z + 1
        g = np.array([[1, 1], [0, 1]], dtype=np.int64) @ g
    if z.real < 0 and abs(abs(z) ** 2 - 1.0) <= TIE_TOL:
        z = -1.0 / z
        g = np.array([[0, -1], [1, 0]], dtype=np.int64) @ g
    if return_matrix:
        return z, g
    return z


def reduce_modular_array(z):
    """Vectorised reduction of an array of upper half-plane points."""
    z = np.array(z, dtype=np.complex128, copy=True).ravel()
    if np.any(z.imag <= 0):
        raise ValueError("Im z must be positive")
    active = np.ones(z.shape, dtype=bool)
    for _ in range(10000):
        if not active.any():
            break
        za = z[active]
        za = za - np.floor(za.real + 0.5)
        flip = np.abs(za) ** 2 < 1.0 - TIE_TOL
        za[flip] = -1.0 / za[flip]
        z[active] = za
        idx = np.nonzero(active)[0]
        active[idx[~flip]] = False
    else:
        raise RuntimeError("reduction did not terminate")
    left = z.real < -0.5 + TIE_TOL
    z[left] += 1
    arc = (z.real < 0) & (np.abs(np.abs(z) ** 2 - 1.0) <= TIE_TOL)
    z[arc] = -1.0 / z[arc]
    return z


def mobius(g, z):
    a, b, c, d = np.asarray(g, dtype=float).ravel()
    return (a * z + b) / (c * z + d)


def in_fundamental_domain(z, tol=1e-9):
    z = np.asarray(z)
    return (np.abs(z.real) <= 0.5 + tol) & (np.abs(z) >= 1 - tol) & (z.imag > 0)


# ----------------------------------------------------------------------
# shape map
# ----------------------------------------------------------------------

def planar_matrix(x):
    """2x2 row matrix of Lambda rho (rho = rotation_to_e3(w)), det > 0.

    Returns (M, sign) where sign = -1 means the second row was negated
    to fix the orientation.
    """
    rho = rotation_to_e3(x.w)
    P = x.basis @ rho
    M = P[:, :2].copy()
    sign = 1
    if np.linalg.det(M) < 0:
        M[1] = -M[1]
        sign = -1
    return M, sign, P


def matrix_to_z(M):
    a, b, c, d = np.asarray(M, dtype=float).ravel()
    return (a * 1j + b) / (c * 1j + d)


def shape(x):
    M, _, _ = planar_matrix(x)
    return ShapePoint(reduce_modular(matrix_to_z(M)), 0.0, True)


def shape_gram(v1, v2, w):
    """Vectorised shape z (before reduction) from row pairs and normals.

    v1, v2, w: arrays (...,3).  Rotation free: uses z = (s (v1.v2) + i A)/|v2|^2
    with A = |v1 x v2| and s the orientation sign of (v1 x v2).w.
    When s < 0 the basis (v1, -v2) is the positively oriented one.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    w = np.asarray(w, dtype=float)
    cr = np.cross(v1, v2)
    A = np.linalg.norm(cr, axis=-1)
    s = np.sign(np.sum(cr * w, axis=-1))
    dot = np.sum(v1 * v2, axis=-1)
    n2 = np.sum(v2 * v2, axis=-1)
    return (s * dot + 1j * A) / n2


def H1_of(z):
    """Upper triangular representative [[sqrt y, x/sqrt y],[0, 1/sqrt y]] with H1.i = z."""
    x, y = z.real, z.imag
    r = np.sqrt(y)
    return np.array([[r, x / r], [0.0, 1.0 / r]])


def point_from_shape(z, w=(0.0, 0.0, 1.0)):
    """A point (Lambda, w) whose shape is z (before reduction)."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    rho = rotation_to_e3(w)
    M = np.zeros((2, 3))
    M[:, :2] = H1_of(complex(z))
    return PointX23(M @ rho.T, w)


def csv_rows(z, w, weight=None):
    """Rows (z.re, z.im, w1, w2, w3[, weight]) with fixed formatting."""
    z = np.asarray(z)
    w = np.asarray(w)
    cols = [z.real, z.imag, w[:, 0], w[:, 1], w[:, 2]]
    if weight is not None:
        cols.append(np.asarray(weight, dtype=float))
    return np.column_stack(cols)
