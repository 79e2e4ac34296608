"""Small-matrix arithmetic: norms, block Iwasawa factors, plane operators.

Everything here works on plain numpy arrays (float64 for real matrices,
int64 for integer ones).  Functions are pure.
"""
from dataclasses import dataclass

import numpy as np

SL_TOL = 1e-9


def as_mat(m, n=None):
    a = np.asarray(m, dtype=np.float64)
    if n is not None and a.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {a.shape}")
    return a


def as_intmat(m, n=None):
    a = np.asarray(m)
    if not np.issubdtype(a.dtype, np.integer):
        r = np.rint(a)
        if np.any(r != a):
            raise ValueError("matrix has non-integer entries")
        a = r
    a = a.astype(np.int64)
    if n is not None and a.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {a.shape}")
    return a


def int_det2(m):
    m = as_intmat(m, 2)
    return int(m[0, 0]) * int(m[1, 1]) - int(m[0, 1]) * int(m[1, 0])


def int_det3(m):
    # python ints, so no overflow whatever the entry size
    a = [[int(v) for v in row] for row in as_intmat(m, 3)]
    return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))


def is_sl(m, tol=SL_TOL):
    """Membership test for SL(n). Exact for integer arrays."""
    a = np.asarray(m)
    n = a.shape[0]
    if a.shape != (n, n) or n not in (2, 3):
        return False
    if np.issubdtype(a.dtype, np.integer):
        return (int_det2(a) if n == 2 else int_det3(a)) == 1
    return abs(np.linalg.det(a) - 1.0) <= tol


def hs_norm(m):
    """Hilbert-Schmidt (Frobenius) norm sqrt(tr(m^T m))."""
    a = np.asarray(m, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


@dataclass(frozen=True)
class BlockIwasawa:
    """Block triangular factorisation of g in SL(3,R).

    side == "left":  g = k @ [[G1, 0], [G3, G4]]
    side == "right": g = [[G1, 0], [G3, G4]] @ k   (G1..G4 play the role of H1..H4)
    """
    side: str
    k: np.ndarray
    G1: np.ndarray
    G3: np.ndarray
    G4: float

    def lower(self):
        L = np.zeros((3, 3))
        L[:2, :2] = self.G1
        L[2, :2] = self.G3
        L[2, 2] = self.G4
        return L

    def reconstruct(self):
        if self.side == "left":
            return self.k @ self.lower()
        return self.lower() @ self.k

    # names used for the right form
    @property
    def H1(self):
        return self.G1

    @property
    def H3(self):
        return self.G3

    @property
    def H4(self):
        return self.G4


def block_iwasawa_left(g):
    """g = k [[G1,0],[G3,G4]] with k in SO(3), G4 > 0.

    Gauge: k[:,2] is the normalised third column of g, k[:,0] is the
    Gram-Schmidt image of the first column, k[:,1] = k[:,2] x k[:,0].
    With this choice G1 is upper triangular with positive diagonal.
    """
    g = as_mat(g, 3)
    c3 = g[:, 2]
    G4 = float(np.linalg.norm(c3))
    k2 = c3 / G4
    c1 = g[:, 0] - (g[:, 0] @ k2) * k2
    k0 = c1 / np.linalg.norm(c1)
    k1 = np.cross(k2, k0)
    k = np.column_stack([k0, k1, k2])
    L = k.T @ g
    return BlockIwasawa("left", k, L[:2, :2].copy(), L[2, :2].copy(), G4)


def block_iwasawa_right(g):
    """g = [[H1,0],[H3,H4]] k with k in SO(3), H4 > 0.

    Gauge: third row of k is the unit normal to rows 1-2 of g (signed so
    H4 > 0), first row of k is the normalised first row of g, second row
    is k2 x k0.  H1 comes out lower triangular with positive diagonal.
    """
    g = as_mat(g, 3)
    n = np.cross(g[0], g[1])
    n = n / np.linalg.norm(n)
    if g[2] @ n < 0:
        n = -n
    k0 = g[0] / np.linalg.norm(g[0])
    k1 = np.cross(n, k0)
    k = np.vstack([k0, k1, n])
    L = g @ k.T
    return BlockIwasawa("right", k, L[:2, :2].copy(), L[2, :2].copy(), float(L[2, 2]))


def orthonormal_plane(basis):
    """Orthonormal basis (2x3) of the row span of `basis` (2x3)."""
    b = np.asarray(basis, dtype=np.float64)
    u0 = b[0]
    n0 = np.linalg.norm(u0)
    if n0 == 0.0:
        raise ValueError("degenerate basis")
    u0 = u0 / n0
    u1 = b[1] - (b[1] @ u0) * u0
    n1 = np.linalg.norm(u1)
    if n1 <= 1e-14 * max(1.0, np.linalg.norm(b[1])):
        raise ValueError("degenerate basis")
    return np.vstack([u0, u1 / n1])


@dataclass(frozen=True)
class OperatorBetweenPlanes:
    """Linear map T of a plane U into R^3 given by T(source_i) = image_i."""
    source: np.ndarray
    image: np.ndarray

    def matrix_on(self, onb):
        """Rows T(u_1), T(u_2) for an orthonormal basis onb of U."""
        # coordinates of onb in the source basis: onb = C source
        C = np.linalg.lstsq(self.source.T, onb.T, rcond=None)[0].T
        return C @ self.image

    def hs(self, onb=None):
        if onb is None:
            onb = orthonormal_plane(self.source)
        return hs_norm(self.matrix_on(onb))


def operator_hs(source_basis, image_basis):
    """HS norm of the map sending the source basis to the image basis.

    ||T||^2 = ||T u1||^2 + ||T u2||^2 over an orthonormal basis of the
    source plane, which equals tr((S S^T)^-1 I I^T).
    """
    S = np.asarray(source_basis, dtype=np.float64)
    Im = np.asarray(image_basis, dtype=np.float64)
    orthonormal_plane(S)  # degenerate check
    return OperatorBetweenPlanes(S, Im).hs()


def rotation_to_e3(w):
    """Rotation rho in SO(3) with w @ rho = e3.

    rho is the transpose of the Rodrigues rotation about w x e3 that takes
    w to e3.  For w close to -e3 the pi-rotation about the x-axis is used.
    """
    w = np.asarray(w, dtype=np.float64)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        raise ValueError("zero vector")
    if abs(nw - 1.0) > 1e-9:
        raise ValueError("w must be a unit vector")
    w = w / nw
    if np.linalg.norm(w + np.array([0.0, 0.0, 1.0])) < 1e-8:
        return np.diag([1.0, -1.0, -1.0])
    # R w = e3 ; R = I + K + K^2/(1+c), axis a = w x e3, c = w.e3
    a = np.array([w[1], -w[0], 0.0])
    c = w[2]
    K = np.array([[0.0, -a[2], a[1]],
                  [a[2], 0.0, -a[0]],
                  [-a[1], a[0], 0.0]])
    R = np.eye(3) + K + (K @ K) / (1.0 + c)
    return R.T


def random_rotation(rng):
    """Haar-random element of SO(3) (QR of a Gaussian matrix)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_sl3(rng, scale=0.3):
    """A bounded random element of SL(3,R): expm of a traceless matrix."""
    from scipy.linalg import expm
    X = scale * rng.standard_normal((3, 3))
    X -= np.trace(X) / 3.0 * np.eye(3)
    return expm(X)


def sigma_min(m):
    return float(np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)[-1])


def sigma_max(m):
    return float(np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)[0])
