"""Integer matrix norm balls in SL(2,Z) and SL(3,Z), N(tau), skewed series."""
from dataclasses import dataclass, field
from functools import lru_cache
import struct

import numpy as np

from . import _kern
from .matcore import as_mat, sigma_min

MAGIC = b"ZENUM1"


def _nsq_bound(T):
    T = float(T)
    if T <= 0:
        return -1
    return int(_kern.int_bound(T))


@dataclass
class BallEnumeration:
    group: int
    T: float
    items: np.ndarray           # (count, n, n) int64, lexicographic by rows
    count: int = field(init=False)

    def __post_init__(self):
        self.count = int(self.items.shape[0])

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.items)

    def as_set(self):
        return {tuple(m.ravel()) for m in self.items}


def _lexsort_rows(flat):
    if flat.shape[0] == 0:
        return flat
    order = np.lexsort(flat.T[::-1])
    return flat[order]


def enumerate_sl2z(T):
    """All gamma in SL(2,Z) with ||gamma|| <= T, rows in lex order."""
    N2 = _nsq_bound(T)
    if N2 < 2:
        return BallEnumeration(2, float(T), np.zeros((0, 2, 2), dtype=np.int64))
    n = _kern._sl2_scan(N2, np.empty((0, 4), dtype=np.int64))
    out = np.empty((n, 4), dtype=np.int64)
    _kern._sl2_scan(N2, out)
    return BallEnumeration(2, float(T), _lexsort_rows(out).reshape(-1, 2, 2))


def count_n_tau(T):
    """N(tau) = #{gamma in SL(2,Z): ||gamma|| <= tau}."""
    N2 = _nsq_bound(T)
    if N2 < 2:
        return 0
    return int(_kern._sl2_scan(N2, np.empty((0, 4), dtype=np.int64)))


def _sl3_rows(T):
    N2 = _nsq_bound(T)
    if N2 < 3:
        return N2, np.zeros((0, 3), dtype=np.int64)
    return N2, _kern.primitive_rows(N2 - 2)


def iter_sl3z_partitions(T, chunk_rows=256):
    """Yield (first_rows, gammas) blocks; partitions are by first row.

    Block order is deterministic (lex order of first rows), and gammas
    inside a block are sorted lexicographically.
    """
    N2, rows = _sl3_rows(T)
    for i in range(0, rows.shape[0], chunk_rows):
        part = rows[i:i + chunk_rows]
        counts = _kern.sl3_count_rows(part, N2)
        flat = _kern.sl3_list_rows(part, N2, counts)
        yield part, _lexsort_rows(flat).reshape(-1, 3, 3)


def enumerate_sl3z(T):
    """All gamma in SL(3,Z) with ||gamma|| <= T, rows in lex order."""
    blocks = [g for _, g in iter_sl3z_partitions(T)]
    if not blocks:
        items = np.zeros((0, 3, 3), dtype=np.int64)
    else:
        items = np.concatenate(blocks)
    return BallEnumeration(3, float(T), items)


def count_sl3z(T, workers=1):
    """#Gamma_T for SL(3,Z) without materialising the matrices."""
    N2, rows = _sl3_rows(T)
    if rows.shape[0] == 0:
        return 0
    if workers <= 1:
        return int(_kern.sl3_count_rows(rows, N2).sum())
    from concurrent.futures import ThreadPoolExecutor
    parts = np.array_split(rows, workers)
    # numba kernels release nothing by default; threads still give a
    # deterministic merge, which is all we need here
    with ThreadPoolExecutor(workers) as ex:
        res = list(ex.map(lambda p: int(_kern.sl3_count_rows(p, N2).sum()), parts))
    return int(sum(res))


def sl3_normal_weights(T):
    """Aggregate Gamma_T by the normal n = r1 x r2 of the first two rows.

    Returns (normals (m,3) int64, weights (m,) int64, total).  Normals
    are primitive and listed in lex order.
    """
    N2, rows = _sl3_rows(T)
    if rows.shape[0] == 0:
        return np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), 0
    off = (N2 - 1) // 2
    side = 2 * off + 1
    W = np.zeros((side, side, side), dtype=np.int64)
    total = _kern.sl3_aggregate_normals(rows, N2, W, off)
    idx = np.nonzero(W)
    normals = np.stack(idx, axis=1).astype(np.int64) - off
    return normals, W[idx], int(total)


# ----------------------------------------------------------------------
# binary cache
# ----------------------------------------------------------------------

def write_cache(path, enum):
    n = enum.group
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qdq", n, float(enum.T), enum.count))
        fh.write(np.ascontiguousarray(enum.items, dtype="<i8").tobytes())


def read_cache(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a ZENUM1 file")
        n, T, count = struct.unpack("<qdq", fh.read(24))
        if n not in (2, 3):
            raise ValueError(f"{path}: bad group {n}")
        data = np.frombuffer(fh.read(), dtype="<i8")
    if data.size != count * n * n:
        raise ValueError(f"{path}: truncated ({data.size} entries, want {count * n * n})")
    return BallEnumeration(int(n), float(T), data.reshape(count, n, n).astype(np.int64))


# ----------------------------------------------------------------------
# counting constant and the skewed series
# ----------------------------------------------------------------------

FIT_GRID = tuple(range(20, 101, 10))


@lru_cache(maxsize=None)
def fit_c(grid=FIT_GRID):
    """Least-squares c in N(tau) ~ c tau^2 over the grid."""
    tau = np.asarray(grid, dtype=float)
    N = np.array([count_n_tau(t) for t in tau], dtype=float)
    return float(np.sum(N * tau ** 2) / np.sum(tau ** 4))


def c_fit():
    """Tail constant: twice the fitted counting constant."""
    return 2.0 * fit_c()


@dataclass(frozen=True)
class TruncatedSeries:
    alpha: float
    A: np.ndarray
    B: np.ndarray
    K: float
    head: float
    tail_hi: float
    nterms: int

    @property
    def lo(self):
        return self.head

    @property
    def hi(self):
        return self.head + self.tail_hi

    def contains(self, x):
        return self.lo <= x <= self.hi


def skew_terms(A, B, K):
    """(gammas (n,2,2), squared norms) for all ||A gamma B|| <= K."""
    A = np.ascontiguousarray(as_mat(A, 2))
    B = np.ascontiguousarray(as_mat(B, 2))
    if abs(np.linalg.det(A)) < 1e-300 or abs(np.linalg.det(B)) < 1e-300:
        raise ValueError("A and B must be invertible")
    gam, F = _kern.sl2_skew_scan(A, B, float(K))
    flat = np.concatenate([gam, F.view(np.int64)[:, None]], axis=1)
    flat = _lexsort_rows(flat)
    return flat[:, :4].reshape(-1, 2, 2), flat[:, 4].copy().view(np.float64)


def tail_bound(alpha, A, B, K):
    s = sigma_min(A) * sigma_min(B)
    return c_fit() / (s * s) * alpha / (alpha - 2.0) * float(K) ** (2.0 - alpha)


def skewed_series(alpha, A, B, K):
    """Sum of ||A gamma B||^-alpha over SL(2,Z), head up to K plus tail bound."""
    alpha = float(alpha)
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    A = as_mat(A, 2)
    B = as_mat(B, 2)
    _, F = skew_terms(A, B, K)
    # sum smallest terms first for a reproducible, accurate total
    head = float(np.sum(np.sort(F ** (-alpha / 2.0))))
    return TruncatedSeries(alpha, A, B, float(K), head, tail_bound(alpha, A, B, K), int(F.size))


def skewed_series_by_filter(alpha, A, B, K):
    """Reference version: enumerate ||gamma|| <= K/s and filter."""
    A = as_mat(A, 2)
    B = as_mat(B, 2)
    s = sigma_min(A) * sigma_min(B)
    items = enumerate_sl2z(K / s * (1 + 1e-12)).items.astype(float)
    M = A @ items @ B
    F = np.sum(M * M, axis=(1, 2))
    F = F[F <= K * K]
    return float(np.sum(np.sort(F ** (-alpha / 2.0)))), int(F.size)


COUNT_CONST = 6.0   # N(tau) ~ 6 tau^2: vol(B_tau) ~ 2 pi^2 tau^2 over covolume pi^2/3


def skewed_series_estimate(alpha, A, B, K=500.0):
    """Point estimate: exact head plus the asymptotic tail.

    Uses #{||A gamma B|| <= s} ~ 6 s^2/|det A det B|, so the tail is
    6/|det A det B| * 2/(alpha-2) * K^(2-alpha).  Much sharper than the
    rigorous bracket (error ~ K^(-8/3) in practice) but not a bound.
    """
    alpha = float(alpha)
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    A = as_mat(A, 2)
    B = as_mat(B, 2)
    _, F = skew_terms(A, B, K)
    head = float(np.sum(np.sort(F ** (-alpha / 2.0))))
    d = abs(np.linalg.det(A) * np.linalg.det(B))
    return head + COUNT_CONST / d * 2.0 / (alpha - 2.0) * float(K) ** (2.0 - alpha)
