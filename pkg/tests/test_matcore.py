import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from x23orbits import matcore as mc


def rot(seed):
    return mc.random_rotation(np.random.default_rng(seed))


def test_hs_norm_examples():
    assert mc.hs_norm(np.eye(3)) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert mc.hs_norm([[1, 1], [0, 1]]) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert mc.hs_norm(np.diag([0.5, 0.5, 4.0])) == pytest.approx(math.sqrt(16.5), abs=1e-15)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_hs_norm_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((3, 3))
    r1, r2 = mc.random_rotation(rng), mc.random_rotation(rng)
    assert mc.hs_norm(r1 @ g @ r2) == pytest.approx(mc.hs_norm(g), rel=1e-12)


def test_integer_det_and_membership():
    assert mc.int_det2([[2, 3], [1, 2]]) == 1
    big = [[10 ** 6, 1, 0], [0, 1, 0], [0, 0, 1]]
    assert mc.int_det3(big) == 10 ** 6
    assert mc.is_sl(np.array([[1, 1], [0, 1]]))
    assert not mc.is_sl(np.array([[2, 0], [0, 1]]))
    assert mc.is_sl(np.diag([2.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        mc.as_intmat([[0.5, 0], [0, 2]])


def test_left_iwasawa_trivial_cases():
    # k = I when g is block lower triangular with G1 upper triangular
    # (positive diagonal): that is the Gram-Schmidt gauge
    U = np.array([[2.0, 0.5, 0], [0.0, 0.25, 0], [0.2, -0.4, 2.0]])
    f = mc.block_iwasawa_left(U)
    assert np.max(np.abs(f.k - np.eye(3))) < 1e-14
    r = rot(1)
    f = mc.block_iwasawa_left(r)
    assert np.max(np.abs(f.k - r)) < 1e-12
    assert np.max(np.abs(f.G1 - np.eye(2))) < 1e-12
    assert np.max(np.abs(f.G3)) < 1e-12 and abs(f.G4 - 1) < 1e-12


def test_right_iwasawa_trivial_cases():
    L = np.array([[2.0, 0, 0], [0.7, 0.5, 0], [0.2, -0.4, 1.0]])
    f = mc.block_iwasawa_right(L)
    assert np.max(np.abs(f.k - np.eye(3))) < 1e-14
    r = rot(2)
    f = mc.block_iwasawa_right(r)
    assert np.max(np.abs(f.H1 - np.eye(2))) < 1e-12 and abs(f.H4 - 1) < 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=100, deadline=None)
def test_iwasawa_reconstruction(seed):
    g = mc.random_sl3(np.random.default_rng(seed), 0.6)
    for f in (mc.block_iwasawa_left(g), mc.block_iwasawa_right(g)):
        assert np.max(np.abs(f.reconstruct() - g)) < 1e-12
        assert np.max(np.abs(f.k @ f.k.T - np.eye(3))) < 1e-12
        assert np.linalg.det(f.k) == pytest.approx(1.0, abs=1e-12)
        assert f.G4 > 0
        assert np.linalg.det(f.G1) == pytest.approx(1 / f.G4, rel=1e-10)


def test_iwasawa_gauge_invariants():
    # another valid decomposition: rotate the G1 block by an SO(2) element
    rng = np.random.default_rng(3)
    g = mc.random_sl3(rng, 0.5)
    f = mc.block_iwasawa_left(g)
    th = 0.7
    q = np.eye(3)
    q[:2, :2] = [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
    k2 = f.k @ q
    L2 = k2.T @ g
    assert np.max(np.abs(L2[:2, 2])) < 1e-12
    assert L2[2, 2] == pytest.approx(f.G4, rel=1e-12)
    assert abs(np.linalg.det(L2[:2, :2])) == pytest.approx(abs(np.linalg.det(f.G1)), rel=1e-12)
    from x23orbits import zenum
    h = mc.block_iwasawa_right(mc.random_sl3(rng, 0.5))
    s1 = zenum.skewed_series(4, f.G1, h.H1, 30).head
    s2 = zenum.skewed_series(4, L2[:2, :2], h.H1, 30).head
    assert s1 == pytest.approx(s2, rel=1e-10)


def test_operator_hs_examples():
    e = [[1.0, 0, 0], [0, 1.0, 0]]
    assert mc.operator_hs(e, e) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert mc.operator_hs(e, [[2.0, 0, 0], [0, 1.0, 0]]) == pytest.approx(math.sqrt(5), abs=1e-14)
    with pytest.raises(ValueError):
        mc.operator_hs([[1.0, 0, 0], [2.0, 0, 0]], e)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_operator_hs_invariance(seed):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((2, 3))
    Im = rng.standard_normal((2, 3))
    r = mc.random_rotation(rng)
    v = mc.operator_hs(S, Im)
    assert mc.operator_hs(S @ r, Im @ r) == pytest.approx(v, rel=1e-10)
    # basis choice inside the source plane does not matter
    op = mc.OperatorBetweenPlanes(S, Im)
    onb = mc.orthonormal_plane(S)
    th = rng.uniform(0, 2 * np.pi)
    q = np.array([[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]])
    assert op.hs(q @ onb) == pytest.approx(v, rel=1e-10)


def test_operator_hs_matches_2x2():
    # B0 = e1,e2 and image gamma-transformed: HS of gamma itself
    B0 = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    g = np.array([[2, 1], [1, 1]])
    Im = np.zeros((2, 3))
    Im[:, :2] = g
    assert mc.operator_hs(B0, Im) == pytest.approx(mc.hs_norm(g), rel=1e-14)


def test_rotation_to_e3():
    assert np.max(np.abs(mc.rotation_to_e3([0, 0, 1.0]) - np.eye(3))) < 1e-15
    assert np.array_equal(mc.rotation_to_e3([0, 0, -1.0]), np.diag([1.0, -1.0, -1.0]))
    with pytest.raises(ValueError):
        mc.rotation_to_e3([0, 0, 0])
    rng = np.random.default_rng(4)
    for _ in range(200):
        w = rng.standard_normal(3)
        w /= np.linalg.norm(w)
        r = mc.rotation_to_e3(w)
        assert np.max(np.abs(w @ r - [0, 0, 1])) < 1e-12
        assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)
    w = np.array([1e-9, 0, -1.0])
    w /= np.linalg.norm(w)
    assert np.max(np.abs(w @ mc.rotation_to_e3(w) - [0, 0, 1])) < 1e-8
