import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from x23orbits import moduli as md, matcore as mc, skewvol as sv

seeds = st.integers(0, 2 ** 32 - 1)


def random_point(rng):
    g = mc.random_sl3(rng, 0.5)
    return md.act(md.base_point(), g)


def test_covolume():
    assert md.covolume([[1, 0, 0], [0, 1, 0]]) == 1
    assert md.covolume([[2, 0, 0], [0, 1, 0]]) == 2
    b = np.random.default_rng(0).standard_normal((2, 3))
    assert md.covolume(b) == pytest.approx(np.linalg.norm(np.cross(*b)), rel=1e-12)
    with pytest.raises(ValueError):
        md.covolume([[1, 0, 0], [2, 0, 0]])


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_act_invariants_and_right_action(seed):
    rng = np.random.default_rng(seed)
    x = random_point(rng)
    x.check()
    g1 = mc.random_sl3(rng, 0.5)
    g2 = mc.random_sl3(rng, 0.5)
    a = md.act(md.act(x, g1), g2)
    b = md.act(x, g1 @ g2)
    a.check()
    assert np.max(np.abs(a.basis - b.basis)) < 1e-10
    assert np.max(np.abs(a.w - b.w)) < 1e-10


def test_act_rotation_and_stabiliser():
    rng = np.random.default_rng(1)
    x = random_point(rng)
    r = mc.random_rotation(rng)
    y = md.act(x, r)
    assert np.max(np.abs(y.basis - x.basis @ r)) < 1e-12
    assert np.max(np.abs(y.w - x.w @ r)) < 1e-12
    x0 = md.base_point()
    h = sv.h_embed(sv.HElement([0.3, -1.2], 2.5, [[2, 1], [1, 1]]))
    y = md.act(x0, h)
    # same lattice and normal: the basis is gamma-changed, shape and w agree
    assert np.max(np.abs(y.w - x0.w)) < 1e-12
    assert np.max(np.abs(y.basis[:, 2])) < 1e-12
    assert md.shape(y).z == pytest.approx(1j, abs=1e-12)


def test_perp():
    x0 = md.base_point()
    assert np.array_equal(md.perp(x0), [0, 0, 1.0])
    r = mc.rotation_to_e3([1.0, 0, 0]).T      # e3 r = e1
    assert np.max(np.abs(md.perp(md.act(x0, r)) - [1, 0, 0])) < 1e-12
    x = random_point(np.random.default_rng(5))
    assert np.max(np.abs(x.basis @ md.perp(x))) < 1e-10


def test_shape_examples():
    assert md.shape(md.base_point()).z == pytest.approx(1j, abs=1e-15)
    x = md.PointX23([[1, 0, 0], [0.5, 1, 0]], [0, 0, 1])
    z = md.shape(x).z
    assert z == pytest.approx(0.5 + 1j, abs=1e-12)
    assert md.reduce_modular(-0.5 + 1j) == pytest.approx(0.5 + 1j, abs=1e-12)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_shape_rotation_and_basis_independence(seed):
    rng = np.random.default_rng(seed)
    x = random_point(rng)
    z = md.shape(x).z
    r = mc.random_rotation(rng)
    assert md.shape(md.act(x, r)).z == pytest.approx(z, abs=1e-9)
    g = np.array([[2, 3], [1, 2]]) if seed % 2 else np.array([[1, -4], [0, 1]])
    y = md.PointX23(g @ x.basis, x.w)
    assert md.shape(y).z == pytest.approx(z, abs=1e-9)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_shape_invariant_under_stabiliser(seed):
    rng = np.random.default_rng(seed)
    x = random_point(rng)
    gam = [[1, 2], [1, 3]] if seed % 2 else [[0, -1], [1, 0]]
    h = sv.h_embed(sv.HElement(rng.standard_normal(2), float(rng.uniform(0.3, 3)), gam))
    # x0.h = x0, so (x0.h).g = x0.g: left multiplication of g by h
    g = mc.random_sl3(rng, 0.5)
    a = md.shape(md.act(md.base_point(), g)).z
    b = md.shape(md.act(md.base_point(), h @ g)).z
    assert a == pytest.approx(b, abs=1e-9)


def test_orientation_matters():
    x = md.PointX23([[1, 0, 0], [0.3, 1.0, 0]], [0, 0, 1])
    y = md.PointX23([[1, 0, 0], [0.3, 1.0, 0]], [0, 0, -1])
    assert md.shape(x).z != pytest.approx(md.shape(y).z, abs=1e-6)


def test_reduce_examples():
    assert md.reduce_modular(7 + 1j) == pytest.approx(1j, abs=1e-12)
    z, g = md.reduce_modular(0.1j, return_matrix=True)
    assert md.in_fundamental_domain(z)
    assert md.mobius(g, 0.1j) == pytest.approx(z, abs=1e-12)
    assert round(np.linalg.det(g)) == 1
    assert md.reduce_modular(0.2 + 1.5j) == 0.2 + 1.5j
    with pytest.raises(ValueError):
        md.reduce_modular(1 - 0.1j)


@given(st.floats(-50, 50), st.floats(1e-3, 20))
@settings(max_examples=200, deadline=None)
def test_reduce_properties(x, y):
    z0 = complex(x, y)
    z, g = md.reduce_modular(z0, return_matrix=True)
    assert md.in_fundamental_domain(z)
    assert int(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]) == 1
    assert abs(md.mobius(g, z0) - z) < 1e-8 * max(1, abs(z))
    assert md.reduce_modular(z) == z
    assert md.reduce_modular_array([z0])[0] == pytest.approx(z, abs=1e-9)


def test_tie_rules():
    assert md.reduce_modular(-0.5 + 2j) == pytest.approx(0.5 + 2j)
    w = complex(math.cos(2.0), math.sin(2.0))        # on the arc, Re < 0
    r = md.reduce_modular(w)
    assert r.real > 0 and abs(abs(r) - 1) < 1e-12


def test_json_roundtrip_and_csv():
    x = random_point(np.random.default_rng(9))
    y = md.PointX23.from_json(x.to_json())
    assert np.array_equal(x.basis, y.basis) and np.array_equal(x.w, y.w)
    assert len(json.loads(x.to_json())["basis"]) == 2
    with pytest.raises(ValueError):
        md.PointX23.from_json(json.dumps({"basis": [[2, 0, 0], [0, 1, 0]], "w": [0, 0, 1]}))
    rows = md.csv_rows(np.array([1j]), np.array([[0, 0, 1.0]]))
    assert rows.shape == (1, 5)


def test_shape_gram_matches_rotation_path():
    rng = np.random.default_rng(2)
    for _ in range(30):
        x = random_point(rng)
        z = md.shape_gram(x.basis[0], x.basis[1], x.w)
        assert md.reduce_modular(complex(z)) == pytest.approx(md.shape(x).z, abs=1e-9)


def test_point_from_shape():
    for z in (1j, 0.3 + 1.1j, -0.2 + 3j):
        assert md.shape(md.point_from_shape(z, [1, 2, 2])).z == pytest.approx(z, abs=1e-12)
