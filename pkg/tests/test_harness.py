import io
import json
import math
import contextlib

import numpy as np
import pytest

from x23orbits import cli, matcore as mc, moduli as md, zenum
from x23orbits.harness import (RunConfig, ConfigError, orbit_measure, orbit_experiment,
                               dual_experiment, ratio_experiment, BudgetExceeded)
from x23orbits.harness import lattices, stats, orbit as orb


def run_cli(*args):
    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        rc = cli.main(list(args))
    return rc, out.getvalue(), err.getvalue()


# -- config ---------------------------------------------------------------

def test_config_defaults_and_validation(tmp_path):
    cfg = RunConfig.from_dict({})
    assert cfg.T_list == [8.0, 12.0, 15.0] and len(cfg.functions) == 6
    assert cfg.caps == {"n": 1000, "seed": 7}
    for bad in ({"T_list": [1.0]}, {"gamma": "SL2Z"}, {"functions": ["nope"]},
                {"unknown": 1}, {"x0": {"basis": [[2, 0, 0], [0, 1, 0]], "w": [0, 0, 1]}},
                {"dual": {"g1": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}}):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(bad)
    with pytest.raises(ConfigError):
        RunConfig.from_json("{not json")
    schema_doc = json.load(open("docs/runconfig.schema.json"))
    from x23orbits.harness import load_schema
    assert schema_doc == load_schema()


# -- orbit measures -------------------------------------------------------

def test_smallest_ball():
    em = orbit_measure(1.8).check()
    assert em.total == 24 and len(em) == 6
    W = np.rint(em.w).astype(int)
    assert {tuple(v) for v in W} == {(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)}
    assert np.allclose(em.z, 1j)


def test_normal_aggregation_matches_stream():
    T = 4.0
    fast = orbit_measure(T)
    slow = orb._stream(T, md.base_point())
    assert fast.total == slow.total
    key = lambda z, w: (round(z.real, 9) + 0.0, round(z.imag, 9), *np.round(w, 9) + 0.0)
    a = {}
    for z, w, c in zip(fast.z, fast.w, fast.counts):
        a[key(z, w)] = a.get(key(z, w), 0) + int(c)
    b = {}
    for z, w in zip(slow.z, slow.w):
        b[key(z, w)] = b.get(key(z, w), 0) + 1
    assert a == b


def test_normal_bases_are_bases():
    N, W, _ = zenum.sl3_normal_weights(6)
    B1, B2 = orb.normal_bases(N)
    assert np.array_equal(np.cross(B1, B2), N)


def test_rotation_equivariance():
    caps = stats.random_caps(300, 3)
    em = orbit_measure(6.0)
    d0, _ = stats.cap_discrepancy(em.w, em.weight, caps)
    r = mc.random_rotation(np.random.default_rng(8))
    # measure pushed by the rotation, caps relabelled by the same rotation
    d1, _ = stats.cap_discrepancy(em.w @ r, em.weight, (caps[0] @ r, caps[1]))
    assert d1 == pytest.approx(d0, abs=1e-12)
    # a signed permutation lies in Gamma, so x0.rho has the same orbit measure
    P = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    x1 = md.act(md.base_point(), P)
    em1 = orb._stream(6.0, x1)
    d2, _ = stats.cap_discrepancy(em1.w, em1.weight, caps)
    assert d2 == pytest.approx(d0, abs=1e-12)


def test_generic_x0_stream_and_budget():
    x0 = md.act(md.base_point(), mc.random_sl3(np.random.default_rng(4), 0.3))
    em = orbit_measure(4.0, x0).check()
    assert em.total == zenum.count_sl3z(4.0)
    assert np.max(np.abs(np.linalg.norm(em.w, axis=1) - 1)) < 1e-12
    with pytest.raises(BudgetExceeded):
        orbit_measure(20.0, x0, {"max_matrices": 1e6})
    with pytest.raises(BudgetExceeded):
        orbit_measure(40.0, None, {"max_bytes": 1e8})


def test_orbit_experiment_small(tmp_path):
    cfg = RunConfig.from_dict({"T_list": [3, 5, 8], "out": str(tmp_path)})
    ms, rep = orbit_experiment(cfg)
    assert (tmp_path / "orbit_T8.csv").exists()
    head = (tmp_path / "orbit_T3.csv").read_text().splitlines()
    assert head[0] == "z.re,z.im,w1,w2,w3,weight"
    assert sum(int(l.rsplit(",", 1)[1]) for l in head[1:]) == ms[0].total
    s = rep["summary"]
    assert s["pure_w_within_tolerance"] == {"w3sq": True, "wmix": True}
    assert set(s["delta_decreasing"]) == set(cfg.functions)
    with pytest.raises(BudgetExceeded) as ei:
        orbit_experiment(RunConfig.from_dict({"T_list": [3, 40], "out": str(tmp_path)}),
                         compare=False)
    assert len(ei.value.partial["runs"]) == 1


# -- lattices ---------------------------------------------------------------

def test_short_vector_counts_vs_brute():
    rng = np.random.default_rng(6)
    for _ in range(30):
        B = mc.random_sl3(rng, 0.6)
        L = lattices.lll(B)
        assert abs(abs(np.linalg.det(L)) - abs(np.linalg.det(B))) < 1e-9
        for r in (0.7, 1.3, 2.0):
            assert lattices.count_short(L, r) == lattices.brute_count(B, r)
        # systole from brute force over a box
        box = 4
        rg = np.arange(-box, box + 1)
        X = np.stack(np.meshgrid(rg, rg, rg, indexing="ij"), -1).reshape(-1, 3)
        X = X[np.any(X != 0, axis=1)]
        assert lattices.systole(L) == pytest.approx(np.sqrt(np.sum((X @ B.T) ** 2, 1)).min(), rel=1e-12)


def test_hecke_lattices():
    p = 101
    B = lattices.index_p_basis([3, 7, 5], p)
    assert abs(np.linalg.det(B)) == pytest.approx(p)
    assert np.all((np.array([3, 7, 5]) @ B) % p == 0)
    rng = np.random.default_rng(0)
    Bs = lattices.hecke_lattices(10007, 50, rng)
    assert np.allclose(np.abs(np.linalg.det(Bs)), 1.0)


def test_siegel_oracle_mean():
    from x23orbits.harness.dual import siegel_oracle, ball_volume_r
    m, se = siegel_oracle([1.0, 2.0], 10007, 4000, 1)
    for j, r in enumerate((1.0, 2.0)):
        assert abs(m[j] - ball_volume_r(r)) < 4 * se[j] + 0.01 * ball_volume_r(r)


# -- dual / ratio -----------------------------------------------------------------

def test_dual_small():
    cfg = RunConfig.from_dict({"dual": {"T": 12.0, "samples": 4000, "hecke_samples": 500,
                                        "radii": [0.5, 1.0]}})
    rep = dual_experiment(cfg)
    for row in rep["counts"]:
        assert row["zero_fraction"] == row["systole_above_r"]
    assert sum(rep["systole"]["hist"]) == 4000


def _dual(T, radii, n, g=None):
    d = {"T": T, "samples": n, "hecke_samples": 100, "radii": radii}
    if g is not None:
        d["g1"], d["g2"] = g[0].tolist(), g[1].tolist()
    return dual_experiment(RunConfig.from_dict({"dual": d}))["counts"]


def test_dual_rotations():
    from x23orbits import skewvol as sv
    rng = np.random.default_rng(3)
    r1, r2 = mc.random_rotation(rng), mc.random_rotation(rng)
    # identical ball: the same seed gives the same h samples
    a = sv.h_ball_sampler(sv.SkewedBallSpec(np.eye(3), np.eye(3), 12.0), 5, 500)
    b = sv.h_ball_sampler(sv.SkewedBallSpec(r1, r2, 12.0), 5, 500)
    assert np.allclose(a.embed(), b.embed(), rtol=0, atol=1e-9)
    # the lattice h^-1 g1 Z^3 does depend on g1 at finite T (for g1 = e it
    # always contains the vector fixed by H); away from tiny radii the
    # reports agree statistically, and the small-radius gap closes with T
    e30 = _dual(30.0, [0.5, 1.0, 1.5, 2.0], 40000)
    r30 = _dual(30.0, [0.5, 1.0, 1.5, 2.0], 40000, (r1, r2))
    for x, y in zip(e30[1:], r30[1:]):
        assert abs(x["mean"] - y["mean"]) < 3 * math.hypot(x["se"], y["se"])
    e12 = _dual(12.0, [0.5], 40000)
    r12 = _dual(12.0, [0.5], 40000, (r1, r2))
    assert abs(e30[0]["mean"] - r30[0]["mean"]) < abs(e12[0]["mean"] - r12[0]["mean"])


def test_ratio_small():
    cfg = RunConfig.from_dict({"ratio": {"T_list": [5, 7.5]}, "K": 100})
    rep = ratio_experiment(cfg)
    assert rep["S4"]["lo"] <= rep["S4"]["hi"]
    for r in rep["rows"]:
        assert r["m_est"][0] <= r["m_est"][1]
    assert rep["ratio_spread"] < 0.2


# -- CLI ----------------------------------------------------------------------

def test_cli_examples(tmp_path):
    rc, out, _ = run_cli("count", "--group", "2", "--T", "1.4142136")
    assert rc == 0 and out.strip() == "4"
    rc, out, _ = run_cli("count", "--group", "3", "--T", "1.7320509", "--out", str(tmp_path))
    assert rc == 0 and out.strip() == "24"
    assert json.load(open(tmp_path / "count.json"))["count"] == 24
    rc, out, _ = run_cli("appendix-b", "--samples", "100000", "--out", str(tmp_path))
    assert rc == 0 and abs(json.loads(out)["pi2_over_2_check"] - 4.934802) < 1e-6
    assert (tmp_path / "constants.json").exists()


def test_cli_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"T_list": [1.0]}))
    rc, _, err = run_cli("orbit", "--config", str(bad))
    assert rc == 2 and "T_list" in err
    rc, _, err = run_cli("orbit", "--config", str(tmp_path / "missing.json"))
    assert rc == 2
    rc, _, _ = run_cli("volume", "--T", "10", "--g1", "[[2,0,0],[0,1,0],[0,0,1]]")
    assert rc == 2
    rc, _, _ = run_cli("nosuchcommand")
    assert rc == 2
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"T_list": [3, 40], "out": str(tmp_path / "o")}))
    rc, _, err = run_cli("orbit", "--config", str(big))
    assert rc == 3 and "budget" in err
    assert json.load(open(tmp_path / "o" / "report.json"))["orbit"]["runs"][0]["T"] == 3
    rc, _, _ = run_cli("enumerate", "--group", "3", "--T", "30")
    assert rc == 3


def test_cli_enumerate_and_volume(tmp_path):
    rc, out, _ = run_cli("enumerate", "--group", "2", "--T", "1.5")
    lines = out.splitlines()
    assert rc == 0 and lines[0] == "g00,g01,g10,g11" and len(lines) == 5
    rc, out, _ = run_cli("enumerate", "--group", "3", "--T", "3", "--out", str(tmp_path), "--binary")
    assert rc == 0 and int(out) == zenum.count_sl3z(3)
    assert zenum.read_cache(tmp_path / "enumerate_G3_T3.bin").count == int(out)
    rc, out, _ = run_cli("volume", "--T", "20", "--out", str(tmp_path))
    d = json.loads(out)
    assert rc == 0 and d["exact"] and d["lo"] == d["hi"]
