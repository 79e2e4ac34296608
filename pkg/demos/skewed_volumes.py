"""Haar volumes of skewed norm balls in H and their T^6 asymptotics.

The exact volume is a sum over SL(2,Z) of stratum volumes; the leading
term is (pi/6) S4 T^6 times a prefactor.  The relative deviation is
tiny already at T = 100 and shrinks faster than 1/T^2.
"""
import numpy as np

from x23orbits import skewvol as sv, zenum, limitlaw, matcore as mc

I3 = np.eye(3)
rng = np.random.default_rng(1)
g1, g2 = mc.random_sl3(rng, 0.15), mc.random_sl3(rng, 0.15)

for label, (a, b) in {"e, e": (I3, I3), "random": (g1, g2)}.items():
    spec = sv.SkewedBallSpec(a, b, 100.0)
    S4 = zenum.skewed_series_estimate(4, spec.G1, spec.H1)
    print(f"{label}: S4 ~ {S4:.10f}")
    for T in (30.0, 100.0, 200.0):
        s = spec.with_T(T)
        dev = sv.precise_deviation(s, S4)
        print(f"   T={T:5g}  mu/T^6 = {sv.ball_volume(s, full=True).mid / T ** 6:.10f}"
              f"  rel dev {dev:+.3e}  dev*T^2 {dev * T * T:+.4f}")

# ratio to the identity ball versus the closed-form limit
a = limitlaw.alpha_ratio(g1, g2)
e = sv.ball_volume(sv.SkewedBallSpec(I3, I3, 1000.0))
v = sv.ball_volume(sv.SkewedBallSpec(g1, g2, 1000.0))
print(f"\nalpha bracket [{a.lo:.6f}, {a.hi:.6f}], volume ratio at T=1000 "
      f"[{v.lo / e.hi:.6f}, {v.hi / e.lo:.6f}]")

# restricted Haar sampler: t has density proportional to t^-4 on each stratum
hs = sv.h_ball_sampler(sv.SkewedBallSpec(I3, I3, 50.0), 0, 200_000)
M = hs.embed()
print("sampled norms <= T:", bool(np.all(np.sqrt(np.sum(M * M, axis=(1, 2))) <= 50.0 + 1e-9)),
      " median t:", round(float(np.median(hs.t)), 4))
