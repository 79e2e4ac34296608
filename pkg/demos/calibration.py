"""Calibration constants: SL(2,R) ball volumes, counting, m(G_T)."""
import math

from x23orbits import haarcal, zenum

for tau in (10, 50, 100, 200):
    v = haarcal.vol_b_tau(tau).value
    print(f"tau={tau:4d}  vol/tau^2 = {v / tau ** 2:.6f}  N/tau^2 = {zenum.count_n_tau(tau) / tau ** 2:.4f}")
print("2 pi^2 =", round(2 * math.pi ** 2, 6))

q = haarcal.integral_norm_minus4()
print(f"int ||g||^-4 = {q.value:.12f}  (pi^2/2 = {math.pi ** 2 / 2:.12f})")
print(f"covolume estimate {haarcal.covolume_estimate():.4f}  (pi^2/3 = {math.pi ** 2 / 3:.4f})")

# the finite-T correction is O(T^-2): clearly visible at T=10, a fraction
# of a standard error by T=50
print(f"pi^4/3 = {math.pi ** 4 / 3:.4f}")
for T in (10.0, 20.0, 50.0, 200.0):
    r = haarcal.m_gt_constant(T=T, n=2_000_000)
    print(f"   T={T:5g}  m(G_T)/T^6 = {r.value:.4f} +- {r.sigma:.4f}")
