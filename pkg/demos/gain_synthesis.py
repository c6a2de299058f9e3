"""Designing the saturated position loop of a thrust-vectored vehicle.

The position error obeys a double integrator. An LQR gain from a scaled
state weight eps * Qhat0 is accepted only if two ellipsoid containments hold,
which together guarantee that the saturation never engages for initial
errors in {z^T H z <= 1}. The search picks the largest such eps.

    python3 demos/gain_synthesis.py
"""

import numpy as np

from synsphere import potential as pot
from synsphere import quad
from synsphere.riccati import care_solve, double_integrator, synthesize_gains

# Sanity check of the Riccati solver on a case with a known answer.
A, B = double_integrator(3)
P = care_solve(A, B, np.eye(6), np.eye(3))
print("P for Q = I, R = I:\n", np.round(P, 6))

H = np.diag([500.0] * 3 + [100.0] * 3)
Qhat0 = np.diag([10.0, 10.0, 100.0, 100.0, 100.0, 1.0])
Rhat = 10.0 * np.eye(3)
sat = quad.SatConfig(b=4.0, b_max=6.0)
cfg = pot.PotentialConfig(r=np.array([0.0, 0.0, -1.0]))

gains = synthesize_gains(H, Rhat, Qhat0, sat, kbar1=12.0, kp=1.0, cfg=cfg)
print(f"eps = {gains.eps:.6f}")
for k, v in sorted(gains.certificates.items()):
    print(f"  {k:<18s} {v}")
for w in gains.warnings:
    print("warning:", w)

A_cl = A + B @ gains.K
print("closed-loop poles:", np.round(np.linalg.eigvals(A_cl), 3))

# The svmax containment is what limits eps: larger weights give faster poles
# but a larger |K z| on the initial set.
rng = np.random.default_rng(0)
L = np.linalg.cholesky(H)
worst = 0.0
for _ in range(10_000):
    d = rng.standard_normal(6)
    z = np.linalg.solve(L.T, d / np.linalg.norm(d))
    worst = max(worst, np.linalg.norm(gains.K @ z))
print(f"largest |K z| on the boundary of the initial set: {worst:.3f} (b = {sat.b})")
