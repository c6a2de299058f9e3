"""What the synergistic potential looks like, in numbers.

Prints the quantities that size the controller: the largest admissible
hysteresis gap, the denominator range, the quadratic sandwich constants and
the certified decay rate, then checks them against random samples.

    python3 demos/potential_landscape.py
"""

import numpy as np

from synsphere import potential as pot

cfg = pot.PotentialConfig(r=np.array([0.0, 0.0, 1.0]), k=1.0, gamma=-0.5, delta=0.1)

print(f"largest hysteresis gap: {pot.max_hysteresis_gap(cfg.k, cfg.gamma):.4f}")
lo, hi = pot.denominator_bounds(cfg.k, cfg.gamma)
print(f"denominator range: [{lo:.4f}, {hi:.4f}]")

c = pot.exp_constants(cfg)
print(f"alpha_low = {c.alpha_low:.4f}, alpha_up = {c.alpha_up:.4f}")
print(f"max V on the flow set: {c.v_flow_max:.4f} (analytic bound {c.v_flow_bound:.4f})")
print(f"certified decay rate: {c.lam:.4f}")

# Sample the sandwich alpha_low |x - r|^2 <= V <= alpha_up |x - r|^2.
rng = np.random.default_rng(1)
X, Y = pot.sample_pairs(cfg, rng, 200_000)
V = pot.potential(cfg, X, Y, check=False)
d2 = np.sum((X - cfg.r) ** 2, axis=1)
print(f"V / |x - r|^2 ranges over [{np.min(V / d2):.4f}, {np.max(V / d2):.4f}]")

# At the bad critical points x = y the gap is at least the largest hysteresis gap.
grid = pot.cap_grid(cfg, 5000, boundary=500)
mu = pot.synergy_gap(cfg, grid, grid)
print(f"min gap over x = y: {mu.min():.4f}")

# The minimizing y either sits opposite x or on the rim of the cap.
for x in (np.array([0.0, 0.6, 0.8]), np.array([0.8, 0.0, -0.6])):
    y = pot.argmin_over_y(cfg, x)
    print(f"x = {x} -> best y = {np.round(y, 4)}, r^T y = {cfg.r @ y:.4f}")

report = pot.verify_potential_properties(cfg, sample_count=20_000, seed=0)
for row in report.results:
    print(f"  {row.name:<28s} {'ok' if row.passed else 'FAILED'}")
