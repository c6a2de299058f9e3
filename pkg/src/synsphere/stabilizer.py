"""Hybrid synergistic controller on the n-sphere and its closed loop.

The closed-loop state is the concatenation (x, y) of the plant state and
the logic variable. During flows x follows -Pi(x) grad V^y(x) while y is
held; whenever the synergy gap reaches delta, y is reset to a minimizer of
V(x, .) over Y.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import potential as pot
from .errors import NotAJumpStart, NotInFlowSet
from .geometry import dot, geodesic_distance, path_length, project_tangent
from .hybrid import HybridArc, HybridSystem, SolverConfig, solve

DEFAULT_SOLVER = SolverConfig(step=1e-3, event_tol=1e-9, max_time=100.0, max_jumps=10)


def split(cfg: pot.PotentialConfig, s) -> tuple[np.ndarray, np.ndarray]:
    d = cfg.dim
    s = np.asarray(s)
    return s[..., :d], s[..., d:]


def controller_output(cfg: pot.PotentialConfig, x, y, margin_tol: float = 1e-12) -> np.ndarray:
    """omega = -grad V^y(x); only defined on the flow set."""
    mu = pot.synergy_gap(cfg, x, y)
    if mu > cfg.delta + margin_tol:
        raise NotInFlowSet(f"synergy gap {mu:.6g} exceeds delta = {cfg.delta}")
    return -pot.grad_potential(cfg, x, y)


def should_jump(cfg: pot.PotentialConfig, x, y) -> bool:
    return bool(pot.synergy_gap(cfg, x, y) >= cfg.delta)


def jump_update(cfg: pot.PotentialConfig, x, y) -> tuple[np.ndarray, np.ndarray]:
    return np.array(x, dtype=float), pot.argmin_over_y(cfg, x)


def closed_loop(cfg: pot.PotentialConfig) -> HybridSystem:
    d = cfg.dim
    r, k = cfg.r, cfg.k

    def flow(t, s):
        x, y = s[:d], s[d:]
        hr = 0.5 * np.dot(x - r, x - r)
        den = hr + 0.5 * k * np.dot(x - y, x - y)
        V = hr / den
        g = (k * V * y - (1.0 - V) * r) / den
        out = np.zeros_like(s)
        out[:d] = -(g - x * np.dot(x, g))
        return out

    g = cfg.gamma
    root = np.sqrt(1.0 - g * g)

    def margin(t, s):
        # scalar fast path of synergy_gap(cfg, x, y) - delta
        x, y = s[:d], s[d:]
        dr = x - r
        hr = 0.5 * float(dr @ dr)
        dy = x - y
        V = hr / (hr + 0.5 * k * float(dy @ dy))
        v = min(max(float(x @ r), -1.0), 1.0)
        if v >= -g - pot.BRANCH_TOL:
            vmin = hr / (hr + 2.0 * k)
        else:
            alpha = g * v - np.sqrt(1.0 - v * v) * root
            vmin = hr / (hr + k * (1.0 - alpha))
        return V - vmin - cfg.delta

    def jump(t, s):
        x = s[:d]
        return np.concatenate([x, pot.argmin_over_y(cfg, x)])

    def project(s):
        s = s.copy()
        s[:d] /= np.linalg.norm(s[:d])
        return s

    return HybridSystem(flow=flow, jump_margin=margin, jump_map=jump, project=project)


def simulate(cfg: pot.PotentialConfig, x0, y0, solver: SolverConfig | None = None) -> HybridArc:
    """One solution of the closed loop from (x0, y0)."""
    solver = solver or DEFAULT_SOLVER
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    pot.potential(cfg, x0, y0)  # validates y0 in Y and the domain
    arc = solve(closed_loop(cfg), np.concatenate([x0, y0]), solver)
    arc.meta.update({"system": "sphere", "potential": cfg.to_dict(), "dim": cfg.dim})
    return arc


def arc_columns(cfg: pot.PotentialConfig, arc: HybridArc) -> dict[str, np.ndarray]:
    """Derived per-sample quantities V and mu, in stacked order."""
    _, _, s = arc.stacked()
    x, y = split(cfg, s)
    return {
        "V": pot.potential(cfg, x, y, check=False),
        "mu": pot.synergy_gap(cfg, x, y, check=False),
    }


@dataclass
class DecayReport:
    lam_emp: float
    lam_theory: float
    bound_holds: bool
    distance_bound_holds: bool
    flow_monotone: bool
    jump_drops_ok: bool
    jumps: int
    min_jump_drop: float | None
    final_distance: float
    max_flow_increase: float

    @property
    def passed(self) -> bool:
        return self.bound_holds and self.distance_bound_holds and self.flow_monotone and self.jump_drops_ok

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def check_exponential_decay(arc: HybridArc, cfg: pot.PotentialConfig,
                            constants: pot.ExpConstants | None = None,
                            eps: float = 1e-6, flow_tol: float = 1e-9,
                            fit_floor: float = 1e-24) -> DecayReport:
    """Compare a closed-loop arc against the exponential certificate.

    The empirical rate is the least-squares slope of -log V over flow
    samples with V above ``fit_floor`` (after the last jump).
    """
    constants = constants or pot.exp_constants(cfg)
    lam = constants.lam
    t, j, s = arc.stacked()
    x, y = split(cfg, s)
    V = pot.potential(cfg, x, y, check=False)
    V0 = V[0]

    bound_ok = bool(np.all(V <= V0 * np.exp(-(lam - eps) * t) + 1e-15))
    dist = np.linalg.norm(x - cfg.r, axis=-1)
    gain = np.sqrt(constants.alpha_up / constants.alpha_low)
    dist_ok = bool(np.all(dist <= gain * np.exp(-lam * t / 2.0) * dist[0] * (1 + 1e-6) + 1e-15))

    max_inc = 0.0
    for p in arc.phases:
        xp, yp = split(cfg, p.x)
        Vp = pot.potential(cfg, xp, yp, check=False)
        if Vp.size > 1:
            max_inc = max(max_inc, float(np.max(np.diff(Vp))))
    drops = []
    for a, b in zip(arc.phases[:-1], arc.phases[1:]):
        xa, ya = split(cfg, a.x[-1])
        xb, yb = split(cfg, b.x[0])
        drops.append(float(pot.potential(cfg, xa, ya, check=False) - pot.potential(cfg, xb, yb, check=False)))

    last = arc.phases[-1]
    xl, yl = split(cfg, last.x)
    Vl = pot.potential(cfg, xl, yl, check=False)
    keep = Vl > fit_floor
    if np.count_nonzero(keep) >= 2 and np.ptp(last.t[keep]) > 0:
        slope = np.polyfit(last.t[keep], np.log(Vl[keep]), 1)[0]
        lam_emp = float(-slope)
    else:
        lam_emp = float("inf")  # V is identically ~0: already at the target

    return DecayReport(
        lam_emp=lam_emp,
        lam_theory=float(lam),
        bound_holds=bound_ok,
        distance_bound_holds=dist_ok,
        flow_monotone=max_inc <= flow_tol,
        jump_drops_ok=all(d >= cfg.delta - 1e-9 for d in drops),
        jumps=arc.jumps,
        min_jump_drop=min(drops) if drops else None,
        final_distance=float(geodesic_distance(xl[-1], cfg.r)),
        max_flow_increase=max_inc,
    )


@dataclass
class GeodesicReport:
    path_length: float
    geodesic_length: float
    difference: float
    max_plane_deviation: float
    final_distance: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_geodesic(arc: HybridArc, cfg: pot.PotentialConfig) -> GeodesicReport:
    """Length of the x-trajectory versus the minimal geodesic from x0 to r.

    The arc must start in the jump set. ``max_plane_deviation`` is the
    largest distance of a sample from the great circle through x0 and r
    (for x0 = -r, through x0 and the post-jump logic variable).
    """
    if arc.jumps < 1 or arc.phases[0].t.size != 1 or arc.phases[1].t[0] != arc.phases[0].t[0]:
        raise NotAJumpStart("the arc does not jump at its initial time")
    _, _, s = arc.stacked()
    x, _ = split(cfg, s)
    x0 = x[0]
    d = project_tangent(x0, cfg.r)
    if np.linalg.norm(d) < 1e-12:
        _, y1 = split(cfg, arc.phases[1].x[0])
        d = project_tangent(x0, y1)
    d = d / np.linalg.norm(d)
    in_plane = np.outer(x @ x0, x0) + np.outer(x @ d, d)
    dev = float(np.max(np.linalg.norm(x - in_plane, axis=-1)))
    L = path_length(x)
    G = float(geodesic_distance(x0, cfg.r))
    return GeodesicReport(L, G, L - G, dev, float(geodesic_distance(x[-1], cfg.r)))


def jump_set_sample(cfg: pot.PotentialConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw (x0, y0) with mu(x0, y0) >= delta by rejection."""
    while True:
        x = rng.standard_normal(cfg.dim)
        x /= np.linalg.norm(x)
        y = pot.sample_y(cfg, rng, 1, boundary_fraction=0.0)[0]
        if dot(cfg.r, x) < 1 - 1e-9 and pot.synergy_gap(cfg, x, y) > cfg.delta + 1e-6:
            return x, y
