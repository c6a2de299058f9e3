"""Vectored-thrust vehicle tracking a circular reference.

Model: p' = v, v' = R r_body u + g, R' = R S(omega). The position error
(p_err, v_err) = (p - p_d, v - p_d') is driven by a saturated linear
feedback w; the thrust axis R r_body is steered toward the commanded
direction rho = (w - g + p_d'') / |w - g + p_d''| by the synergistic
controller acting on x = R^T rho, with target r_body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .errors import InvalidConfig, NotInFlowSet, ZeroCommandedThrust
from .geometry import rotation_exp, skew
from .hybrid import HybridArc, HybridSystem, SolverConfig, solve
from .riccati import PositionGains, psd_sqrt

THRUST_EPS = 1e-9


@dataclass(frozen=True)
class QuadParams:
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 9.81]))
    r_body: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))

    def __post_init__(self):
        g = np.asarray(self.gravity, dtype=float).reshape(3)
        rb = np.asarray(self.r_body, dtype=float).reshape(3)
        if abs(np.linalg.norm(rb) - 1.0) > 1e-9:
            raise InvalidConfig("quad.r_body: must be a unit vector")
        object.__setattr__(self, "gravity", g)
        object.__setattr__(self, "r_body", rb / np.linalg.norm(rb))

    @property
    def g_norm(self) -> float:
        return float(np.linalg.norm(self.gravity))

    def to_dict(self) -> dict:
        return {"gravity": self.gravity.tolist(), "r_body": self.r_body.tolist()}


@dataclass(frozen=True)
class CircleReference:
    """p_d(t) = radius * (cos 2 pi f t, sin 2 pi f t, 0)."""

    freq: float = 0.2
    radius: float = 1.0

    def __post_init__(self):
        if not self.freq >= 0:
            raise InvalidConfig("quad.freq: must be non-negative")
        if self.radius != 1.0:
            raise InvalidConfig("quad.radius: only the unit circle is supported")

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.freq

    @property
    def M2(self) -> float:
        return self.radius * self.omega**2

    @property
    def M3(self) -> float:
        return self.radius * self.omega**3

    def to_dict(self) -> dict:
        return {"freq": self.freq, "radius": self.radius}


@dataclass(frozen=True)
class SatConfig:
    b: float = 4.0
    b_max: float = 6.0

    def __post_init__(self):
        if not 0 < self.b < self.b_max:
            raise InvalidConfig(f"quad.sat: need 0 < b < b_max, got b={self.b}, b_max={self.b_max}")

    def to_dict(self) -> dict:
        return {"b": self.b, "b_max": self.b_max}


def validate_setup(params: QuadParams, ref: CircleReference, sat: SatConfig) -> None:
    """Check M2 < |g| and b_max < |g| - M2."""
    if not ref.M2 < params.g_norm:
        raise InvalidConfig(f"quad.freq: (2 pi f)^2 = {ref.M2:.4g} must be below |g| = {params.g_norm:.4g}")
    if not sat.b_max < params.g_norm - ref.M2:
        raise InvalidConfig(
            f"quad.sat.b_max: must be below |g| - (2 pi f)^2 = {params.g_norm - ref.M2:.4g}")


@dataclass
class QuadFullState:
    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    y: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, np.asarray(self.R).reshape(9), self.y]).astype(float)

    @classmethod
    def unpack(cls, s) -> "QuadFullState":
        s = np.asarray(s, dtype=float)
        return cls(s[0:3], s[3:6], s[6:15].reshape(3, 3), s[15:18])


def reference_eval(ref: CircleReference, t: float):
    """(p_d, p_d', p_d'', p_d''') at time t."""
    w = ref.omega
    c, s = np.cos(w * t), np.sin(w * t)
    a = ref.radius
    return (a * np.array([c, s, 0.0]),
            a * w * np.array([-s, c, 0.0]),
            a * w**2 * np.array([-c, -s, 0.0]),
            a * w**3 * np.array([s, -c, 0.0]))


def _sat_scale(sat: SatConfig, n: float) -> tuple[float, float]:
    # s(n) and s'(n) of the radial profile
    span = sat.b_max - sat.b
    th = np.tanh((n - sat.b) / span)
    return sat.b + span * th, 1.0 - th * th


def saturation(sat: SatConfig, u) -> np.ndarray:
    """Radial C^1 saturation: identity on the b-ball, norm below b_max."""
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if n <= sat.b:
        return u.copy()
    s, _ = _sat_scale(sat, n)
    return u * (s / n)


def saturation_jacobian(sat: SatConfig, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if n <= sat.b:
        return np.eye(u.size)
    s, ds = _sat_scale(sat, n)
    e = u / n
    return (s / n) * np.eye(u.size) + (ds - s / n) * np.outer(e, e)


def position_feedback(gains: PositionGains, sat: SatConfig, p_err, v_err) -> np.ndarray:
    return saturation(sat, gains.K @ np.concatenate([p_err, v_err]))


def _thrust_vector(params: QuadParams, w, acc_d) -> np.ndarray:
    return np.asarray(w, dtype=float) - params.gravity + np.asarray(acc_d, dtype=float)


def commanded_thrust_dir(params: QuadParams, w, acc_d) -> np.ndarray:
    u = _thrust_vector(params, w, acc_d)
    n = np.linalg.norm(u)
    if n < THRUST_EPS:
        raise ZeroCommandedThrust("w - g + p_d'' vanishes; the thrust direction is undefined")
    return u / n


def thrust_magnitude(params: QuadParams, R, w, acc_d) -> float:
    """Least-squares thrust: r_body^T R^T (w - g + p_d'')."""
    return float(params.r_body @ (np.asarray(R).T @ _thrust_vector(params, w, acc_d)))


def rho_jacobian(params: QuadParams, gains: PositionGains, sat: SatConfig, z) -> np.ndarray:
    """Derivative of rho with respect to z = (p_d'', p_err, v_err), 3x9."""
    z = np.asarray(z, dtype=float)
    acc_d, e = z[:3], z[3:]
    Ke = gains.K @ e
    u = _thrust_vector(params, saturation(sat, Ke), acc_d)
    n = np.linalg.norm(u)
    if n < THRUST_EPS:
        raise ZeroCommandedThrust("w - g + p_d'' vanishes; the thrust direction is undefined")
    rho = u / n
    Pi = (np.eye(3) - np.outer(rho, rho)) / n
    return Pi @ np.hstack([np.eye(3), saturation_jacobian(sat, Ke) @ gains.K])


def nu_gain(gains: PositionGains, cfg: pot.PotentialConfig) -> float:
    """(2 / sqrt(alpha_low)) * sigma_max([0 I] P^1/2), the factor of nu_star."""
    lo, hi = pot.denominator_bounds(cfg.k, cfg.gamma)
    alpha_low = 1.0 / (2.0 * hi)
    n = gains.P.shape[0] // 2
    sv = np.linalg.norm(psd_sqrt(gains.P)[n:, :], 2)
    return 2.0 / np.sqrt(alpha_low) * float(sv)


def nu_star(gains: PositionGains, cfg: pot.PotentialConfig, w, acc_d,
            params: QuadParams | None = None) -> float:
    params = params or QuadParams()
    return nu_gain(gains, cfg) * float(np.linalg.norm(_thrust_vector(params, w, acc_d)))


class _Controller:
    """Precomputed pieces of the closed loop, shared by the flow and jump maps."""

    def __init__(self, params, gains, cfg, sat, k1, kp, ref):
        self.params, self.gains, self.cfg, self.sat = params, gains, cfg, sat
        self.k1, self.kp, self.ref = float(k1), float(kp), ref
        self.nu = nu_gain(gains, cfg)
        self.g = params.gravity
        self.rb = params.r_body

    def signals(self, t, p, v, R):
        pd, vd, ad, jd = reference_eval(self.ref, t)
        e = np.concatenate([p - pd, v - vd])
        Ke = self.gains.K @ e
        w = saturation(self.sat, Ke)
        u = w - self.g + ad
        n = np.linalg.norm(u)
        if n < THRUST_EPS:
            raise ZeroCommandedThrust(f"commanded thrust vanishes at t = {t:.6g}")
        rho = u / n
        return pd, vd, ad, jd, e, Ke, u, n, rho

    def rates(self, t, p, v, R, y):
        """(p', v', omega) on the flow set."""
        _, _, ad, jd, e, Ke, u, n, rho = self.signals(t, p, v, R)
        x = R.T @ rho
        ku = float(self.rb @ (R.T @ u))
        acc = R @ self.rb * ku + self.g
        v_err_dot = acc - ad
        Pi = (np.eye(3) - np.outer(rho, rho)) / n
        Dp = self.gains.K[:, :3]
        Dv = self.gains.K[:, 3:]
        J = saturation_jacobian(self.sat, Ke)
        # D rho . F_p with F_p = (jerk, v_err, v_err')
        rho_dot = Pi @ (jd + J @ (Dp @ e[3:] + Dv @ v_err_dot))
        gain = self.k1 + self.kp * self.nu * n
        grad = pot.grad_potential(self.cfg, x, y, check=False)
        omega = skew(x) @ (R.T @ rho_dot + gain * grad)
        return v, acc, omega

    def x_of(self, t, p, v, R):
        rho = self.signals(t, p, v, R)[-1]
        return R.T @ rho


def omega_command(params: QuadParams, gains: PositionGains, cfg: pot.PotentialConfig,
                  sat: SatConfig, k1: float, kp: float, t: float, state: QuadFullState,
                  ref: CircleReference | None = None, margin_tol: float = 1e-12) -> np.ndarray:
    """Body angular rate steering R r_body toward rho along the synergistic flow.

    Raises:
        NotInFlowSet: the synergy gap at (R^T rho, y) exceeds delta.
    """
    ctl = _Controller(params, gains, cfg, sat, k1, kp, ref or CircleReference())
    R = np.asarray(state.R, dtype=float)
    x = ctl.x_of(t, state.p, state.v, R)
    mu = pot.synergy_gap(cfg, x, state.y)
    if mu > cfg.delta + margin_tol:
        raise NotInFlowSet(f"synergy gap {mu:.6g} exceeds delta = {cfg.delta}")
    return ctl.rates(t, np.asarray(state.p, float), np.asarray(state.v, float), R, np.asarray(state.y, float))[2]


def _cf4_step(ctl: _Controller, t, s, h):
    """RK4 for (p, v) combined with a commutator-free 4th-order Lie step for R."""
    p0, v0, R0, y = s[0:3], s[3:6], s[6:15].reshape(3, 3), s[15:18]
    dp1, dv1, w1 = ctl.rates(t, p0, v0, R0, y)
    R2 = R0 @ rotation_exp(0.5 * h * w1)
    dp2, dv2, w2 = ctl.rates(t + 0.5 * h, p0 + 0.5 * h * dp1, v0 + 0.5 * h * dv1, R2, y)
    R3 = R0 @ rotation_exp(0.5 * h * w2)
    dp3, dv3, w3 = ctl.rates(t + 0.5 * h, p0 + 0.5 * h * dp2, v0 + 0.5 * h * dv2, R3, y)
    R4 = R2 @ rotation_exp(0.5 * h * (2.0 * w3 - w1))
    dp4, dv4, w4 = ctl.rates(t + h, p0 + h * dp3, v0 + h * dv3, R4, y)
    p1 = p0 + h / 6.0 * (dp1 + 2 * dp2 + 2 * dp3 + dp4)
    v1 = v0 + h / 6.0 * (dv1 + 2 * dv2 + 2 * dv3 + dv4)
    c1 = h / 12.0 * (3 * w1 + 2 * w2 + 2 * w3 - w4)
    c2 = h / 12.0 * (-w1 + 2 * w2 + 2 * w3 + 3 * w4)
    R1 = R0 @ rotation_exp(c1) @ rotation_exp(c2)
    return np.concatenate([p1, v1, R1.reshape(9), y])


def _orthonormalize(s):
    s = s.copy()
    U, _, Vt = np.linalg.svd(s[6:15].reshape(3, 3))
    s[6:15] = (U @ Vt).reshape(9)
    return s


def tracking_system(params, gains, cfg, sat, k1, kp, ref) -> HybridSystem:
    ctl = _Controller(params, gains, cfg, sat, k1, kp, ref)

    def unpack(s):
        return s[0:3], s[3:6], s[6:15].reshape(3, 3), s[15:18]

    def flow(t, s):
        p, v, R, y = unpack(s)
        dp, dv, w = ctl.rates(t, p, v, R, y)
        return np.concatenate([dp, dv, (R @ skew(w)).reshape(9), np.zeros(3)])

    def margin(t, s):
        p, v, R, y = unpack(s)
        x = ctl.x_of(t, p, v, R)
        return float(pot.synergy_gap(cfg, x, y, check=False)) - cfg.delta

    def jump(t, s):
        p, v, R, _ = unpack(s)
        out = s.copy()
        out[15:18] = pot.argmin_over_y(cfg, ctl.x_of(t, p, v, R))
        return out

    return HybridSystem(flow=flow, jump_margin=margin, jump_map=jump,
                        project=_orthonormalize, step=lambda t, s, h: _cf4_step(ctl, t, s, h))


def tracking_config(params, ref, sat, cfg, k1, kp, gains) -> dict:
    return {
        "params": params.to_dict(), "reference": ref.to_dict(), "sat": sat.to_dict(),
        "potential": cfg.to_dict(), "k1": float(k1), "kp": float(kp), "gains": gains.to_dict(),
    }


def simulate_tracking(params: QuadParams, gains: PositionGains, cfg: pot.PotentialConfig,
                      sat: SatConfig, k1: float, kp: float, ref: CircleReference,
                      initial: QuadFullState, solver: SolverConfig | None = None) -> HybridArc:
    """Simulate the hybrid tracking loop; the state is (p, v, R row-major, y)."""
    validate_setup(params, ref, sat)
    if not k1 > 0 or not kp > 0:
        raise InvalidConfig("quad.k1 and quad.kp must be positive")
    if not np.allclose(cfg.r, params.r_body, atol=1e-12):
        raise InvalidConfig("potential.r: must equal quad.r_body for the tracking loop")
    solver = solver or SolverConfig(step=1e-3, max_time=10.0, max_jumps=20)
    pot.potential(cfg, -cfg.r, initial.y)  # raises if y is outside Y
    arc = solve(tracking_system(params, gains, cfg, sat, k1, kp, ref), initial.pack(), solver)
    arc.meta.update({"system": "quad", "tracking": tracking_config(params, ref, sat, cfg, k1, kp, gains)})
    return arc


def scenario_initial(ref: CircleReference) -> QuadFullState:
    """Upside-down start on the reference: p = p_d(0), v = p_d'(0), R = diag(1, -1, -1), y = (0, 0, 1)."""
    pd, vd, _, _ = reference_eval(ref, 0.0)
    return QuadFullState(pd, vd, np.diag([1.0, -1.0, -1.0]), np.array([0.0, 0.0, 1.0]))


def tracking_columns(arc: HybridArc, gains: PositionGains, sat: SatConfig,
                     params: QuadParams, ref: CircleReference, cfg: pot.PotentialConfig) -> dict:
    """Per-sample derived quantities in stacked order.

    Keys: V1 (attitude potential), mu, Kz (|K z|), ku (thrust), Vp
    (z^T P z), W1 (sqrt(Vp) + kbar1 sqrt(V1)), p_err (|p - p_d|),
    v_err (|v - p_d'|).
    """
    t, _, S = arc.stacked()
    ctl = _Controller(params, gains, cfg, sat, 1.0, 1.0, ref)
    cols = {k: np.empty(t.size) for k in ("V1", "mu", "Kz", "ku", "Vp", "W1", "p_err", "v_err")}
    kbar1 = gains.kbar1 if np.isfinite(gains.kbar1) else 1.0
    for i, (ti, s) in enumerate(zip(t, S)):
        p, v, R, y = s[0:3], s[3:6], s[6:15].reshape(3, 3), s[15:18]
        _, _, _, _, e, Ke, u, _, rho = ctl.signals(ti, p, v, R)
        x = R.T @ rho
        V1 = float(pot.potential(cfg, x, y, check=False))
        Vp = float(e @ gains.P @ e)
        cols["V1"][i] = V1
        cols["mu"][i] = V1 - float(pot.min_over_y(cfg, x))
        cols["Kz"][i] = np.linalg.norm(Ke)
        cols["ku"][i] = float(params.r_body @ (R.T @ u))
        cols["Vp"][i] = Vp
        cols["W1"][i] = np.sqrt(Vp) + kbar1 * np.sqrt(V1)
        cols["p_err"][i] = np.linalg.norm(e[:3])
        cols["v_err"][i] = np.linalg.norm(e[3:])
    return cols


def setup_from_meta(meta: dict):
    """Rebuild (params, ref, sat, cfg, k1, kp) from an arc's metadata."""
    tr = meta["tracking"]
    params = QuadParams(**{k: np.asarray(v) for k, v in tr["params"].items()})
    ref = CircleReference(**tr["reference"])
    sat = SatConfig(**tr["sat"])
    cfg = pot.PotentialConfig.from_dict(tr["potential"])
    return params, ref, sat, cfg, tr["k1"], tr["kp"]


@dataclass
class TrackingReport:
    max_Kz: float
    saturation_inactive: bool
    W1_flow_max_increase: float
    W1_jump_drops: list
    decay_rate: float
    jumps: int
    jump_times: list
    final_p_err: float
    final_v_err: float
    final_V1: float
    min_thrust_after: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def tracking_metrics(arc: HybridArc, gains: PositionGains, sat: SatConfig,
                     transient: float = 1.0) -> TrackingReport:
    """Summary of a tracking run.

    ``decay_rate`` is the least-squares slope of -log W1 over the last
    phase; ``min_thrust_after`` is the smallest thrust after ``transient``
    seconds.
    """
    params, ref, _, cfg, _, _ = setup_from_meta(arc.meta)
    cols = tracking_columns(arc, gains, sat, params, ref, cfg)
    t, j, _ = arc.stacked()
    W1 = cols["W1"]
    inc = 0.0
    drops = []
    start = 0
    for p in arc.phases:
        stop = start + p.t.size
        if p.t.size > 1:
            inc = max(inc, float(np.max(np.diff(W1[start:stop]))))
        if start > 0:
            drops.append(float(W1[start - 1] - W1[start]))
        start = stop
    last = j == arc.jumps
    keep = last & (W1 > 1e-12)
    rate = float(-np.polyfit(t[keep], np.log(W1[keep]), 1)[0]) if np.count_nonzero(keep) > 2 else float("nan")
    after = t >= min(transient, t[-1])
    return TrackingReport(
        max_Kz=float(np.max(cols["Kz"])),
        saturation_inactive=bool(np.max(cols["Kz"]) <= sat.b),
        W1_flow_max_increase=inc,
        W1_jump_drops=drops,
        decay_rate=rate,
        jumps=arc.jumps,
        jump_times=arc.jump_times,
        final_p_err=float(cols["p_err"][-1]),
        final_v_err=float(cols["v_err"][-1]),
        final_V1=float(cols["V1"][-1]),
        min_thrust_after=float(np.min(cols["ku"][after])),
    )
