"""Fixed-step simulation of hybrid systems (C, F, D, G).

The flow set and jump set are described by one scalar ``jump_margin``:
states with margin <= margin_tol flow, states with margin > margin_tol jump.
Flows use classical RK4 (or a caller-supplied one-step map); a step that
ends inside the jump set is bisected to locate the crossing, the pre-jump
state is recorded, and the jump map is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidConfig, NoBracket, NonFiniteState, ZenoSuspected

FlowMap = Callable[[float, np.ndarray], np.ndarray]
Margin = Callable[[float, np.ndarray], float]
JumpMap = Callable[[float, np.ndarray], np.ndarray]
Stepper = Callable[[float, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class HybridSystem:
    """Data of a hybrid system.

    Attributes:
        flow: f(t, x), the flow map.
        jump_margin: m(t, x); the flow set is m <= margin_tol, the jump set
            m > margin_tol.
        jump_map: g(t, x), the post-jump state.
        project: optional map applied after every flow step (e.g.
            renormalization onto a manifold).
        step: optional one-step map (t, x, h) -> x(t + h) replacing RK4.
    """

    flow: FlowMap
    jump_margin: Margin
    jump_map: JumpMap
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None
    step: Optional[Stepper] = None

    def advance(self, t: float, x: np.ndarray, h: float) -> np.ndarray:
        if self.step is not None:
            xn = self.step(t, x, h)
        else:
            xn = rk4_step(self.flow, t, x, h)
        if self.project is not None:
            xn = self.project(xn)
        return xn


@dataclass(frozen=True)
class SolverConfig:
    step: float = 1e-3
    event_tol: float = 1e-9
    max_time: float = 10.0
    max_jumps: int = 100
    margin_tol: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidConfig(f"solver.step: must be positive, got {self.step}")
        if not 0 < self.event_tol < self.step:
            raise InvalidConfig("solver.event_tol: must lie in (0, step)")
        if not self.max_time >= 0:
            raise InvalidConfig("solver.max_time: must be non-negative")
        if int(self.max_jumps) < 1:
            raise InvalidConfig("solver.max_jumps: must be >= 1")
        if self.margin_tol < 0:
            raise InvalidConfig("solver.margin_tol: must be non-negative")

    def to_dict(self) -> dict:
        return {"step": self.step, "event_tol": self.event_tol, "max_time": self.max_time,
                "max_jumps": int(self.max_jumps), "margin_tol": self.margin_tol}


@dataclass
class Phase:
    """Samples recorded between two consecutive jumps."""

    j: int
    t: np.ndarray
    x: np.ndarray


@dataclass
class HybridArc:
    """A recorded hybrid solution: phases indexed by the jump counter j."""

    phases: list[Phase]
    meta: dict = field(default_factory=dict)

    @property
    def jumps(self) -> int:
        return len(self.phases) - 1

    @property
    def jump_times(self) -> list[float]:
        return [float(p.t[0]) for p in self.phases[1:]]

    @property
    def initial(self) -> np.ndarray:
        return self.phases[0].x[0]

    @property
    def final(self) -> np.ndarray:
        return self.phases[-1].x[-1]

    @property
    def final_time(self) -> float:
        return float(self.phases[-1].t[-1])

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(t, j, x) over all samples in hybrid-time order."""
        t = np.concatenate([p.t for p in self.phases])
        j = np.concatenate([np.full(p.t.size, p.j, dtype=int) for p in self.phases])
        x = np.concatenate([p.x for p in self.phases])
        return t, j, x

    def check_time_domain(self) -> None:
        """Raise AssertionError if the arc is not a valid hybrid time domain."""
        prev_t = None
        for i, p in enumerate(self.phases):
            assert p.j == i, "jump counter must increase by one per phase"
            assert p.t.size >= 1 and p.x.shape[0] == p.t.size
            assert np.all(np.diff(p.t) >= 0), "time must be non-decreasing"
            if prev_t is not None:
                assert p.t[0] == prev_t, "a phase must start where the previous ended"
            prev_t = p.t[-1]


def rk4_step(f: FlowMap, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def event_locate(margin: Margin, advance: Stepper, x_lo, x_hi, t_lo: float, t_hi: float,
                 tol: float, margin_tol: float = 0.0) -> tuple[float, np.ndarray]:
    """Bisect [t_lo, t_hi] for the first entry into the jump set.

    Every trial state is re-integrated from ``x_lo`` with one step of the
    trial length, so located states stay on the integrator's manifold.
    Returns the earliest bracketing time within ``tol`` and the state there,
    which lies in the jump set.
    """
    if not t_lo < t_hi:
        raise NoBracket("t_lo must be smaller than t_hi")
    if margin(t_lo, x_lo) > margin_tol or not margin(t_hi, x_hi) > margin_tol:
        raise NoBracket("jump margin does not cross into the jump set on [t_lo, t_hi]")
    lo, hi, x_star = t_lo, t_hi, np.asarray(x_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        x_mid = advance(t_lo, x_lo, mid - t_lo)
        if margin(mid, x_mid) > margin_tol:
            hi, x_star = mid, x_mid
        else:
            lo = mid
    return hi, x_star


def solve(sys: HybridSystem, x0, cfg: SolverConfig, t0: float = 0.0) -> HybridArc:
    """Simulate one solution from (t0, j=0) until max_time or max_jumps."""
    x = np.array(x0, dtype=float)
    _finite(x, t0)
    t = float(t0)
    t_end = t0 + cfg.max_time
    mtol = cfg.margin_tol
    phases: list[Phase] = []
    ts, xs = [t], [x]
    j = 0

    def close_phase():
        phases.append(Phase(j, np.array(ts), np.array(xs)))

    while True:
        if sys.jump_margin(t, x) > mtol:
            if j >= cfg.max_jumps:
                break
            close_phase()
            x = np.asarray(sys.jump_map(t, x), dtype=float)
            _finite(x, t)
            j += 1
            ts, xs = [t], [x]
            continue
        if t >= t_end - 1e-12 * max(1.0, abs(t_end)):
            break
        h = min(cfg.step, t_end - t)
        xn = sys.advance(t, x, h)
        tn = t + h if h < t_end - t else t_end
        _finite(xn, tn)
        if sys.jump_margin(tn, xn) > mtol:
            tn, xn = event_locate(sys.jump_margin, sys.advance, x, xn, t, tn,
                                  cfg.event_tol, mtol)
        t, x = tn, xn
        ts.append(t)
        xs.append(x)

    close_phase()
    arc = HybridArc(phases, meta={"solver": cfg.to_dict()})
    if j >= cfg.max_jumps and (t - t0) < 0.01 * cfg.max_time:
        raise ZenoSuspected(f"{j} jumps within t = {t - t0:.3g} s")
    return arc


def _finite(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(f"non-finite state at t = {t:.6g}")
