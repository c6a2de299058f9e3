"""Centrally synergistic potential on the n-sphere.

The family is

    V(x, y) = h_r(x) / (h_r(x) + k h_y(x)),    h_a(x) = 1 - a^T x,

indexed by a logic variable y restricted to the cap Y = {y : r^T y <= gamma}.
All functions broadcast over leading axes: ``x`` and ``y`` may be single
points of shape (n+1,) or stacks of shape (m, n+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, LogicVarOutsideY, OutsideDomain
from .geometry import dot, orthonormal_complement, project_tangent, sphere_grid, unit

Y_TOL = 1e-12
BRANCH_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PotentialConfig:
    """Reference point, sharpness gain, cap parameter and hysteresis gap."""

    r: np.ndarray
    k: float = 1.0
    gamma: float = -0.5
    delta: float = 0.1

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).copy()
        if r.ndim != 1 or r.size < 2:
            raise InvalidConfig("r: must be a vector of length >= 2")
        if abs(np.linalg.norm(r) - 1.0) > 1e-9:
            raise InvalidConfig(f"r: must be unit norm, got |r| = {np.linalg.norm(r):.6g}")
        r = r / np.linalg.norm(r)
        r.flags.writeable = False
        object.__setattr__(self, "r", r)
        if not self.k > 0:
            raise InvalidConfig(f"k: must be positive, got {self.k}")
        if not -1.0 < self.gamma < 1.0:
            raise InvalidConfig(f"gamma: must lie in (-1, 1), got {self.gamma}")
        bound = max_hysteresis_gap(self.k, self.gamma)
        if not 0.0 < self.delta < bound:
            raise InvalidConfig(
                f"delta: must lie in (0, (1+gamma)/(2/k+1+gamma)) = (0, {bound:.6g}), "
                f"got {self.delta}"
            )

    def __eq__(self, other):
        if not isinstance(other, PotentialConfig):
            return NotImplemented
        return (np.array_equal(self.r, other.r) and self.k == other.k
                and self.gamma == other.gamma and self.delta == other.delta)

    def __hash__(self):
        return hash((self.r.tobytes(), self.k, self.gamma, self.delta))

    @property
    def dim(self) -> int:
        return self.r.size

    def to_dict(self) -> dict:
        return {"r": self.r.tolist(), "k": self.k, "gamma": self.gamma, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialConfig":
        return cls(r=np.asarray(d["r"], dtype=float), k=float(d.get("k", 1.0)),
                   gamma=float(d.get("gamma", -0.5)), delta=float(d.get("delta", 0.1)))


def max_hysteresis_gap(k: float, gamma: float) -> float:
    """Minimum synergy gap over the undesired critical set, (1+g)/(2/k+1+g)."""
    return (1.0 + gamma) / (2.0 / k + 1.0 + gamma)


def denominator_bounds(k: float, gamma: float) -> tuple[float, float]:
    """Range of h_r(x) + k h_y(x) over the sphere times Y."""
    s = np.sqrt(1.0 + 2.0 * k * gamma + k * k)
    return 1.0 + k - s, 1.0 + k + s


def height(r, x):
    """h_r(x) = 1 - r^T x, evaluated as |x - r|^2 / 2 (equal on the sphere)."""
    d = np.asarray(x, dtype=float) - np.asarray(r, dtype=float)
    return 0.5 * dot(d, d)


def _check(cfg: PotentialConfig, x, y):
    if np.any((height(cfg.r, x) == 0.0) & (height(cfg.r, y) == 0.0)):
        raise OutsideDomain("V is undefined at (x, y) = (r, r)")
    ry = dot(cfg.r, y)
    if np.any(ry > cfg.gamma + Y_TOL):
        raise LogicVarOutsideY(f"r^T y = {np.max(ry):.6g} exceeds gamma = {cfg.gamma}")


def denominator(cfg: PotentialConfig, x, y):
    return height(cfg.r, x) + cfg.k * height(y, x)


def potential(cfg: PotentialConfig, x, y, check: bool = True):
    """Evaluate V(x, y) in [0, 1]."""
    if check:
        _check(cfg, x, y)
    hr = height(cfg.r, x)
    return hr / (hr + cfg.k * height(y, x))


def grad_potential(cfg: PotentialConfig, x, y, check: bool = True):
    """Ambient gradient of x -> V(x, y), (k V y - (1 - V) r) / denom."""
    if check:
        _check(cfg, x, y)
    y = np.asarray(y, dtype=float)
    den = denominator(cfg, x, y)
    V = height(cfg.r, x) / den
    V_ = np.asarray(V)[..., None]
    return (cfg.k * V_ * y - (1.0 - V_) * cfg.r) / np.asarray(den)[..., None]


def tangent_grad_norm_sq(cfg: PotentialConfig, x, y, check: bool = True):
    """Closed form of |Pi(x) grad V^y(x)|^2."""
    if check:
        _check(cfg, x, y)
    den = denominator(cfg, x, y)
    V = height(cfg.r, x) / den
    return 2.0 * cfg.k * V * (1.0 - V) * (1.0 - dot(cfg.r, y)) / den**2


def alpha_coef(gamma: float, v):
    v = np.clip(v, -1.0, 1.0)
    return gamma * v - np.sqrt((1.0 - v * v) * (1.0 - gamma * gamma))


def sigma_coef(gamma: float, v):
    v = np.clip(v, -1.0, 1.0)
    return gamma * np.sqrt(1.0 - v * v) + v * np.sqrt(1.0 - gamma * gamma)


def min_over_y(cfg: PotentialConfig, x):
    """min over y in Y of V(x, y), closed form."""
    x = np.asarray(x, dtype=float)
    v = np.clip(dot(cfg.r, x), -1.0, 1.0)
    h = height(cfg.r, x)
    far = 1.0 - alpha_coef(cfg.gamma, v)
    out = np.where(v >= -cfg.gamma - BRANCH_TOL, h / (h + 2.0 * cfg.k), h / (h + cfg.k * far))
    return float(out) if out.ndim == 0 else out


def tie_break_point(cfg: PotentialConfig) -> np.ndarray:
    """Fixed minimizer used where argmin is set-valued (x = r or x = -r).

    r rotated by arccos(gamma) toward the first canonical axis that is well
    separated from r, which lands on the boundary r^T y = gamma.
    """
    r = cfg.r
    for i in range(r.size):
        e = np.zeros(r.size)
        e[i] = 1.0
        u = project_tangent(r, e)
        if np.linalg.norm(u) > 0.5:
            break
    u = u / np.linalg.norm(u)
    return cfg.gamma * r + np.sqrt(1.0 - cfg.gamma**2) * u


def argmin_over_y(cfg: PotentialConfig, x) -> np.ndarray:
    """A minimizer of y -> V(x, y) over Y, chosen deterministically.

    Branches: x = +/- r returns :func:`tie_break_point`; r^T x >= -gamma
    returns -x; otherwise the minimizer lies on the boundary of Y in the plane
    spanned by x and r.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    r = cfg.r
    v = np.clip(X @ r, -1.0, 1.0)
    pr = r - X * v[:, None]
    npr = np.linalg.norm(pr, axis=-1)
    degenerate = npr < 1e-12
    inner = v >= -cfg.gamma - BRANCH_TOL

    safe = np.where(degenerate, 1.0, npr)
    y_c = sigma_coef(cfg.gamma, v)[:, None] * pr / safe[:, None] + alpha_coef(cfg.gamma, v)[:, None] * X
    out = np.where(inner[:, None], -X, y_c)
    if np.any(degenerate):
        out[degenerate] = tie_break_point(cfg)
    # renormalize: sigma^2 + alpha^2 = 1 only up to rounding
    out = out / np.linalg.norm(out, axis=-1, keepdims=True)
    return out[0] if single else out


def synergy_gap(cfg: PotentialConfig, x, y, check: bool = True):
    """mu(x, y) = V(x, y) - min over Y of V(x, .)."""
    return potential(cfg, x, y, check=check) - min_over_y(cfg, x)


def max_over_y(cfg: PotentialConfig, x):
    """max over y in Y of V(x, y): y = x inside Y, else the nearest point of its boundary."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    r = cfg.r
    v = X @ r
    perp = X - v[:, None] * r
    n = np.linalg.norm(perp, axis=-1)
    fallback = unit(tie_break_point(cfg) - cfg.gamma * r)
    perp = np.where((n < 1e-12)[:, None], fallback, perp / np.where(n < 1e-12, 1.0, n)[:, None])
    yb = cfg.gamma * r + np.sqrt(1.0 - cfg.gamma**2) * perp
    out = np.where(v <= cfg.gamma, 1.0, potential(cfg, X, yb, check=False))
    return out[0] if x.ndim == 1 else out


@dataclass(frozen=True)
class ExpConstants:
    """Constants of the exponential-stability certificate.

    ``alpha_low``/``alpha_up`` sandwich V between multiples of |x - r|^2;
    ``lam`` bounds the decay rate on the flow set and is computed from the
    numerically estimated ``v_flow_max``. ``v_flow_bound`` is the analytic
    upper bound delta + 2/(2 + k(1+gamma)) on the same maximum and
    ``lam_from_bound`` the rate obtained when it is used instead.
    """

    alpha_low: float
    alpha_up: float
    lam: float
    v_flow_max: float
    v_flow_bound: float
    lam_from_bound: float

    def __post_init__(self):
        if not self.alpha_low <= self.alpha_up:
            raise ValueError("alpha_low must not exceed alpha_up")
        if not self.v_flow_max < 1.0:
            raise ValueError("v_flow_max must be < 1")


def decay_rate(cfg: PotentialConfig, v_flow_max: float) -> float:
    """lambda = 2k(1 - V*)(1 - gamma) / (1 + k + sqrt(1 + 2k gamma + k^2))^2."""
    _, hi = denominator_bounds(cfg.k, cfg.gamma)
    return 2.0 * cfg.k * (1.0 - v_flow_max) * (1.0 - cfg.gamma) / hi**2


def _flow_value(cfg: PotentialConfig, X):
    # largest V over {y in Y : mu(x, y) <= delta} for each row of X; Y is
    # connected so V(x, .) takes every value between its min and max on Y
    return np.minimum(min_over_y(cfg, X) + cfg.delta, max_over_y(cfg, X))


def flow_set_vmax(cfg: PotentialConfig, grid_points: int | None = None,
                  refine_steps: int = 50) -> float:
    """Numerical maximum of V over the flow set {mu <= delta}.

    Grid search over x (Fibonacci lattice of 20000 points on S^2, otherwise
    10 (n+1)^2 Halton points) with the inner maximization over y done
    exactly, followed by ``refine_steps`` iterations of projected ascent with
    finite-difference gradients and step halving from the best grid point.
    """
    dim = cfg.dim
    if grid_points is None:
        grid_points = 20000 if dim == 3 else 10 * dim * dim
    X = sphere_grid(dim, grid_points)
    vals = _flow_value(cfg, X)
    best = int(np.argmax(vals))
    x, fx = X[best].copy(), float(vals[best])

    step = 1e-2
    fd = 1e-7
    for _ in range(refine_steps):
        basis = _tangent_basis(x)
        g = np.zeros(dim)
        for e in basis:
            fp = float(_flow_value(cfg, unit(x + fd * e)[None])[0])
            fm = float(_flow_value(cfg, unit(x - fd * e)[None])[0])
            g += (fp - fm) / (2 * fd) * e
        gn = np.linalg.norm(g)
        if gn == 0.0:
            break
        cand = unit(x + step * g / gn)
        fc = float(_flow_value(cfg, cand[None])[0])
        if fc > fx:
            x, fx = cand, fc
        else:
            step *= 0.5
    return fx


def _tangent_basis(x) -> np.ndarray:
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(x.size)]))
    return q[:, 1:x.size].T


def exp_constants(cfg: PotentialConfig, grid_points: int | None = None) -> ExpConstants:
    lo, hi = denominator_bounds(cfg.k, cfg.gamma)
    vmax = flow_set_vmax(cfg, grid_points)
    vbound = cfg.delta + 2.0 / (2.0 + cfg.k * (1.0 + cfg.gamma))
    return ExpConstants(
        alpha_low=1.0 / (2.0 * hi),
        alpha_up=1.0 / (2.0 * lo),
        lam=decay_rate(cfg, vmax),
        v_flow_max=vmax,
        v_flow_bound=vbound,
        lam_from_bound=decay_rate(cfg, min(vbound, 1.0)),
    )


# --- property suite -------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class PropertyReport:
    config: dict
    sample_count: int
    results: list[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.results)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "sample_count": self.sample_count,
            "passed": self.passed,
            "results": [{"name": p.name, "passed": p.passed, "detail": p.detail}
                        for p in self.results],
        }


def sample_y(cfg: PotentialConfig, rng: np.random.Generator, count: int,
             boundary_fraction: float = 0.1) -> np.ndarray:
    """Random points of Y; r^T y uniform on [-1, gamma], a share pinned to the boundary.

    On S^2 this is the uniform distribution on the cap.
    """
    t = rng.uniform(-1.0, cfg.gamma, count)
    nb = int(boundary_fraction * count)
    t[:nb] = cfg.gamma
    u = rng.standard_normal((count, cfg.dim))
    u = u - np.outer(u @ cfg.r, cfg.r)
    u = unit(u)
    return t[:, None] * cfg.r + np.sqrt(1.0 - t * t)[:, None] * u


def cap_grid(cfg: PotentialConfig, count: int, boundary: int = 0) -> np.ndarray:
    """Deterministic points of Y = {r^T y <= gamma}.

    On S^2: a Fibonacci lattice restricted to the cap (area-uniform) plus
    ``boundary`` equally spaced points on the rim r^T y = gamma. For other
    dimensions the general sphere grid is filtered to the cap.
    """
    g = cfg.gamma
    if cfg.dim == 3:
        i = np.arange(count, dtype=float) + 0.5
        z = g - (g + 1.0) * i / count
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        pts = [np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])]
        if boundary:
            a = 2.0 * np.pi * np.arange(boundary) / boundary
            rb = np.sqrt(1.0 - g * g)
            pts.append(np.column_stack([rb * np.cos(a), rb * np.sin(a), np.full(boundary, g)]))
        local = np.vstack(pts)
        B = orthonormal_complement(cfg.r)
        return local[:, :1] * B[0] + local[:, 1:2] * B[1] + local[:, 2:] * cfg.r
    n = 2 * count
    while True:
        G = sphere_grid(cfg.dim, n)
        G = G[G @ cfg.r <= g]
        if G.shape[0] >= count:
            break
        n *= 2
    G = G[:count]
    if boundary:
        U = project_tangent(cfg.r, sphere_grid(cfg.dim, boundary))
        U = unit(U[np.linalg.norm(U, axis=-1) > 1e-9])
        G = np.vstack([G, g * cfg.r + np.sqrt(1.0 - g * g) * U])
    return G


def sample_pairs(cfg: PotentialConfig, rng: np.random.Generator, count: int):
    X = unit(rng.standard_normal((count, cfg.dim)))
    return X, sample_y(cfg, rng, count)


def verify_potential_properties(cfg: PotentialConfig, sample_count: int = 100_000,
                                seed: int = 0, chunk: int = 250_000) -> PropertyReport:
    """Sample-based check of the structural properties of V.

    (i) 0 <= V <= 1; (ii) the tangent gradient vanishes only at x in {r, y};
    (iii) the denominator stays inside its analytic bounds; (iv) the quadratic
    sandwich alpha_low |x-r|^2 <= V <= alpha_up |x-r|^2; (v) mu is Lipschitz
    on sampled near-pairs.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)
    lo, hi = denominator_bounds(cfg.k, cfg.gamma)
    a_lo, a_up = 1.0 / (2.0 * hi), 1.0 / (2.0 * lo)
    tol = 1e-12

    v_min, v_max = np.inf, -np.inf
    d_min, d_max = np.inf, -np.inf
    sand_viol = range_viol = den_viol = 0
    crit_floor = np.inf
    done = 0
    while done < sample_count:
        m = min(chunk, sample_count - done)
        X, Y = sample_pairs(cfg, rng, m)
        V = potential(cfg, X, Y, check=False)
        D = denominator(cfg, X, Y)
        d2 = dot(X - cfg.r, X - cfg.r)
        v_min, v_max = min(v_min, V.min()), max(v_max, V.max())
        d_min, d_max = min(d_min, D.min()), max(d_max, D.max())
        range_viol += int(np.sum((V < -tol) | (V > 1 + tol)))
        den_viol += int(np.sum((D < lo * (1 - 1e-12)) | (D > hi * (1 + 1e-12))))
        sand_viol += int(np.sum((V < a_lo * d2 * (1 - 1e-12)) | (V > a_up * d2 * (1 + 1e-12))))
        away = (np.sqrt(d2) > 0.1) & (np.linalg.norm(X - Y, axis=-1) > 0.1)
        if np.any(away):
            g = project_tangent(X[away], grad_potential(cfg, X[away], Y[away], check=False))
            crit_floor = min(crit_floor, float(np.min(np.linalg.norm(g, axis=-1))))
        done += m

    # tangent gradient must vanish at the critical points themselves
    Ys = sample_y(cfg, rng, 64)
    at_r = np.max(np.abs(project_tangent(cfg.r, grad_potential(cfg, np.broadcast_to(cfg.r, Ys.shape), Ys))))
    at_y = np.max(np.abs(project_tangent(Ys, grad_potential(cfg, Ys, Ys))))
    crit_ok = crit_floor > 1e-8 and at_r < 1e-12 and at_y < 1e-12

    lip = _mu_lipschitz(cfg, rng, min(sample_count, 20_000))

    results = [
        PropertyResult("range", range_viol == 0,
                       {"min": float(v_min), "max": float(v_max), "violations": range_viol}),
        PropertyResult("critical_points", bool(crit_ok),
                       {"min_tangent_grad_away": float(crit_floor), "max_at_r": float(at_r),
                        "max_at_y": float(at_y), "floor": 1e-8}),
        PropertyResult("denominator_bounds", den_viol == 0,
                       {"lower": lo, "upper": hi, "sampled_min": float(d_min),
                        "sampled_max": float(d_max), "violations": den_viol}),
        PropertyResult("quadratic_sandwich", sand_viol == 0,
                       {"alpha_low": a_lo, "alpha_up": a_up, "violations": sand_viol}),
        lip,
    ]
    return PropertyReport(cfg.to_dict(), sample_count, results)


def _mu_lipschitz(cfg: PotentialConfig, rng: np.random.Generator, count: int) -> PropertyResult:
    # fit L on one half of the near-pairs, test the held-out half against it
    X, Y = sample_pairs(cfg, rng, count)
    eps = 10.0 ** rng.uniform(-6, -2, count)
    X2 = unit(X + eps[:, None] * unit(project_tangent(X, rng.standard_normal(X.shape))))
    dmu = np.abs(synergy_gap(cfg, X, Y, check=False) - synergy_gap(cfg, X2, Y, check=False))
    dx = np.linalg.norm(X - X2, axis=-1)
    half = count // 2
    L = 2.0 * float(np.max(dmu[:half] / dx[:half]))
    viol = int(np.sum(dmu[half:] > L * dx[half:] + 1e-10))
    return PropertyResult("mu_continuity", viol == 0,
                          {"fitted_L": L, "pairs": count - half, "violations": viol})
