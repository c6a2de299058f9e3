"""Riccati solver and certified gain synthesis for the saturated position loop.

The position error z = (p_err, v_err) obeys the double integrator
z' = A z + B w. The gain K = -Rhat^-1 B^T P comes from a Riccati equation
whose weight eps * Qhat0 is tuned so that the chain of ellipsoids

    {z^T H z <= ellH}  inside  {z^T P z <= ellP}  inside  {|K z| <= b}

holds, which keeps the saturation inactive from the initial set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .errors import Infeasible, InvalidConfig, NoConvergence, NotStabilizable

CARE_TOL = 1e-10
QR_TOL = 1e-8
PH_TOL = 1e-10


def double_integrator(dim: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """A = [[0, I], [0, 0]], B = [[0], [I]]."""
    Z, I = np.zeros((dim, dim)), np.eye(dim)
    return np.block([[Z, I], [Z, Z]]), np.vstack([Z, I])


def _is_hurwitz(M) -> bool:
    return bool(np.max(np.linalg.eigvals(M).real) < 0.0)


def _sym(M):
    return 0.5 * (M + M.T)


def lyapunov(Acl, Q) -> np.ndarray:
    """Solve Acl^T P + P Acl = -Q by a dense solve of the vectorized system."""
    n = Acl.shape[0]
    I = np.eye(n)
    # row-major vec: vec(Acl^T P) = (Acl^T kron I) vec P, vec(P Acl) = (I kron Acl^T) vec P
    L = np.kron(Acl.T, I) + np.kron(I, Acl.T)
    return _sym(np.linalg.solve(L, -Q.reshape(-1)).reshape(n, n))


def care_residual(A, B, Q, R, P) -> np.ndarray:
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def _starting_gains(A, B):
    n, m = B.shape
    yield np.zeros((m, n))
    if n == 2 * m:
        yield -np.hstack([np.eye(m), 2.0 * np.eye(m)])
    # Bass: shift A until stable, K = -B^T W^-1 with (A+bI) W + W (A+bI)^T = 2 B B^T
    beta = max(0.0, float(np.max(np.linalg.eigvals(A).real))) + 1.0
    As = A + beta * np.eye(n)
    try:
        W = lyapunov(-As.T, 2.0 * B @ B.T)
        yield -B.T @ np.linalg.inv(W)
    except np.linalg.LinAlgError:
        return


def care_solve(A, B, Q, R, K0=None, max_iter: int = 100, tol: float = CARE_TOL) -> np.ndarray:
    """Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0.

    Kleinman-Newton iteration from a stabilizing K0 (found automatically if
    not given).

    Raises:
        NotStabilizable: no stabilizing starting gain was found.
        NoConvergence: the residual did not drop below ``tol`` in ``max_iter``
            iterations.
    """
    A, B, Q, R = (np.asarray(M, dtype=float) for M in (A, B, Q, R))
    if K0 is None:
        K0 = next((K for K in _starting_gains(A, B) if _is_hurwitz(A + B @ K)), None)
        if K0 is None:
            raise NotStabilizable("no stabilizing starting gain found for (A, B)")
    elif not _is_hurwitz(A + B @ K0):
        raise NotStabilizable("K0 does not stabilize A + B K0")
    K = np.asarray(K0, dtype=float)
    scale = max(1.0, np.linalg.norm(Q))
    for _ in range(max_iter):
        P = lyapunov(A + B @ K, Q + K.T @ R @ K)
        if np.linalg.norm(care_residual(A, B, Q, R, P)) < tol * scale:
            return P
        K = -np.linalg.solve(R, B.T @ P)
    raise NoConvergence(f"Kleinman iteration did not converge in {max_iter} steps")


def psd_sqrt(P) -> np.ndarray:
    w, U = np.linalg.eigh(_sym(P))
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


@dataclass
class PositionGains:
    """Certified gains of the saturated position loop.

    ``certificates`` holds the slack of each containment and the Riccati
    inequality; ``warnings`` lists non-fatal design-condition failures.
    """

    K: np.ndarray
    P: np.ndarray
    Qhat: np.ndarray
    Rhat: np.ndarray
    H: np.ndarray
    ellP: float
    ellH: float
    eps: float = float("nan")
    kbar1: float = float("nan")
    kp: float = float("nan")
    b: float = float("nan")
    certificates: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def check(self) -> dict:
        self.certificates = certify(self)
        return self.certificates

    @property
    def passed(self) -> bool:
        c = self.certificates or certify(self)
        return bool(c["riccati_ok"] and c["ph_ok"] and c["svmax_ok"])

    def to_dict(self) -> dict:
        return {
            "K": self.K.tolist(), "P": self.P.tolist(), "Qhat": self.Qhat.tolist(),
            "Rhat": self.Rhat.tolist(), "H": self.H.tolist(), "ellP": self.ellP,
            "ellH": self.ellH, "eps": self.eps, "kbar1": self.kbar1, "kp": self.kp,
            "b": self.b, "certificates": self.certificates, "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PositionGains":
        arr = {k: np.asarray(d[k], dtype=float) for k in ("K", "P", "Qhat", "Rhat", "H")}
        return cls(**arr, ellP=float(d["ellP"]), ellH=float(d["ellH"]),
                   eps=float(d.get("eps", "nan")), kbar1=float(d.get("kbar1", "nan")),
                   kp=float(d.get("kp", "nan")), b=float(d.get("b", "nan")),
                   certificates=dict(d.get("certificates", {})),
                   warnings=list(d.get("warnings", [])))


def certify(g: PositionGains) -> dict:
    """Evaluate the three certificates for a set of gains."""
    A, B = double_integrator(g.K.shape[0])
    Acl = A + B @ g.K
    M = Acl.T @ g.P + g.P @ Acl + g.Qhat + g.K.T @ g.Rhat @ g.K
    ric = float(np.max(np.linalg.eigvalsh(_sym(M))))
    ph = float(np.min(np.linalg.eigvalsh(_sym(g.H / g.ellH - g.P / g.ellP))))
    sv = float(np.linalg.norm(np.linalg.solve(g.Rhat, B.T @ psd_sqrt(g.P)), 2) ** 2)
    limit = g.b**2 / g.ellP
    return {
        "riccati_max_eig": ric,
        "riccati_ok": ric <= QR_TOL,
        "ph_min_eig": ph,
        "ph_ok": ph >= -PH_TOL,
        "svmax_sq": sv,
        "svmax_limit": limit,
        "svmax_slack": limit - sv,
        "svmax_ok": sv <= limit,
    }


def _candidate(eps, A, B, Qhat0, Rhat, H, ell, b) -> PositionGains:
    Q = eps * Qhat0
    P = care_solve(A, B, Q, Rhat)
    K = -np.linalg.solve(Rhat, B.T @ P)
    return PositionGains(K=K, P=P, Qhat=Q, Rhat=Rhat, H=H, ellP=ell, ellH=ell, eps=float(eps), b=b)


def synthesize_gains(H, Rhat, Qhat0, sat, kbar1: float, kp: float,
                     cfg: pot.PotentialConfig | None = None, lambda1: float | None = None,
                     grid: int = 60, refine: int = 30, eps_min: float = 1e-12) -> PositionGains:
    """Largest eps in (0, 1] whose Riccati solution satisfies both containments.

    Args:
        H: bounding ellipsoid {z^T H z <= 1} of the initial position errors.
        Rhat: input weight (3x3 SPD).
        Qhat0: state weight scaled by eps (6x6 SPD).
        sat: saturation config; only ``sat.b`` is used.
        kbar1: attitude weight in the composite Lyapunov function.
        kp: adaptive attitude gain.
        cfg: potential config used to evaluate the decay rate lambda1 for the
            design condition kp * kbar1 * lambda1 > 1 (reported, never fatal).
        lambda1: explicit decay rate, overrides ``cfg``.

    Raises:
        Infeasible: no grid point satisfies both containments.
    """
    H, Rhat, Qhat0 = (np.asarray(M, dtype=float) for M in (H, Rhat, Qhat0))
    for name, M in (("H", H), ("Rhat", Rhat), ("Qhat0", Qhat0)):
        if not np.allclose(M, M.T) or np.min(np.linalg.eigvalsh(_sym(M))) <= 0:
            raise InvalidConfig(f"gains.{name}: must be symmetric positive definite")
    if not kbar1 > 0 or not kp > 0:
        raise InvalidConfig("gains.kbar1 and gains.kp must be positive")
    b = float(sat.b)
    A, B = double_integrator(Rhat.shape[0])
    nu_bar = kbar1 * 1.0  # max of V over the sphere times Y is 1
    ell = (1.0 + nu_bar) ** 2

    def ok(eps):
        g = _candidate(eps, A, B, Qhat0, Rhat, H, ell, b)
        c = g.check()
        return (c["ph_ok"] and c["svmax_ok"]), g

    eps_grid = np.logspace(np.log10(eps_min), 0.0, grid)
    best = None
    hi_bad = None
    for e in eps_grid:
        good, g = ok(e)
        if good:
            best = g
        else:
            hi_bad = e
            if best is not None:
                break
    if best is None:
        raise Infeasible(f"no eps in [{eps_min:g}, 1] satisfies the ellipsoid containments with b = {b}")
    if hi_bad is not None and hi_bad > best.eps:
        lo, hi = best.eps, hi_bad
        for _ in range(refine):
            mid = np.sqrt(lo * hi)
            good, g = ok(mid)
            if good:
                lo, best = mid, g
            else:
                hi = mid

    best.kbar1, best.kp = float(kbar1), float(kp)
    best.check()
    if lambda1 is None and cfg is not None:
        lambda1 = pot.exp_constants(cfg).lam
    if lambda1 is not None:
        prod = kp * kbar1 * lambda1
        best.certificates["design_product"] = float(prod)
        best.certificates["design_product_ok"] = bool(prod > 1.0)
        if prod <= 1.0:
            best.warnings.append(
                f"kp * kbar1 * lambda1 = {prod:.4g} <= 1 with lambda1 = {lambda1:.4g}")
    if not best.passed:
        raise Infeasible("synthesized gains fail their certificates")
    return best
