"""Geometry of the unit sphere and of SO(3).

Points on the n-sphere are plain float arrays of length n+1; most functions
also accept stacks of points with shape (..., n+1). Rotations are 3x3 arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeodesic, TooFewSamples

UNIT_TOL = 1e-12


def unit(v) -> np.ndarray:
    """Return v / ||v|| along the last axis."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


def is_unit(x, tol: float = UNIT_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.abs(np.linalg.norm(x, axis=-1) - 1.0) <= tol))


def dot(a, b) -> np.ndarray:
    """Row-wise inner product over the last axis."""
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def project_tangent(x, w) -> np.ndarray:
    """Apply (I - x x^T) to w, i.e. remove the component of w along x."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    return w - x * dot(x, w)[..., None]


def skew(v) -> np.ndarray:
    """Return S(v) with S(v) u = v x u."""
    v0, v1, v2 = (float(c) for c in v)
    return np.array([[0.0, -v2, v1],
                     [v2, 0.0, -v0],
                     [-v1, v0, 0.0]])


def geodesic_direction(x0, r) -> np.ndarray:
    """Unit tangent at x0 pointing along the minimal geodesic toward r."""
    d = project_tangent(x0, r)
    n = np.linalg.norm(d)
    if n < 1e-12:
        raise DegenerateGeodesic("x0 is r or -r; the geodesic direction is undefined")
    return d / n


def geodesic_point(x0, r, t) -> np.ndarray:
    """Point at arc length t along the great circle from x0 toward r.

    ``t`` may be a scalar or a 1-D array, in which case one row per value is
    returned.
    """
    x0 = np.asarray(x0, dtype=float)
    d = geodesic_direction(x0, r)
    t = np.asarray(t, dtype=float)
    return np.cos(t)[..., None] * x0 + np.sin(t)[..., None] * d


def geodesic_distance(x, r) -> np.ndarray | float:
    """Great-circle distance in [0, pi].

    Evaluated as 2*atan2(|x - r|, |x + r|), which equals arccos(x^T r) on the
    sphere but keeps full relative precision near 0 and pi.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    out = 2.0 * np.arctan2(np.linalg.norm(x - r, axis=-1), np.linalg.norm(x + r, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def path_length(samples) -> float:
    """Length of a sampled curve on the sphere.

    Consecutive samples are joined by their great-circle arc, so the result is
    exact for piecewise-geodesic curves and converges with O(h^2) error per
    segment for smooth curves sampled at spacing h.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2:
        raise TooFewSamples("path_length needs at least two samples")
    return float(np.sum(geodesic_distance(s[1:], s[:-1])))


def rotation_exp(phi) -> np.ndarray:
    """exp(S(phi)) by the Rodrigues formula."""
    phi = np.asarray(phi, dtype=float)
    theta = float(np.linalg.norm(phi))
    S = skew(phi)
    if theta < 1e-8:
        # Taylor coefficients; truncation error below 1e-17 for theta < 1e-8
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * S + b * (S @ S)


def integrate_rotation_step(R, omega, h: float) -> np.ndarray:
    """Advance dR/dt = R S(omega) over h with constant body rate omega."""
    if h <= 0:
        raise ValueError("step must be positive")
    return np.asarray(R, dtype=float) @ rotation_exp(np.asarray(omega, dtype=float) * h)


def is_rotation(R, tol: float = 1e-10) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    ortho = np.max(np.abs(R.T @ R - np.eye(3)))
    return bool(ortho <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Nearly uniform deterministic lattice of ``count`` points on S^2."""
    i = np.arange(count, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / count
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sphere_grid(dim: int, count: int) -> np.ndarray:
    """Deterministic point set on the sphere embedded in R^dim.

    Fibonacci lattice for dim == 3, a scrambled-free Halton sequence pushed
    through the Gaussian inverse CDF otherwise.
    """
    if dim == 3:
        return fibonacci_sphere(count)
    from scipy.stats import norm, qmc

    u = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    return unit(norm.ppf(np.clip(u, 1e-12, 1 - 1e-12)))


def random_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    return unit(rng.standard_normal((count, dim)))


def orthonormal_complement(r) -> np.ndarray:
    """Rows form an orthonormal basis of the tangent space at r."""
    r = np.asarray(r, dtype=float)
    # full QR of [r | I] yields r (up to sign) as the first column
    q, _ = np.linalg.qr(np.column_stack([r, np.eye(r.size)]))
    return q[:, 1:r.size].T
