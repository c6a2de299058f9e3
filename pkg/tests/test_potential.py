import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synsphere import potential as pot
from synsphere.errors import InvalidConfig, LogicVarOutsideY, OutsideDomain
from synsphere.geometry import project_tangent

from conftest import random_unit

e1, e2, e3 = np.eye(3)


def boundary_y(cfg, direction=e1):
    u = project_tangent(cfg.r, direction)
    u /= np.linalg.norm(u)
    return cfg.gamma * cfg.r + np.sqrt(1 - cfg.gamma**2) * u


def test_config_validation():
    with pytest.raises(InvalidConfig, match="delta"):
        pot.PotentialConfig(r=e3, delta=0.3)
    with pytest.raises(InvalidConfig, match="gamma"):
        pot.PotentialConfig(r=e3, gamma=1.0)
    with pytest.raises(InvalidConfig, match="k"):
        pot.PotentialConfig(r=e3, k=0.0)
    with pytest.raises(InvalidConfig, match="r"):
        pot.PotentialConfig(r=[0, 0, 2.0])
    c = pot.PotentialConfig(r=e3)
    assert pot.PotentialConfig.from_dict(c.to_dict()) == c
    assert pot.PotentialConfig(r=e3, delta=0.05) != c


def test_height_examples():
    assert pot.height(e3, e3) == 0.0
    assert pot.height(e3, -e3) == 2.0
    x = np.array([np.sqrt(0.75), 0, 0.5])
    assert pot.height(e3, x) == pytest.approx(0.5, abs=1e-15)


def test_potential_endpoints(cfg, rng):
    Y = pot.sample_y(cfg, rng, 200)
    assert np.all(pot.potential(cfg, np.broadcast_to(cfg.r, Y.shape), Y) == 0.0)
    assert np.allclose(pot.potential(cfg, Y, Y), 1.0)
    assert pot.potential(cfg, -cfg.r, boundary_y(cfg)) == pytest.approx(0.8, abs=1e-15)


def test_potential_domain_errors(cfg):
    with pytest.raises(LogicVarOutsideY):
        pot.potential(cfg, e1, e3)
    wide = pot.PotentialConfig(r=e3, gamma=0.99, delta=1e-3)
    with pytest.raises(OutsideDomain):
        pot.potential(wide, e3, e3)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_potential_range_and_zero_set(seed):
    rng = np.random.default_rng(seed)
    cfg = pot.PotentialConfig(r=e3, k=rng.uniform(0.2, 5), gamma=rng.uniform(-0.9, 0.9), delta=1e-3)
    X, Y = pot.sample_pairs(cfg, rng, 500)
    V = pot.potential(cfg, X, Y)
    assert np.all((V >= 0) & (V <= 1))
    off = np.linalg.norm(X - cfg.r, axis=1) > 1e-3
    assert np.all(V[off] > 0)


def _fd_gradient_along(cfg, x, y, d, h=1e-6):
    xp = (x + h * d) / np.linalg.norm(x + h * d)
    xm = (x - h * d) / np.linalg.norm(x - h * d)
    return (pot.potential(cfg, xp, y) - pot.potential(cfg, xm, y)) / (2 * h)


def test_gradient_matches_finite_differences(cfg, rng):
    X, Y = pot.sample_pairs(cfg, rng, 300)
    worst = 0.0
    for x, y in zip(X, Y):
        g = pot.grad_potential(cfg, x, y)
        for d in rng.standard_normal((2, 3)):
            d = project_tangent(x, d)
            d /= np.linalg.norm(d)
            fd = _fd_gradient_along(cfg, x, y, d)
            worst = max(worst, abs(fd - g @ d) / max(np.linalg.norm(project_tangent(x, g)), 1e-3))
    assert worst < 1e-5


def test_gradient_vanishes_at_target(cfg, rng):
    for y in pot.sample_y(cfg, rng, 20):
        assert np.allclose(project_tangent(cfg.r, pot.grad_potential(cfg, cfg.r, y)), 0, atol=1e-15)


def test_tangent_norm_identity(cfg, rng):
    X, Y = pot.sample_pairs(cfg, rng, 5000)
    closed = pot.tangent_grad_norm_sq(cfg, X, Y)
    direct = np.sum(project_tangent(X, pot.grad_potential(cfg, X, Y)) ** 2, axis=1)
    assert np.max(np.abs(closed - direct)) < 1e-10
    y = boundary_y(cfg)
    assert pot.tangent_grad_norm_sq(cfg, cfg.r, y) == 0.0
    assert pot.tangent_grad_norm_sq(cfg, y, y) == pytest.approx(0.0, abs=1e-15)


def brute_min(cfg, x, grid):
    return np.min(pot.potential(cfg, np.broadcast_to(x, grid.shape), grid))


def test_min_over_y_examples(cfg):
    assert pot.min_over_y(cfg, cfg.r) == 0.0
    assert pot.min_over_y(cfg, -cfg.r) == pytest.approx(0.8, abs=1e-15)
    assert pot.min_over_y(cfg, e1) == pytest.approx(1 / (1 + 1 + np.sqrt(0.75)), abs=1e-12)
    assert pot.min_over_y(cfg, e1) == pytest.approx(0.3489, abs=1e-4)


def test_min_over_y_matches_brute_force(cfg, rng):
    grid = pot.cap_grid(cfg, 5000, boundary=500)
    for x in random_unit(rng, 3, 100):
        bf = brute_min(cfg, x, grid)
        m = pot.min_over_y(cfg, x)
        assert m <= bf + 1e-12
        assert bf - m < 2e-3


def test_argmin_branches(cfg, rng):
    x = np.array([np.sqrt(1 - 0.81), 0, 0.9])
    assert np.allclose(pot.argmin_over_y(cfg, x), -x)
    for x in random_unit(rng, 3, 200):
        y = pot.argmin_over_y(cfg, x)
        assert cfg.r @ y <= cfg.gamma + 1e-12
        assert pot.potential(cfg, x, y) == pytest.approx(pot.min_over_y(cfg, x), abs=1e-12)
        if cfg.r @ x < -cfg.gamma:
            assert abs(cfg.r @ y - cfg.gamma) < 1e-9
    for x in (cfg.r, -cfg.r):
        y = pot.argmin_over_y(cfg, x)
        assert np.allclose(y, pot.tie_break_point(cfg), atol=1e-15)
        assert abs(cfg.r @ y - cfg.gamma) < 1e-12


def test_argmin_upside_down_thrust_case():
    cfg = pot.PotentialConfig(r=np.array([0, 0, -1.0]))
    x = np.array([-0.0101, 0, 0.9999])
    x /= np.linalg.norm(x)
    assert np.allclose(pot.argmin_over_y(cfg, x), [np.sqrt(3) / 2, 0, 0.5], atol=1e-2)


def test_argmin_beats_grid(cfg, rng):
    grid = pot.cap_grid(cfg, 5000, boundary=500)
    for x in random_unit(rng, 3, 50):
        y = pot.argmin_over_y(cfg, x)
        assert pot.potential(cfg, x, y) <= brute_min(cfg, x, grid) + 1e-12


def test_argmin_vectorized_matches_rowwise(cfg, rng):
    X = random_unit(rng, 3, 40)
    X[0], X[1] = cfg.r, -cfg.r
    rows = np.array([pot.argmin_over_y(cfg, x) for x in X])
    assert np.array_equal(pot.argmin_over_y(cfg, X), rows)


def test_synergy_gap_properties(cfg, rng):
    X, Y = pot.sample_pairs(cfg, rng, 5000)
    assert np.all(pot.synergy_gap(cfg, X, Y) >= -1e-12)
    Ystar = pot.argmin_over_y(cfg, X)
    assert np.max(np.abs(pot.synergy_gap(cfg, X, Ystar))) < 1e-12
    Yc = pot.sample_y(cfg, rng, 5000)
    assert np.allclose(pot.synergy_gap(cfg, Yc, Yc), 1 - pot.min_over_y(cfg, Yc))
    bound = pot.max_hysteresis_gap(cfg.k, cfg.gamma)
    assert np.all(pot.synergy_gap(cfg, Yc, Yc) >= bound - 1e-9)


def test_gap_grid_minimum(cfg):
    G = pot.cap_grid(cfg, 20000, boundary=200)
    assert np.min(pot.synergy_gap(cfg, G, G)) == pytest.approx(0.2, abs=5e-3)


@settings(max_examples=20)
@given(st.floats(0.1, 10), st.floats(-0.95, 0.95))
def test_gap_lower_bound_general(k, gamma):
    cfg = pot.PotentialConfig(r=e3, k=k, gamma=gamma, delta=1e-6)
    G = pot.cap_grid(cfg, 3000, boundary=100)
    mu = pot.synergy_gap(cfg, G, G)
    assert np.all(mu >= pot.max_hysteresis_gap(k, gamma) - 1e-9)


def test_exp_constants_fixture(cfg):
    c = pot.exp_constants(cfg)
    assert c.alpha_up == 0.5
    assert c.alpha_low == 1 / 6
    assert np.sqrt(1 + 2 * cfg.k * cfg.gamma + cfg.k**2) == 1.0
    assert c.v_flow_bound == pytest.approx(0.9, abs=1e-15)
    assert c.v_flow_max == pytest.approx(0.9, abs=1e-6)
    assert c.v_flow_max <= c.v_flow_bound + 1e-12
    assert c.lam == pytest.approx(2 * (1 - c.v_flow_max) * 1.5 / 9)


def test_denominator_bounds_fixture(cfg, rng):
    assert pot.denominator_bounds(1.0, -0.5) == (1.0, 3.0)
    G = pot.sphere_grid(3, 4000)
    Yg = pot.cap_grid(cfg, 400, boundary=100)
    D = pot.denominator(cfg, G[:, None, :], Yg[None, :, :])
    assert D.min() == pytest.approx(1.0, abs=1e-3)
    assert D.max() == pytest.approx(3.0, abs=1e-3)


def test_flow_set_decay_inequality(cfg, rng):
    # on the flow set the squared tangent gradient dominates lambda * V
    c = pot.exp_constants(cfg)
    X, Y = pot.sample_pairs(cfg, rng, 200_000)
    flow = pot.synergy_gap(cfg, X, Y) <= cfg.delta
    V = pot.potential(cfg, X[flow], Y[flow])
    g2 = pot.tangent_grad_norm_sq(cfg, X[flow], Y[flow])
    assert np.all(g2 >= c.lam * V - 1e-12)
    assert np.max(V) <= c.v_flow_max + 1e-9


def test_verify_report_passes(cfg):
    rep = pot.verify_potential_properties(cfg, sample_count=20_000, seed=3)
    assert rep.passed, rep.to_dict()
    names = [r.name for r in rep.results]
    assert names == ["range", "critical_points", "denominator_bounds", "quadratic_sandwich", "mu_continuity"]
    with pytest.raises(ValueError):
        pot.verify_potential_properties(cfg, sample_count=10)


def test_higher_dimension(rng):
    r = np.eye(5)[0]
    cfg = pot.PotentialConfig(r=r)
    X, Y = pot.sample_pairs(cfg, rng, 2000)
    assert np.allclose(pot.potential(cfg, pot.argmin_over_y(cfg, X), pot.argmin_over_y(cfg, X)), 1.0)
    assert np.max(np.abs(pot.synergy_gap(cfg, X, pot.argmin_over_y(cfg, X)))) < 1e-12
    grid = pot.cap_grid(cfg, 4000, boundary=400)
    for x in X[:20]:
        assert pot.min_over_y(cfg, x) <= brute_min(cfg, x, grid) + 1e-12
