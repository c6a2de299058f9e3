import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from synsphere import potential as pot
from synsphere import quad
from synsphere.errors import InvalidConfig, NotInFlowSet, ZeroCommandedThrust
from synsphere.geometry import is_rotation, skew
from synsphere.hybrid import SolverConfig
from synsphere.riccati import PositionGains, synthesize_gains

CFG = pot.PotentialConfig(r=np.array([0.0, 0.0, -1.0]))
PARAMS = quad.QuadParams()
SAT = quad.SatConfig(4.0, 6.0)
H = np.diag([500.0] * 3 + [100.0] * 3)
QHAT0 = np.diag([10.0, 10.0, 100.0, 100.0, 100.0, 1.0])
RHAT = 10.0 * np.eye(3)


@pytest.fixture(scope="module")
def gains():
    return synthesize_gains(H, RHAT, QHAT0, SAT, 12.0, 1.0)


def test_reference_eval():
    ref = quad.CircleReference(0.2)
    p, v, a, j = quad.reference_eval(ref, 0.0)
    assert np.allclose(p, [1, 0, 0]) and np.allclose(v, [0, 2 * np.pi * 0.2, 0])
    assert ref.M2 == pytest.approx(1.579, abs=1e-3) and ref.M2 < 9.81
    for t in np.linspace(0, 7, 29):
        p, v, a, j = quad.reference_eval(ref, t)
        assert np.linalg.norm(a) == pytest.approx(ref.M2, rel=1e-14)
        assert np.linalg.norm(j) == pytest.approx(ref.M3, rel=1e-14)
        h = 1e-5
        # derivatives agree with central differences of the previous order
        for lo, hi in ((0, 1), (1, 2), (2, 3)):
            fd = (quad.reference_eval(ref, t + h)[lo] - quad.reference_eval(ref, t - h)[lo]) / (2 * h)
            assert np.allclose(fd, quad.reference_eval(ref, t)[hi], atol=1e-8)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        quad.SatConfig(4.0, 3.0)
    with pytest.raises(InvalidConfig):
        quad.QuadParams(r_body=[0, 0, 2.0])
    with pytest.raises(InvalidConfig, match="b_max"):
        quad.validate_setup(PARAMS, quad.CircleReference(0.2), quad.SatConfig(4.0, 9.0))
    with pytest.raises(InvalidConfig, match="freq"):
        quad.validate_setup(PARAMS, quad.CircleReference(1.0), SAT)


def test_saturation(rng):
    u = np.array([1.0, 1.0, 0.0])
    assert np.array_equal(quad.saturation(SAT, u), u)
    assert np.array_equal(quad.saturation_jacobian(SAT, u), np.eye(3))
    big = quad.saturation(SAT, np.array([1e9, 0, 0]))
    assert np.linalg.norm(big) <= SAT.b_max
    assert np.linalg.norm(big) == pytest.approx(SAT.b_max, abs=1e-9)
    for _ in range(500):
        u = rng.standard_normal(3)
        u *= rng.uniform(4.0001, 30.0) / np.linalg.norm(u)
        assert np.linalg.norm(quad.saturation(SAT, u)) <= SAT.b_max * (1 + 1e-15)
        J = quad.saturation_jacobian(SAT, u)
        h = 1e-6
        fd = np.column_stack([(quad.saturation(SAT, u + h * e) - quad.saturation(SAT, u - h * e)) / (2 * h)
                              for e in np.eye(3)])
        assert np.linalg.norm(fd - J) / np.linalg.norm(J) < 1e-6


def test_saturation_is_c1_at_the_ball():
    e = np.array([1.0, 0.0, 0.0])
    inside = quad.saturation_jacobian(SAT, (SAT.b - 1e-9) * e)
    outside = quad.saturation_jacobian(SAT, (SAT.b + 1e-9) * e)
    assert np.allclose(inside, outside, atol=1e-8)


def test_position_feedback(gains, rng):
    assert np.array_equal(quad.position_feedback(gains, SAT, np.zeros(3), np.zeros(3)), np.zeros(3))
    e = 0.01 * rng.standard_normal(6)
    assert np.array_equal(quad.position_feedback(gains, SAT, e[:3], e[3:]), gains.K @ e)
    w = quad.position_feedback(gains, SAT, 1e3 * np.ones(3), 1e3 * np.ones(3))
    assert np.linalg.norm(w) <= SAT.b_max * (1 + 1e-15)
    assert SAT.b_max < PARAMS.g_norm - quad.CircleReference(0.2).M2


def test_thrust_direction_and_magnitude(rng):
    rho = quad.commanded_thrust_dir(PARAMS, np.zeros(3), np.zeros(3))
    assert np.allclose(rho, [0, 0, -1])
    assert quad.thrust_magnitude(PARAMS, np.eye(3), np.zeros(3), np.zeros(3)) == pytest.approx(9.81)
    with pytest.raises(ZeroCommandedThrust):
        quad.commanded_thrust_dir(PARAMS, PARAMS.gravity, np.zeros(3))
    grid = np.linspace(-30, 30, 60001)
    for _ in range(20):
        R = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        w, a = rng.standard_normal(3), rng.standard_normal(3)
        ku = quad.thrust_magnitude(PARAMS, R, w, a)
        target = w - PARAMS.gravity + a
        axis = R @ PARAMS.r_body
        best = grid[np.argmin(np.linalg.norm(np.outer(grid, axis) - target, axis=1))]
        assert ku == pytest.approx(best, abs=1e-3)
    # aligned thrust reproduces the commanded acceleration exactly
    w, a = rng.standard_normal(3), rng.standard_normal(3)
    rho = quad.commanded_thrust_dir(PARAMS, w, a)
    R = Rotation.align_vectors([rho], [PARAMS.r_body])[0].as_matrix()
    ku = quad.thrust_magnitude(PARAMS, R, w, a)
    assert np.allclose(R @ PARAMS.r_body * ku + PARAMS.gravity - a, w, atol=1e-12)


def test_rho_jacobian(gains, rng):
    worst = 0.0
    for _ in range(500):
        z = np.concatenate([rng.standard_normal(3), rng.standard_normal(6) * rng.choice([0.1, 10.0])])
        J = quad.rho_jacobian(PARAMS, gains, SAT, z)
        rho = quad.commanded_thrust_dir(PARAMS, quad.position_feedback(gains, SAT, z[3:6], z[6:]), z[:3])
        assert np.max(np.abs(rho @ J)) < 1e-10

        def f(zz):
            w = quad.position_feedback(gains, SAT, zz[3:6], zz[6:])
            return quad.commanded_thrust_dir(PARAMS, w, zz[:3])

        h = 1e-6
        fd = np.column_stack([(f(z + h * e) - f(z - h * e)) / (2 * h) for e in np.eye(9)])
        worst = max(worst, np.linalg.norm(fd - J) / np.linalg.norm(J))
    assert worst < 1e-5
    z = np.concatenate([np.zeros(3), 1e-3 * np.ones(6)])
    J = quad.rho_jacobian(PARAMS, gains, SAT, z)
    u = gains.K @ z[3:] - PARAMS.gravity
    rho = u / np.linalg.norm(u)
    assert np.allclose(J[:, 3:], (np.eye(3) - np.outer(rho, rho)) @ gains.K / np.linalg.norm(u), atol=1e-15)


def test_nu_star():
    G = PositionGains(K=np.zeros((3, 6)), P=np.eye(6), Qhat=np.eye(6), Rhat=np.eye(3), H=np.eye(6),
                      ellP=1.0, ellH=1.0)
    assert quad.nu_star(G, CFG, PARAMS.gravity, np.zeros(3)) == 0.0
    hover = quad.nu_star(G, CFG, np.zeros(3), np.zeros(3))
    assert hover == pytest.approx(2 * np.sqrt(6) * 9.81, rel=1e-12)
    assert hover == pytest.approx(48.06, abs=1e-2)
    # linear in the thrust vector w - g + p_d''
    u = np.array([1.0, 2.0, 0.5])
    assert quad.nu_star(G, CFG, 2 * u + PARAMS.gravity, np.zeros(3)) == pytest.approx(
        2 * quad.nu_star(G, CFG, u + PARAMS.gravity, np.zeros(3)), rel=1e-14)


def test_omega_command_static_hover(gains):
    ref = quad.CircleReference(0.0)
    s = quad.QuadFullState(np.array([1.0, 0, 0]), np.zeros(3), np.eye(3), pot.tie_break_point(CFG))
    w = quad.omega_command(PARAMS, gains, CFG, SAT, 1.0, 1.0, 0.0, s, ref)
    assert np.allclose(w, 0.0, atol=1e-15)


def test_omega_command_descends(gains, rng):
    ref = quad.CircleReference(0.2)
    t = 0.7
    p, v, a, _ = quad.reference_eval(ref, t)
    rho = quad.commanded_thrust_dir(PARAMS, np.zeros(3), a)
    for _ in range(20):
        R = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        x = R.T @ rho
        y = pot.argmin_over_y(CFG, x)
        s = quad.QuadFullState(p, v, R, y)
        w = quad.omega_command(PARAMS, gains, CFG, SAT, 1.0, 1.0, t, s, ref)
        if pot.potential(CFG, x, y) < 1e-10:
            continue
        # position error is zero so rho is momentarily constant: x' = S(x) w
        xdot = skew(x) @ w
        assert pot.grad_potential(CFG, x, y) @ xdot < 0
    R = np.diag([1.0, -1.0, -1.0])
    with pytest.raises(NotInFlowSet):
        quad.omega_command(PARAMS, gains, CFG, SAT, 1.0, 1.0, t,
                           quad.QuadFullState(p, v, R, np.array([0, 0, 1.0])), ref)


def test_perfect_tracking_stays(gains):
    ref = quad.CircleReference(0.2)
    p, v, a, _ = quad.reference_eval(ref, 0.0)
    rho = quad.commanded_thrust_dir(PARAMS, np.zeros(3), a)
    R = Rotation.align_vectors([rho], [PARAMS.r_body])[0].as_matrix()
    init = quad.QuadFullState(p, v, R, pot.tie_break_point(CFG))
    arc = quad.simulate_tracking(PARAMS, gains, CFG, SAT, 1.0, 1.0, ref, init,
                                 SolverConfig(step=1e-2, max_time=10.0))
    cols = quad.tracking_columns(arc, gains, SAT, PARAMS, ref, CFG)
    assert arc.jumps == 0
    assert np.max(cols["p_err"]) < 1e-6
    rep = quad.tracking_metrics(arc, gains, SAT)
    assert rep.final_p_err < 1e-6 and rep.max_Kz < 1e-6


def test_upside_down_scenario_short(gains):
    ref = quad.CircleReference(0.05)
    arc = quad.simulate_tracking(PARAMS, gains, CFG, SAT, 1.0, 1.0, ref, quad.scenario_initial(ref),
                                 SolverConfig(step=2e-3, max_time=2.0))
    assert arc.jump_times == [0.0]
    assert np.allclose(arc.phases[1].x[0, 15:], [np.sqrt(3) / 2, 0, 0.5], atol=1e-2)
    cols = quad.tracking_columns(arc, gains, SAT, PARAMS, ref, CFG)
    assert cols["V1"][1] < cols["V1"][0]
    assert cols["mu"][1] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(cols["V1"][1:]) <= 1e-12)
    for s in arc.phases[-1].x[::50]:
        assert is_rotation(s[6:15].reshape(3, 3), 1e-10)
    rep = quad.tracking_metrics(arc, gains, SAT)
    assert rep.saturation_inactive
    assert rep.W1_flow_max_increase <= 1e-9
    assert all(d > 0 for d in rep.W1_jump_drops)
    assert rep.min_thrust_after >= PARAMS.g_norm - ref.M2 - SAT.b_max


def test_random_initial_errors_respect_saturation(gains, rng):
    ref = quad.CircleReference(0.2)
    L = np.linalg.cholesky(H)
    for _ in range(20):
        d = rng.standard_normal(6)
        e = np.linalg.solve(L.T, d / np.linalg.norm(d)) * rng.uniform(0, 1)  # e^T H e <= 1
        p, v, _, _ = quad.reference_eval(ref, 0.0)
        R = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        init = quad.QuadFullState(p + e[:3], v + e[3:], R, np.array([0.0, 0.0, 1.0]))
        arc = quad.simulate_tracking(PARAMS, gains, CFG, SAT, 1.0, 1.0, ref, init,
                                     SolverConfig(step=1e-2, max_time=3.0))
        assert quad.tracking_metrics(arc, gains, SAT).saturation_inactive


def test_simulation_rejects_mismatched_target(gains):
    ref = quad.CircleReference(0.2)
    with pytest.raises(InvalidConfig, match="potential.r"):
        quad.simulate_tracking(PARAMS, gains, pot.PotentialConfig(r=np.array([0, 0, 1.0])), SAT, 1.0, 1.0,
                               ref, quad.scenario_initial(ref))
