import numpy as np
import pytest

from bearing_angle.errors import InsufficientWindowError, UnderdeterminedError, UnobservableError
from bearing_angle.geometry import linearized_angle, subtended_angle_exact
from bearing_angle.observability import (
    ObservationWindow,
    analyze_rank,
    build_observability_matrix,
    measurement_block,
    observability_matrix,
    observer_excess_order,
    recover_motion,
    recover_target_motion,
    stack_discrete_system,
    window_from_motion,
)
from bearing_angle.sim.engine import simulate_truth
from bearing_angle.sim.motion import PolynomialMotion
from bearing_angle.sim.presets import preset

from conftest import random_unit


def window_from_positions(times, target_pos, observer_pos, size):
    rel = target_pos - observer_pos
    r = np.linalg.norm(rel, axis=1)
    return ObservationWindow(times, rel / r[:, None], subtended_angle_exact(size, r), observer_pos)


def random_cv_pair(rng, k=8, dt=0.1):
    t = dt * np.arange(k)
    pt0 = random_unit(rng) * rng.uniform(6, 15)
    vt, vo = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    po0 = rng.uniform(-1, 1, 3)
    return t, pt0 + t[:, None] * vt, po0 + t[:, None] * vo, (pt0, vt, po0, vo)


def test_window_validation():
    t = np.array([0.0, 0.1, 0.25])
    g = np.tile([0.0, 1.0, 0.0], (3, 1))
    with pytest.raises(InsufficientWindowError):
        ObservationWindow(t, g, np.full(3, 0.1), np.zeros((3, 3)))
    w = ObservationWindow(t[:1], g[:1], np.full(1, 0.1), np.zeros((1, 3)))
    with pytest.raises(InsufficientWindowError):
        build_observability_matrix(w)


def test_single_sample_rank_at_most_four(rng):
    for _ in range(20):
        Q = observability_matrix(random_unit(rng)[None], [rng.uniform(0.01, 1.0)], 0.1)
        assert Q.shape == (6, 7)
        rank = analyze_rank(Q, 7).rank
        # position/size columns have the single null direction (g, theta)
        assert rank <= 4 and rank == 3


def test_identity_is_observable():
    rep = analyze_rank(np.eye(7), 7)
    assert (rep.rank, rep.null_basis, rep.verdict) == (7, [], "observable")


def test_rank_plus_nullity(rng):
    t, pt, po, _ = random_cv_pair(rng)
    rep = analyze_rank(build_observability_matrix(window_from_positions(t, pt, po, 1.0)), 7)
    assert rep.rank + len(rep.null_basis) == rep.state_dim


def test_null_vector_and_mode_value(rng):
    t, pt, po, (pt0, vt, _, vo) = random_cv_pair(rng)
    ell = 0.8
    w = window_from_positions(t, pt, po, ell)
    rep = analyze_rank(build_observability_matrix(w), 7)
    assert rep.rank == 6
    th1 = float(linearized_angle(w.angles[0]))
    v = np.concatenate([w.bearings[0] / th1, (vt - vo) / ell, [1.0]])
    cos = abs(v @ rep.null_basis[0]) / np.linalg.norm(v)
    assert cos > 1 - 1e-8
    x = np.concatenate([pt0, vt, [ell]])
    expanded = pt0 @ w.bearings[0] / th1 + vt @ (vt - vo) / ell + ell
    assert x @ v == pytest.approx(expanded, rel=1e-14)


def test_measurement_block_annihilates_null_direction(rng):
    g, th = random_unit(rng), 0.2
    H = measurement_block(g, th)
    v = np.concatenate([g / float(linearized_angle(th)), np.zeros(3), [1.0]])
    np.testing.assert_allclose(H @ v, 0, atol=1e-14)


def test_cv_and_accelerating_windows_from_motion():
    target = PolynomialMotion([[0, 10, 0], [0.5, 0, 0]])
    t = 0.1 * np.arange(10)
    cv = window_from_motion(target, PolynomialMotion([[0, 0, 0], [0, 1, 0]]), 1.0, t)
    acc = window_from_motion(target, PolynomialMotion([[0, 0, 0], [0, 1, 0], [0, 0.5, 0]]), 1.0, t)
    assert analyze_rank(build_observability_matrix(cv), 7).rank == 6
    assert analyze_rank(build_observability_matrix(acc), 7).verdict == "observable"


def test_excess_order_semantics():
    assert observer_excess_order(PolynomialMotion([[0, 0, 0], [1, 0, 0], [0, 1, 0]]), 1)
    assert not observer_excess_order(PolynomialMotion([[0, 0, 0], [1, 0, 0]]), 1)
    c = np.zeros((6, 3))
    c[1] = [1, 2, 3]
    c[2:] = 1e-14
    assert not observer_excess_order(PolynomialMotion(c), 1)


def test_stationary_target_two_samples():
    t = np.array([0.0, 0.5])
    target = PolynomialMotion([[1.0, 10.0, 0.5]])
    observer = PolynomialMotion([[0, 0, 0], [0, 1, 0], [0.3, 0.2, 0]])
    sol = recover_target_motion(window_from_motion(target, observer, 0.7, t), 0)
    assert sol.size == pytest.approx(0.7, abs=1e-8)
    np.testing.assert_allclose(sol.target_coefficients[0], [1.0, 10.0, 0.5], atol=1e-8)


def test_along_bearing_acceleration_three_samples():
    # target moving along y, observer accelerating on the same line
    t = np.array([0.0, 0.5, 1.0])
    target = PolynomialMotion([[0, 10, 0], [0, 0.2, 0]])
    observer = PolynomialMotion([[0, 0, 0], [0, 1, 0], [0, 0.5, 0]])
    w = window_from_motion(target, observer, 1.0, t)
    assert np.ptp(w.bearings, axis=0).max() == 0
    sol = recover_target_motion(w, 1)
    np.testing.assert_allclose(sol.target_coefficients, target.coefficients, atol=1e-8)
    assert sol.size == pytest.approx(1.0, abs=1e-8)


def test_constant_velocity_observer_rank_deficient():
    t = 0.5 * np.arange(5)
    target = PolynomialMotion([[2, 10, 0], [0.1, 0.2, 0]])
    observer = PolynomialMotion([[0, 0, 0], [0, 1, 0.1]])
    A, h = stack_discrete_system(window_from_motion(target, observer, 1.0, t), 1)
    assert np.linalg.norm(h) < 1e-12
    assert np.linalg.svd(A, compute_uv=False)[-1] < 1e-10
    with pytest.raises(UnobservableError) as exc:
        recover_motion(A, h)
    assert exc.value.null_direction.shape == (7,)


def test_too_few_samples_reported():
    t = np.array([0.0, 0.5])
    w = window_from_motion(PolynomialMotion([[0, 10, 0]]), PolynomialMotion([[0, 0, 0], [0, 1, 0], [0, 1, 0]]), 1.0, t)
    with pytest.raises(UnderdeterminedError, match="insufficient observations"):
        stack_discrete_system(w, 1)
    with pytest.raises(UnderdeterminedError):
        recover_motion(np.ones((3, 4)), np.ones(3))


def test_noise_free_recovery_identities(rng):
    t = 0.4 * np.arange(6)
    target = PolynomialMotion([[3, 12, 1], [0.3, -0.2, 0.1]])
    observer = PolynomialMotion([[0, 0, 0], [0.5, 1, 0], [0.2, 0.3, 0.1], [0.05, 0, 0.02]])
    w = window_from_motion(target, observer, 1.2, t)
    sol = recover_target_motion(w, 1)
    assert sol.residual_norm < 1e-9
    np.testing.assert_allclose(sol.target_coefficients, target.shifted(0.0).coefficients, atol=1e-8)
    rebuilt = sol.target_motion().position(t)
    direct = w.bearings * (sol.size / linearized_angle(w.angles))[:, None] + w.observer_positions
    np.testing.assert_allclose(rebuilt, direct, atol=1e-8)


def test_time_origin_shift():
    t = 5.0 + 0.5 * np.arange(4)
    target = PolynomialMotion([[0, 10, 0], [0.4, 0, 0]])
    observer = PolynomialMotion([[0, 0, 0], [0, 1, 0], [0, 0, 0.2]])
    sol = recover_target_motion(window_from_motion(target, observer, 1.0, t), 1)
    assert sol.time_origin == 5.0
    np.testing.assert_allclose(sol.target_motion().coefficients, target.coefficients, atol=1e-7)


def test_matches_normal_equations(rng):
    for _ in range(10):
        t = 0.3 * np.arange(10)
        target = PolynomialMotion([random_unit(rng) * 12, rng.uniform(-0.5, 0.5, 3)])
        observer = PolynomialMotion(np.vstack([np.zeros(3), rng.uniform(-1, 1, (3, 3)) * [[1], [0.5], [0.2]]]))
        w = window_from_motion(target, observer, 1.0, t)
        A, h = stack_discrete_system(w, 1)
        X_ne = np.linalg.solve(A.T @ A, A.T @ h)
        sol = recover_motion(A, h)
        assert np.max(np.abs(sol.relative_coefficients.reshape(-1) - X_ne[:-1])) < 1e-10
        assert abs(sol.size - X_ne[-1]) < 1e-10


def test_analyses_agree_for_constant_velocity_targets(rng):
    for trial in range(40):
        t, pt, _, _ = random_cv_pair(rng, k=6, dt=0.3)
        accel = (trial % 2) * rng.uniform(0.3, 1.0, 3)
        po = rng.uniform(-1, 1, 3) + t[:, None] * rng.uniform(-1, 1, 3) + 0.5 * t[:, None] ** 2 * accel
        w = window_from_positions(t, pt, po, 1.0)
        observable = analyze_rank(build_observability_matrix(w), 7).observable
        try:
            recover_target_motion(w, 1)
            solved = True
        except UnobservableError:
            solved = False
        assert observable == solved == bool(trial % 2)


def test_scenario_two_window_is_observable():
    truth = simulate_truth(preset("s2-line", runs=1))
    idx = np.arange(0, 100, 10)
    w = ObservationWindow(truth.times[idx], truth.bearings[idx], truth.angles[idx], truth.observer[idx, 0:3])
    assert analyze_rank(build_observability_matrix(w), 7).observable
    sol = recover_target_motion(w, 0)
    np.testing.assert_allclose(sol.target_coefficients[0], [0, 10, 0], atol=1e-8)


def test_report_serializes():
    doc = analyze_rank(np.diag([1.0, 1, 1, 1, 1, 1, 0]), 7).to_dict()
    assert doc["rank"] == 6 and doc["verdict"] == "unobservable"
    assert len(doc["null_basis"]) == 1 and abs(doc["null_basis"][0][6]) == 1.0
