import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bearing_angle import BearingAngleEstimator
from bearing_angle.errors import SchemaError
from bearing_angle.records import measurement_rows
from bearing_angle.sim.engine import simulate_batch
from bearing_angle.sim.presets import preset


def scenario_rows(name="s2-line", seed=5, duration=4.0):
    cfg = preset(name, runs=1, seed=seed, duration=duration)
    batch = simulate_batch(cfg)
    rec = batch.record(0)
    return cfg, rec, measurement_rows(rec.times, rec.bearings, rec.angles, rec.observer[:, 0:3])


def scenario_estimator(cfg, mode):
    return BearingAngleEstimator(mode=mode, dt=cfg.dt, initial_position=cfg.initial_position,
                                 initial_velocity=cfg.initial_velocity, initial_size=cfg.initial_size,
                                 initial_variance=cfg.initial_variance, **cfg.filter)


def test_params_round_trip():
    est = BearingAngleEstimator(mode="bearing_only", sigma_mu=0.02)
    params = est.get_params()
    assert params["mode"] == "bearing_only" and params["sigma_mu"] == 0.02
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(sigma_mu=0.5)
    assert est.sigma_mu == 0.02


@pytest.mark.parametrize("mode", ["bearing_angle", "bearing_only"])
def test_replay_is_bit_exact(mode):
    cfg, rec, X = scenario_rows()
    est = scenario_estimator(cfg, mode).fit(X)
    np.testing.assert_array_equal(est.estimates_, rec.estimates[mode][1:])
    np.testing.assert_array_equal(est.times_, rec.times[1:])
    assert np.all(est.flags_ == "measured")


def test_fit_transform_one_row_per_input():
    cfg, _, X = scenario_rows(duration=1.0)
    est = scenario_estimator(cfg, "bearing_angle")
    out = est.fit_transform(X)
    assert out.shape == (len(X), 7)
    np.testing.assert_array_equal(est.transform(X), out)


def test_gap_is_bridged_by_prediction():
    cfg, _, X = scenario_rows(duration=2.0)
    gapped = np.delete(X, np.s_[40:45], axis=0)
    est = scenario_estimator(cfg, "bearing_angle").fit(gapped)
    assert len(est.times_) == len(X)
    gap = np.flatnonzero(est.flags_ == "gap")
    np.testing.assert_array_equal(gap, np.arange(40, 45))
    np.testing.assert_allclose(est.times_[gap], X[40:45, 0], atol=1e-12)
    # predict-only steps: det(F P F^T + Q) > det(P) since det F = 1, and the
    # velocity/size variances gain sigma^2 each step
    P = est.covariances_[39:46]
    logdet = np.linalg.slogdet(P)[1]
    assert np.all(np.diff(logdet[:6]) > 0)
    assert logdet[6] < logdet[5]
    assert np.all(np.diff(P[:6, [3, 4, 5, 6], [3, 4, 5, 6]], axis=0) > 0)
    assert est.fit_transform(gapped).shape == (len(gapped), 7)


def test_missing_measurement_rows():
    cfg, _, X = scenario_rows(duration=1.0)
    X = X.copy()
    X[10, 1:5] = np.nan
    est = scenario_estimator(cfg, "bearing_angle").fit(X)
    assert est.flags_[10] == "missing"
    P = est.covariances_
    assert np.linalg.slogdet(P[10])[1] > np.linalg.slogdet(P[9])[1]


def test_default_initial_position_on_first_bearing():
    X = np.array([[0.0, 0, 1, 0, 2 * np.arctan(0.05), 0, 0, 0]])
    est = BearingAngleEstimator(initial_size=1.0, sigma_mu=0, sigma_w=0).fit(X)
    np.testing.assert_allclose(est.estimates_[0, 0:3], [0, 10, 0], atol=1e-9)


def test_predict_extrapolates():
    X = np.array([[0.0, 0, 1, 0, 0.1, 0, 0, 0]])
    est = BearingAngleEstimator(initial_velocity=[1.0, 0, 0]).fit(X)
    p = est.predict([est.state_.time, est.state_.time + 2.0])
    np.testing.assert_allclose(p[1] - p[0], 2.0 * est.state_.estimate[3:6])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        BearingAngleEstimator().predict([0.0])


@pytest.mark.parametrize("bad, column", [
    (np.zeros((0, 8)), "empty"),
    (np.zeros((3, 5)), "columns"),
    (np.array([[0.0, 0, 1, 0, 0.1, 0, 0, 0], [0.03, 0, 1, 0, 0.1, 0, 0, 0]]), "t"),
    (np.array([[0.0, 0, 2, 0, 0.1, 0, 0, 0]]), "gx"),
    (np.array([[0.0, 0, 1, 0, 2.0, 0, 0, 0]]), "theta"),
    (np.array([[0.0, 0, 1, 0, 0.1, np.nan, 0, 0]]), "pox"),
])
def test_schema_errors_name_the_problem(bad, column):
    with pytest.raises(SchemaError, match=column):
        BearingAngleEstimator().fit(bad)
