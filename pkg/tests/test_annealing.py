import numpy as np
import pytest

from density.annealing import AnnealConfig, anneal, batched
from geometry.pose import Pose, quat_from_yaw, yaw_of
from utils.errors import ConfigError

TARGET = np.array([0.05, -0.03])
TARGET_YAW = 0.4


def peaked_score(P, Q):
    """Log of a narrow planar bump at TARGET / TARGET_YAW."""
    linear = np.sum((P[:, :2] - TARGET) ** 2, axis=1) / 1e-4
    angular = (1.0 - np.abs(Q @ quat_from_yaw(TARGET_YAW))) / 0.01
    return -(linear + angular)


def _seeds():
    P = np.array([[0.0, 0.0, 0.1], [0.2, 0.2, 0.1]])
    Q = np.stack([quat_from_yaw(0.0), quat_from_yaw(1.0)])
    return P, Q


def test_anneal_never_loses_the_best_seed():
    P, Q = _seeds()
    best, score = anneal(peaked_score, (P, Q), AnnealConfig(n_candidates=20, n_steps=10), np.random.default_rng(0))
    assert score >= peaked_score(P, Q).max()
    assert score == pytest.approx(peaked_score(best.p[None], best.q[None])[0])


def test_anneal_finds_planar_peak():
    config = AnnealConfig(n_candidates=200, n_steps=100)
    best, _ = anneal(peaked_score, _seeds(), config, np.random.default_rng(1))
    assert np.linalg.norm(best.p[:2] - TARGET) < 0.005
    assert abs(float(yaw_of(best.q)) - TARGET_YAW) < np.radians(3.0)


def test_planar_mode_keeps_candidates_upright():
    best, _ = anneal(peaked_score, _seeds(), AnnealConfig(n_candidates=50, n_steps=20), np.random.default_rng(2))
    assert best.p[2] == pytest.approx(0.1)
    assert best.q[1] == pytest.approx(0.0, abs=1e-12)
    assert best.q[2] == pytest.approx(0.0, abs=1e-12)


def test_anneal_is_deterministic_per_seed():
    config = AnnealConfig(n_candidates=30, n_steps=15)
    a, sa = anneal(peaked_score, _seeds(), config, np.random.default_rng(5))
    b, sb = anneal(peaked_score, _seeds(), config, np.random.default_rng(5))
    assert sa == sb
    np.testing.assert_array_equal(a.p, b.p)
    np.testing.assert_array_equal(a.q, b.q)


def test_anneal_accepts_pose_seeds_and_scalar_scores():
    seeds = [Pose.planar(0.0, 0.0, 0.0, 0.1), Pose.planar(0.1, 0.0, 0.5, 0.1)]

    def score(pose: Pose) -> float:
        return float(peaked_score(pose.p[None], pose.q[None])[0])

    best, value = anneal(batched(score), seeds, AnnealConfig(n_candidates=10, n_steps=5), np.random.default_rng(3))
    assert value >= max(score(s) for s in seeds)
    assert isinstance(best, Pose)


def test_zero_density_everywhere_returns_minus_infinity():
    def nothing(P, Q):
        return np.full(len(P), -np.inf)

    _, value = anneal(nothing, _seeds(), AnnealConfig(n_candidates=5, n_steps=3), np.random.default_rng(0))
    assert value == -np.inf


def test_temperatures_decay_geometrically():
    temperatures = AnnealConfig(n_steps=4, t_start=1.0, t_end=1e-3).temperatures()
    np.testing.assert_allclose(temperatures, [1.0, 0.1, 0.01, 0.001])


def test_bad_schedule_is_a_config_error():
    with pytest.raises(ConfigError):
        AnnealConfig(t_start=1e-3, t_end=1.0)
    with pytest.raises(ConfigError):
        AnnealConfig(n_candidates=0)
