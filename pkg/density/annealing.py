"""Simulated annealing over SE(3) (or the planar x, y, yaw subset) for density modes."""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from geometry.pose import Pose, quat_from_axis_angle, quat_multiply, quat_normalize
from utils.errors import ConfigError


@dataclass(frozen=True)
class AnnealConfig:
    """
    Args:
        n_candidates (int): Candidates drawn from the seeds.
        n_steps (int): Perturbation steps per candidate.
        t_start (float): Initial temperature.
        t_end (float): Final temperature; decay is geometric.
        linear_step (float): Translation proposal std at temperature 1, metres.
        angular_step (float): Rotation proposal std at temperature 1, radians.
        planar (bool): Restrict proposals to x, y and yaw.
    """

    n_candidates: int = 500
    n_steps: int = 100
    t_start: float = 1.0
    t_end: float = 1e-3
    linear_step: float = 0.1
    angular_step: float = 0.2
    planar: bool = True

    def __post_init__(self):
        if self.n_candidates < 1 or self.n_steps < 1:
            raise ConfigError(
                f"Annealing needs n_candidates, n_steps >= 1, got {self.n_candidates}, {self.n_steps}"
            )
        if not 0.0 < self.t_end <= self.t_start:
            raise ConfigError(f"Need 0 < t_end <= t_start, got {self.t_end}, {self.t_start}")

    def temperatures(self) -> np.ndarray:
        if self.n_steps == 1:
            return np.array([self.t_start])
        return np.geomspace(self.t_start, self.t_end, self.n_steps)


def batched(score):
    """Adapt a `Pose -> float` score to the batched `(P, Q) -> scores` form."""

    def wrapper(P, Q):
        return np.array([score(Pose(p=p, q=q)) for p, q in zip(P, Q)], dtype=float)

    return wrapper


def _seed_arrays(seeds):
    if isinstance(seeds, tuple) and len(seeds) == 2 and not isinstance(seeds[0], Pose):
        P, Q = seeds
        return np.asarray(P, dtype=float).reshape(-1, 3), quat_normalize(np.asarray(Q, dtype=float).reshape(-1, 4))
    seeds = list(seeds)
    return np.array([s.p for s in seeds]), np.array([s.q for s in seeds])


def _propose(P, Q, temperature, config: AnnealConfig, rng: np.random.Generator):
    n = len(P)
    step = rng.normal(scale=config.linear_step * temperature, size=(n, 3))
    if config.planar:
        step[:, 2] = 0.0
        axes = np.tile([0.0, 0.0, 1.0], (n, 1))
        angles = rng.normal(scale=config.angular_step * temperature, size=n)
        # yaw about the world z axis keeps upright candidates upright
        rotation = quat_from_axis_angle(axes, angles)
        return P + step, quat_normalize(quat_multiply(rotation, Q))
    rotvec = rng.normal(scale=config.angular_step * temperature, size=(n, 3))
    angles = np.linalg.norm(rotvec, axis=1)
    axes = np.where(angles[:, None] > 0.0, rotvec / np.where(angles > 0.0, angles, 1.0)[:, None], [0.0, 0.0, 1.0])
    rotation = quat_from_axis_angle(axes, angles)
    return P + step, quat_normalize(quat_multiply(Q, rotation))


def anneal(score, seeds, config: AnnealConfig, rng: np.random.Generator, weights=None):
    """
    Maximise `score` starting from candidates drawn among `seeds`.

    Args:
        score: Batched callable `(P (n,3), Q (n,4)) -> (n,)`; -inf marks zero density.
        seeds: Sequence of Pose, or a (P, Q) array pair.
        config (AnnealConfig): Schedule and proposal scales.
        rng (Generator): Source of every random draw.
        weights (array | None): Discrete sampling weights over the seeds.

    Returns:
        (best Pose, best score). Never worse than the best seed.
    """
    P0, Q0 = _seed_arrays(seeds)
    if len(P0) == 0:
        raise ValueError("anneal needs at least one seed")
    seed_scores = np.asarray(score(P0, Q0), dtype=float)
    best_index = int(np.argmax(seed_scores))
    best_p, best_q, best_s = P0[best_index].copy(), Q0[best_index].copy(), seed_scores[best_index]

    if weights is None:
        probabilities = np.full(len(P0), 1.0 / len(P0))
    else:
        probabilities = np.asarray(weights, dtype=float)
        probabilities = probabilities / probabilities.sum()
    picks = rng.choice(len(P0), size=config.n_candidates, p=probabilities)
    P, Q = P0[picks].copy(), Q0[picks].copy()
    current = seed_scores[picks].copy()

    for temperature in config.temperatures():
        P_new, Q_new = _propose(P, Q, temperature, config, rng)
        proposed = np.asarray(score(P_new, Q_new), dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            gain = proposed - current
            gain = np.where(np.isneginf(proposed) & np.isneginf(current), 0.0, gain)
            accept = (gain >= 0.0) | (rng.random(len(P)) < np.exp(np.minimum(gain, 0.0) / temperature))
        P[accept], Q[accept], current[accept] = P_new[accept], Q_new[accept], proposed[accept]
        top = int(np.argmax(current))
        if current[top] > best_s:
            best_p, best_q, best_s = P[top].copy(), Q[top].copy(), current[top]

    logger.debug(f"Annealing finished: best score {best_s:.6g} over {config.n_candidates} candidates")
    return Pose(p=best_p, q=best_q), float(best_s)
