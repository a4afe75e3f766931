"""
Training and prediction with the motion model.

Training pushes the object many times per action and records how every
contact frame moved. Prediction turns each placed frame into an expert over
global object motions and takes the annealed mode of their weighted product.
"""
from dataclasses import dataclass

import numpy as np
import pandas as pd
from loguru import logger

from contact.environment import EnvironmentContactModel, sample_environment_contacts
from contact.frames import ContactFrame, FrameKind
from contact.models import ManipulatorContactModel
from density.annealing import AnnealConfig, anneal
from density.kernels import Bandwidths, MotionKernels
from density.truncation import (
    FailureStats,
    TruncationConfig,
    evaluate_with_rescaling,
    rescale_on_failure,
    truncated_exp,
)
from geometry.pose import Pose, compose, compose_arrays, dist_p, dist_q, inverse, inverse_arrays, quat_from_yaw, yaw_of
from motion.records import Action, MotionModel, record_push
from shapes.features import SurfaceFeature
from sim.params import ParameterDistributions, sample_params
from sim.pusher import STALL_FORCE, simulate_push
from sim.world import World, settle_pusher
from utils.errors import ModelError, RescaleLimitError, SimulationError
from utils.rng import make_rng


@dataclass(eq=False)
class MotionPrediction:
    """
    Args:
        action_id (str): Action the prediction is for.
        final_pose (Pose | None): compose(initial estimate, global motion).
        global_motion (Pose | None): Best motion in the object frame.
        likelihood (float): Product-of-experts value at the optimum.
        success (bool): False when every expert stayed at zero density.
        rounds (int): Bandwidth rescaling rounds used.
        reason (str): Failure description.
    """

    action_id: str
    final_pose: Pose | None = None
    global_motion: Pose | None = None
    likelihood: float = 0.0
    success: bool = True
    rounds: int = 0
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "final_pose": self.final_pose.to_array() if self.final_pose else None,
            "global_motion": self.global_motion.to_array() if self.global_motion else None,
            "likelihood": float(self.likelihood),
            "success": self.success,
            "rounds": self.rounds,
            "reason": self.reason,
        }


def local_to_global(m_local: Pose, h: Pose) -> Pose:
    """Object-frame motion from a frame's local motion: h⁻¹ ∘ m ∘ h."""
    return compose(compose(inverse(h), m_local), h)


def global_to_local(m_global: Pose, h: Pose) -> Pose:
    return compose(compose(h, m_global), inverse(h))


def train_motion_model(
    world: World,
    contact_model: ManipulatorContactModel,
    features: list[SurfaceFeature],
    actions: list[Action],
    samples_per_action: int,
    param_dists: ParameterDistributions,
    seed: int,
    env_model: EnvironmentContactModel | None = None,
    n_env_contacts: int = 10,
    dt: float = 0.01,
    stall_force: float = STALL_FORCE,
    sigma: Bandwidths | None = None,
) -> tuple[MotionModel, EnvironmentContactModel]:
    """
    Push the resting object `samples_per_action` times per action.

    Each push draws its parameters and a manipulator frame (by weight), centres
    the bumper on that frame's contact pose, places `n_env_contacts` floor
    contacts and records how every frame moved. Failed pushes are logged,
    counted in `MotionModel.skipped` and left out.

    Every push owns the random stream (seed, shape, action, index).
    """
    if samples_per_action < 1:
        raise ValueError(f"samples_per_action must be >= 1, got {samples_per_action}")
    shape_id = contact_model.shape_id or world.spec.name
    sigma = sigma or contact_model.sigma
    env_model = env_model if env_model is not None else EnvironmentContactModel(sigma=sigma, shape_id=shape_id)
    model = MotionModel(actions=list(actions), sigma=sigma, shape_id=shape_id)
    weights = contact_model.normalized_weights()
    rest = world.rest_pose

    for action in actions:
        skipped = 0
        for i in range(samples_per_action):
            rng = make_rng(seed, "push", shape_id, action.action_id, i)
            params = sample_params(param_dists, rng)
            manipulator = contact_model.frames[int(rng.choice(len(weights), p=weights))]
            pusher = settle_pusher(world, rest, world.place_pusher(manipulator.target))
            env_frames = sample_environment_contacts(features, n_env_contacts, rng, object_pose=rest)
            try:
                episode = simulate_push(world, rest, params, pusher, action, dt=dt, rng=rng, stall_force=stall_force)
                record = record_push(episode, [manipulator, *env_frames], action.action_id, params)
            except SimulationError as e:
                skipped += 1
                logger.warning(f"Skipping push {i} of '{shape_id}' / {action.action_id}: {e}")
                continue
            model.add(record)
            env_model.extend(env_frames)
        model.skipped[action.action_id] = skipped
        logger.info(
            f"Motion model '{shape_id}' / {action.action_id}: "
            f"{model.count(action.action_id)} pushes recorded, {skipped} skipped"
        )
    return model, env_model


@dataclass(eq=False)
class _Expert:
    kind: FrameKind
    p: np.ndarray
    q: np.ndarray
    a: np.ndarray
    size: int
    exponent: float = 1.0


def _subsample(n_pool: int, n_kernels: int, rng: np.random.Generator) -> np.ndarray:
    if n_pool <= n_kernels:
        return np.arange(n_pool)
    return np.sort(rng.choice(n_pool, size=n_kernels, replace=False))


def _build_expert(
    model: MotionModel,
    action_id: str,
    frame: ContactFrame,
    n_kernels: int,
    trunc: TruncationConfig,
    rng: np.random.Generator,
) -> tuple[_Expert, int]:
    """Kernel means of one frame's expert, shifted into object-frame motion space."""
    pool, motions = model.frame_pool(action_id, frame.kind)
    if not pool:
        raise ModelError(f"No {frame.kind.value} frames recorded for action '{action_id}'")
    chosen = _subsample(len(pool), n_kernels, rng)
    kernels = MotionKernels(
        [pool[k].u.p for k in chosen],
        [pool[k].u.q for k in chosen],
        [pool[k].r for k in chosen],
        [motions[k].p for k in chosen],
        [motions[k].q for k in chosen],
        np.ones(len(chosen)),
    )

    def evaluate(current: TruncationConfig):
        return kernels.terms(frame.r, frame.u, model.sigma, current)

    contact, used = evaluate_with_rescaling(evaluate, trunc)
    weighted = kernels.w * contact
    a = weighted / weighted.sum()
    keep = a > 0.0
    h_inv_p, h_inv_q = inverse_arrays(frame.h.p, frame.h.q)
    p, q = compose_arrays(h_inv_p, h_inv_q, kernels.m_p[keep], kernels.m_q[keep])
    p, q = compose_arrays(p, q, frame.h.p, frame.h.q)
    return _Expert(frame.kind, p, q, a[keep], len(chosen)), used.rounds


def _log_poe(experts: list[_Expert], sigma: Bandwidths, trunc: TruncationConfig, P, Q, chunk: int = 64):
    """Σ_i w_i log P_i(m) at candidate motions, -inf where any expert is zero."""
    total = np.zeros(len(P))
    stats = FailureStats()
    for expert in experts:
        density = np.empty(len(P))
        for start in range(0, len(P), chunk):
            gp, zp = truncated_exp(
                dist_p(P[start:start + chunk, None, :], expert.p[None], sigma.sigma_pm),
                trunc.delta_p,
                trunc.beta_p,
            )
            gq, zq = truncated_exp(
                dist_q(Q[start:start + chunk, None, :], expert.q[None], sigma.sigma_qm),
                trunc.delta_q,
                trunc.beta_q,
            )
            density[start:start + chunk] = (gp * gq) @ expert.a
            stats = stats + FailureStats(int(zp.sum()), int(zq.sum()), 0)
        with np.errstate(divide="ignore"):
            total = total + expert.exponent * np.log(density)
    return total, stats


def predict(
    model: MotionModel,
    action_id: str,
    frames: list[ContactFrame],
    initial_pose_estimate: Pose,
    n_env_kernels: int = 5000,
    n_manipulator_kernels: int = 500,
    anneal_config: AnnealConfig | None = None,
    trunc: TruncationConfig | None = None,
    rng: np.random.Generator | None = None,
) -> MotionPrediction:
    """
    Predict where the object ends up after `action_id`.

    Every placed frame becomes an expert whose kernels are recorded local
    motions of similar training frames, weighted by contact similarity and
    conjugated by the frame's h into object-frame motions. The manipulator
    expert's exponent is the ratio of environment to manipulator kernels.
    """
    if not frames:
        raise ModelError("Motion prediction needs at least one placed frame")
    model.action(action_id)
    anneal_config = anneal_config or AnnealConfig()
    trunc = trunc or TruncationConfig()
    rng = rng if rng is not None else np.random.default_rng(0)

    experts = []
    rounds = 0
    try:
        for frame in frames:
            n_kernels = n_manipulator_kernels if frame.kind is FrameKind.MANIPULATOR else n_env_kernels
            expert, used = _build_expert(model, action_id, frame, n_kernels, trunc, rng)
            experts.append(expert)
            rounds = max(rounds, used)
    except RescaleLimitError as e:
        logger.warning(f"Motion prediction for {action_id} failed: {e}")
        return MotionPrediction(action_id=action_id, success=False, rounds=e.rounds, reason=str(e))

    env_sizes = [e.size for e in experts if e.kind is not FrameKind.MANIPULATOR]
    for expert in experts:
        if expert.kind is FrameKind.MANIPULATOR and env_sizes:
            expert.exponent = float(np.mean(env_sizes)) / expert.size

    P0 = np.concatenate([e.p for e in experts])
    Q0 = np.concatenate([e.q for e in experts])
    seed_w = np.concatenate([e.a / len(experts) for e in experts])
    if anneal_config.planar:
        Q0 = quat_from_yaw(yaw_of(Q0))

    current = trunc.reset()
    while True:
        active = current

        def score(P, Q):
            values, _ = _log_poe(experts, model.sigma, active, P, Q)
            return values

        best, best_score = anneal(score, (P0, Q0), anneal_config, rng, weights=seed_w)
        if np.isfinite(best_score):
            break
        _, stats = _log_poe(experts, model.sigma, active, P0, Q0)
        try:
            current = rescale_on_failure(current, stats)
        except RescaleLimitError as e:
            logger.warning(f"Motion prediction for {action_id}: product of experts is zero everywhere")
            return MotionPrediction(action_id=action_id, success=False, rounds=e.rounds, reason=str(e))

    logger.debug(f"Motion prediction {action_id}: {len(experts)} experts, log PoE {best_score:.4g}")
    return MotionPrediction(
        action_id=action_id,
        final_pose=compose(initial_pose_estimate, best),
        global_motion=best,
        likelihood=float(np.exp(best_score)),
        success=True,
        rounds=max(rounds, current.rounds),
    )


def training_displacements(model: MotionModel, action_id: str) -> pd.DataFrame:
    """Global motion of every recorded push for one action."""
    rows = []
    for i, record in enumerate(model.records[model.action(action_id).action_id]):
        m = record.global_motion
        rows.append(
            {
                "push_id": i,
                "action_id": action_id,
                "mass": record.params.mass,
                "ground_friction": record.params.ground_friction,
                "dx": float(m.p[0]),
                "dy": float(m.p[1]),
                "dyaw": float(m.yaw),
                "distance": float(np.linalg.norm(m.p[:2])),
            }
        )
    return pd.DataFrame(rows, columns=["push_id", "action_id", "mass", "ground_friction", "dx", "dy", "dyaw", "distance"])
