"""
Environment contact model.

Training places floor contacts by sampling features in proportion to
w_Z · w_CD · w_AG (low, outlying and spread out). Prediction scores uniformly
drawn candidates against the trained frames and keeps the likeliest.
"""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from contact.frames import ContactFrame, FrameKind
from density.kernels import Bandwidths, ContactKernels
from density.truncation import FailureStats, TruncationConfig, evaluate_with_rescaling
from geometry.pose import Pose
from shapes.features import SurfaceFeature, feature_arrays
from utils.errors import ModelError, RescaleLimitError


@dataclass(eq=False)
class EnvironmentContactModel:
    frames: list[ContactFrame] = field(default_factory=list)
    sigma: Bandwidths = field(default_factory=Bandwidths)
    shape_id: str = ""

    def __len__(self):
        return len(self.frames)

    def extend(self, frames: list[ContactFrame]) -> None:
        if any(f.kind is not FrameKind.ENVIRONMENT for f in frames):
            raise ModelError("Environment model only accepts environment frames")
        self.frames.extend(frames)

    def kernels(self) -> ContactKernels:
        if not self.frames:
            raise ModelError(f"Environment contact model '{self.shape_id}' is empty")
        return ContactKernels(
            [f.u.p for f in self.frames],
            [f.u.q for f in self.frames],
            [f.r for f in self.frames],
            [f.w for f in self.frames],
        )

    def to_dict(self) -> dict:
        return {
            "shape_id": self.shape_id,
            "sigma": self.sigma.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnvironmentContactModel":
        return cls(
            frames=[ContactFrame.from_dict(f) for f in data["frames"]],
            sigma=Bandwidths.from_dict(data["sigma"]),
            shape_id=data["shape_id"],
        )


def floor_relation(feature: SurfaceFeature) -> Pose:
    """u = (0, 0, −z): the floor point straight below the feature."""
    return Pose.from_translation(0.0, 0.0, -float(feature.v.p[2]))


def _z_weights(positions: np.ndarray) -> np.ndarray:
    z = np.maximum(positions[:, 2], 0.0)
    z_max = z.max()
    if z_max <= 0.0:
        return np.ones(len(positions))
    return np.exp(-z / z_max)


def _cd_weights(positions: np.ndarray) -> np.ndarray:
    d2 = np.sum((positions - positions.mean(axis=0)) ** 2, axis=1)
    top = d2.max()
    if top <= 0.0:
        return np.ones(len(positions))
    return d2 / top


def _ag_factor(positions: np.ndarray, contact: np.ndarray) -> np.ndarray:
    d2 = np.sum((positions - contact) ** 2, axis=1)
    top = d2.max()
    if top <= 0.0:
        return np.zeros(len(positions))
    return d2 / top


def weight_z(x: SurfaceFeature, X: list[SurfaceFeature]) -> float:
    z_max = max(max(f.v.p[2] for f in X), 0.0)
    if z_max <= 0.0:
        return 1.0
    return float(np.exp(-max(x.v.p[2], 0.0) / z_max))


def weight_cd(x: SurfaceFeature, X: list[SurfaceFeature]) -> float:
    positions, _, _ = feature_arrays(X)
    centroid = positions.mean(axis=0)
    top = np.max(np.sum((positions - centroid) ** 2, axis=1))
    if top <= 0.0:
        return 1.0
    return float(np.sum((x.v.p - centroid) ** 2) / top)


def weight_ag(x: SurfaceFeature, X: list[SurfaceFeature], C_e: list) -> float:
    """Product over placed contacts of normalised squared distance; 1 when none are placed."""
    positions, _, _ = feature_arrays(X)
    value = 1.0
    for c in C_e:
        p_c = c.v.p
        top = np.max(np.sum((positions - p_c) ** 2, axis=1))
        value *= float(np.sum((x.v.p - p_c) ** 2) / top) if top > 0.0 else 0.0
    return value


def sample_environment_contacts(
    features: list[SurfaceFeature],
    n_contacts: int,
    rng: np.random.Generator,
    object_pose: Pose | None = None,
) -> list[ContactFrame]:
    """Draw floor contacts one by one, re-weighting anti-grouping after each draw."""
    if n_contacts < 1:
        raise ValueError(f"n_contacts must be >= 1, got {n_contacts}")
    if not features:
        raise ModelError("Cannot place environment contacts on an empty feature set")
    object_pose = object_pose or Pose.identity()
    positions, _, _ = feature_arrays(features)
    base = _z_weights(positions) * _cd_weights(positions)
    grouping = np.ones(len(features))
    chosen = []
    for _ in range(n_contacts):
        weights = base * grouping
        if weights.sum() <= 0.0:
            weights = grouping
        if weights.sum() <= 0.0:
            weights = np.ones(len(features))
            weights[chosen] = 0.0
            if weights.sum() <= 0.0:
                weights = np.ones(len(features))
        index = int(rng.choice(len(features), p=weights / weights.sum()))
        chosen.append(index)
        grouping = grouping * _ag_factor(positions, positions[index])
    return [
        ContactFrame.create(features[i], floor_relation(features[i]), FrameKind.ENVIRONMENT, object_pose)
        for i in chosen
    ]


def place_environment_contacts(
    features: list[SurfaceFeature],
    env_model: EnvironmentContactModel,
    n_contacts: int = 5,
    n_samples: int = 100,
    trunc: TruncationConfig | None = None,
    rng: np.random.Generator | None = None,
    object_pose: Pose | None = None,
) -> list[ContactFrame]:
    """
    Pick each contact as the likeliest of `n_samples` uniformly drawn candidates
    under the trained environment frames.
    """
    if not features:
        raise ModelError("Cannot place environment contacts on an empty feature set")
    kernels = env_model.kernels()
    trunc = trunc or TruncationConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    object_pose = object_pose or Pose.identity()
    sigma = env_model.sigma
    placed = []
    used: set[int] = set()
    for _ in range(n_contacts):
        picks = rng.integers(0, len(features), size=n_samples)
        candidates = [features[i] for i in picks]
        relations = [floor_relation(f) for f in candidates]

        def evaluate(current: TruncationConfig):
            scores = np.empty(len(candidates))
            stats = FailureStats()
            for k, (feature, u) in enumerate(zip(candidates, relations)):
                values, zeros = kernels.terms(feature.r, u, sigma, current)
                scores[k] = float(np.dot(kernels.w, values))
                stats = stats + zeros
            return scores, stats

        try:
            scores, _ = evaluate_with_rescaling(evaluate, trunc)
        except RescaleLimitError as e:
            logger.warning(f"Environment contact skipped: {e}")
            continue
        scores[np.isin(picks, list(used))] = -np.inf
        if not np.isfinite(scores).any():
            logger.warning("Environment contact skipped: every candidate is already placed")
            continue
        best = int(np.argmax(scores))
        used.add(int(picks[best]))
        placed.append(
            ContactFrame.create(candidates[best], relations[best], FrameKind.ENVIRONMENT, object_pose)
        )
    return placed
