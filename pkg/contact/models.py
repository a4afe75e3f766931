"""Manipulator contact model and object position model."""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from contact.frames import ContactFrame, FrameKind
from density.kernels import Bandwidths
from geometry.pose import Pose, compose, dist_r, inverse
from shapes.features import SurfaceFeature, feature_arrays
from shapes.mesh import TriMesh, closest_point
from utils.errors import ModelError


def _normalized_weights(frames) -> np.ndarray:
    w = np.array([f.w for f in frames], dtype=float)
    total = w.sum()
    if total <= 0.0:
        return np.full(len(frames), 1.0 / len(frames))
    return w / total


@dataclass(eq=False)
class ManipulatorContactModel:
    frames: list[ContactFrame]
    sigma: Bandwidths = field(default_factory=Bandwidths)
    shape_id: str = ""
    link_mesh_id: str = "bumper"
    delta_c: float = 0.01

    def __post_init__(self):
        if not self.frames:
            raise ModelError("Manipulator contact model has no frames")
        if any(f.kind is not FrameKind.MANIPULATOR for f in self.frames):
            raise ModelError("Manipulator contact model holds a non-manipulator frame")

    def __len__(self):
        return len(self.frames)

    def normalized_weights(self) -> np.ndarray:
        return _normalized_weights(self.frames)

    def to_dict(self) -> dict:
        return {
            "shape_id": self.shape_id,
            "link_mesh_id": self.link_mesh_id,
            "delta_c": self.delta_c,
            "sigma": self.sigma.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManipulatorContactModel":
        return cls(
            frames=[ContactFrame.from_dict(f) for f in data["frames"]],
            sigma=Bandwidths.from_dict(data["sigma"]),
            shape_id=data["shape_id"],
            link_mesh_id=data["link_mesh_id"],
            delta_c=data["delta_c"],
        )


@dataclass(eq=False)
class PositionModel:
    frames: list[ContactFrame]
    sigma: Bandwidths = field(default_factory=Bandwidths)
    shape_id: str = ""

    def __post_init__(self):
        if not self.frames:
            raise ModelError("Position model has no frames")

    def __len__(self):
        return len(self.frames)

    def normalized_weights(self) -> np.ndarray:
        return _normalized_weights(self.frames)

    def to_dict(self) -> dict:
        return {
            "shape_id": self.shape_id,
            "sigma": self.sigma.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PositionModel":
        return cls(
            frames=[ContactFrame.from_dict(f) for f in data["frames"]],
            sigma=Bandwidths.from_dict(data["sigma"]),
            shape_id=data["shape_id"],
        )


def manipulator_weight(distance: float, delta_c: float, lambda_c: float) -> float:
    """Piecewise contact weight: 1 at contact, exp(−λd²) inside δ_c, 0 beyond."""
    if distance >= delta_c:
        return 0.0
    if distance <= 0.0:
        return 1.0
    return float(np.exp(-lambda_c * distance * distance))


def train_manipulator_contact_model(
    features: list[SurfaceFeature],
    link_mesh: TriMesh,
    link_pose: Pose,
    delta_c: float = 0.01,
    lambda_c: float = 100.0,
    object_pose: Pose | None = None,
    shape_id: str = "",
    link_mesh_id: str = "bumper",
    sigma: Bandwidths | None = None,
) -> ManipulatorContactModel:
    """
    Keep the features within δ_c of the placed link.

    Each retained frame's u is the pose of its closest link point (with the
    link's orientation) relative to the feature, so ‖u.p‖ is that distance.
    """
    object_pose = object_pose or Pose.identity()
    positions, _, _ = feature_arrays(features)
    closest, distances = closest_point(link_mesh, link_pose.inverse().transform_points(positions))
    closest = link_pose.transform_points(closest)
    frames = []
    for feature, point, distance in zip(features, closest, distances):
        w = manipulator_weight(float(distance), delta_c, lambda_c)
        if w <= 0.0:
            continue
        u = compose(inverse(feature.v), Pose(p=point, q=link_pose.q))
        frames.append(ContactFrame.create(feature, u, FrameKind.MANIPULATOR, object_pose, w))
    if not frames:
        raise ModelError(
            f"No feature of '{shape_id}' lies within {delta_c} m of the link; "
            "check the training contact placement"
        )
    logger.info(f"Manipulator contact model '{shape_id}': kept {len(frames)}/{len(features)} features")
    return ManipulatorContactModel(
        frames=frames,
        sigma=sigma or Bandwidths(),
        shape_id=shape_id,
        link_mesh_id=link_mesh_id,
        delta_c=delta_c,
    )


def train_position_model(
    features: list[SurfaceFeature],
    object_pose: Pose,
    sigma: Bandwidths | None = None,
    shape_id: str = "",
) -> PositionModel:
    """Frames with u = h, weighted by descriptor distance to the mean descriptor."""
    if not features:
        raise ModelError("Position model needs at least one feature")
    sigma = sigma or Bandwidths()
    _, _, descriptors = feature_arrays(features)
    mean_r = descriptors.mean(axis=0)
    raw = dist_r(descriptors, mean_r, sigma.sigma_r)
    total = raw.sum()
    if total <= 0.0:
        logger.warning(f"Position model '{shape_id}': all descriptors equal, using uniform weights")
        weights = np.full(len(features), 1.0 / len(features))
    else:
        weights = raw / total
    frames = []
    for feature, w in zip(features, weights):
        h = compose(inverse(feature.v), object_pose)
        frames.append(ContactFrame(v=feature.v, r=feature.r, u=h, h=h, kind=FrameKind.POSITION, w=float(w)))
    return PositionModel(frames=frames, sigma=sigma, shape_id=shape_id)


def link_contact_frames(model: ManipulatorContactModel, object_pose: Pose) -> list[Pose]:
    """Link pose each trained frame implies for an object resting at `object_pose`."""
    return [compose(compose(object_pose, inverse(f.h)), f.u) for f in model.frames]
