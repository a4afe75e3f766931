from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from contact.environment import place_environment_contacts
from evaluation.accuracy import centroid_baseline
from geometry.pose import Pose
from motion.model import MotionPrediction, predict
from query.density import QueryDensity, build_query_density, estimate_pose, placed_manipulator_frame
from query.library import LibraryEntry, ModelLibrary, select_model
from shapes.cloud import PointCloud
from shapes.features import SurfaceFeature, extract_features
from utils.config_loader import RunConfig
from utils.errors import DensityError, ModelError, PushcastError
from utils.rng import spawn


@dataclass(eq=False)
class Placement:
    """Everything one library entry predicts before an action is chosen."""

    entry: LibraryEntry
    object_pose: Pose
    pose_likelihood: float
    robot_placement: Pose
    placement_likelihood: float
    frames: list = field(default_factory=list)


@dataclass(eq=False)
class PredictionRecord:
    entry_id: str
    h_r: dict
    placement: Placement | None
    motions: dict
    config_hash: str = ""
    error: str = ""

    @property
    def success(self) -> bool:
        return self.placement is not None and all(m.success for m in self.motions.values())

    def to_dict(self) -> dict:
        placement = self.placement
        return {
            "entry": self.entry_id,
            "h_r": self.h_r,
            "estimated_pose": placement.object_pose.to_array() if placement else None,
            "pose_likelihood": placement.pose_likelihood if placement else None,
            "robot_placement": placement.robot_placement.to_array() if placement else None,
            "placement_likelihood": placement.placement_likelihood if placement else None,
            "predictions": {k: m.to_dict() for k, m in sorted(self.motions.items())},
            "config_hash": self.config_hash,
            "success": self.success,
            "error": self.error,
        }


class PushPredictor:
    """
    Runs the prediction side of the pipeline for one observed cloud: model
    selection, object pose and robot placement estimates, contact placement
    and per-action motion prediction.
    """

    def __init__(self, config: RunConfig, library: ModelLibrary):
        self._config = config
        self._library = library

    def run(
        self,
        cloud: PointCloud,
        action_ids: list[str] | None,
        rng: np.random.Generator,
        selection: str | None = None,
    ) -> PredictionRecord:
        logger.info(f"Predicting pushes for a cloud of {len(cloud)} points...")
        entry_id, h_r, placement, motions, error = "", {}, None, {}, ""
        try:
            features = extract_features(cloud, self._config.objects.neighborhood_radius)
            entry, manipulator_qd, h_r = self.choose_entry(features, rng, selection)
            entry_id = entry.shape_id
            placement = self.place(entry, features, cloud, manipulator_qd, rng)
            for action_id in action_ids or [a.action_id for a in entry.motion.actions]:
                motions[action_id] = self.predict_motion(placement, action_id, rng)
        except PushcastError as e:
            error = str(e)
            logger.error(f"Prediction failed: {e}")
        finally:
            logger.info(f"Prediction finished for entry '{entry_id or '-'}'.")
        return PredictionRecord(entry_id, h_r, placement, motions, self._library.config_hash, error)

    def choose_entry(self, features: list[SurfaceFeature], rng: np.random.Generator, selection: str | None = None):
        """Adaptive selection by H_r, or a fixed library entry."""
        selection = selection or self._config.prediction.selection
        if selection == "adaptive":
            return select_model(
                self._library,
                features,
                rng,
                n_kernels=self._config.query.manipulator_kernels,
                trunc=self._config.truncation_config(),
                mode=self._config.query.weighting_mode,
            )
        entry = self._library[selection]
        qd = self._query(entry.contact.frames, features, self._config.query.manipulator_kernels, entry, rng)
        return entry, qd, {entry.shape_id: qd.h_r}

    def place(
        self,
        entry: LibraryEntry,
        features: list[SurfaceFeature],
        cloud: PointCloud,
        manipulator_qd: QueryDensity,
        rng: np.random.Generator,
    ) -> Placement:
        anneal = self._config.anneal_config()
        if self._config.prediction.pose_source == "centroid":
            object_pose, pose_likelihood = centroid_baseline(cloud), float("nan")
        else:
            position_qd = self._query(entry.position.frames, features, self._config.query.pose_kernels, entry, rng)
            object_pose, pose_likelihood = estimate_pose(position_qd, anneal, spawn(rng, "pose"))
        contact_pose, placement_likelihood = estimate_pose(manipulator_qd, anneal, spawn(rng, "placement"))
        manipulator = placed_manipulator_frame(manipulator_qd, contact_pose, object_pose)
        environment = place_environment_contacts(
            features,
            entry.environment,
            n_contacts=self._config.environment.prediction_contacts,
            n_samples=self._config.environment.samples,
            trunc=self._config.truncation_config(),
            rng=spawn(rng, "environment"),
            object_pose=object_pose,
        )
        logger.debug(f"'{entry.shape_id}': object at {object_pose}, contact at {contact_pose}")
        return Placement(
            entry=entry,
            object_pose=object_pose,
            pose_likelihood=pose_likelihood,
            robot_placement=contact_pose,
            placement_likelihood=placement_likelihood,
            frames=[manipulator, *environment],
        )

    def predict_motion(self, placement: Placement, action_id: str, rng: np.random.Generator) -> MotionPrediction:
        try:
            return predict(
                placement.entry.motion,
                action_id,
                placement.frames,
                placement.object_pose,
                n_env_kernels=self._config.motion.environment_kernels,
                n_manipulator_kernels=self._config.motion.manipulator_kernels,
                anneal_config=self._config.anneal_config(),
                trunc=self._config.truncation_config(),
                rng=spawn(rng, "motion", action_id),
            )
        except (DensityError, ModelError) as e:
            logger.warning(f"Motion prediction for {action_id} failed: {e}")
            return MotionPrediction(action_id=action_id, success=False, reason=str(e))

    def _query(self, frames, features, n_kernels: int, entry: LibraryEntry, rng: np.random.Generator) -> QueryDensity:
        return build_query_density(
            frames,
            features,
            n_kernels,
            spawn(rng, "query", entry.shape_id),
            sigma=entry.contact.sigma,
            trunc=self._config.truncation_config(),
            mode=self._config.query.weighting_mode,
            model_id=entry.shape_id,
        )
