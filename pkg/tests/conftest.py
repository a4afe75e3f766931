import numpy as np
import pytest

from contact.models import train_manipulator_contact_model
from geometry.pose import Pose, quat_from_matrix
from pipeline.builder import create_library
from shapes.cloud import sample_full_cloud
from shapes.features import SurfaceFeature, extract_features
from shapes.mesh import ShapeSpec
from sim.params import PhysicalParams
from sim.world import make_world
from utils.config_loader import RunConfig


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def cube_spec():
    return ShapeSpec("cube", (0.2,), name="cube")


@pytest.fixture(scope="session")
def cube_world(cube_spec):
    return make_world(cube_spec)


@pytest.fixture(scope="session")
def cube_features(cube_world):
    cloud = sample_full_cloud(cube_world.mesh, 5000.0, seed=3, pose=cube_world.rest_pose)
    return extract_features(cloud, 0.03)


@pytest.fixture(scope="session")
def cube_contact_model(cube_world, cube_features):
    return train_manipulator_contact_model(
        cube_features,
        cube_world.bumper_mesh,
        cube_world.training_link_pose(),
        object_pose=cube_world.rest_pose,
        shape_id="cube",
    )


@pytest.fixture
def params():
    return PhysicalParams(mass=0.5, ground_friction=0.3, pusher_friction=0.5)


@pytest.fixture
def flat_feature():
    """Feature on a vertical face, normal along −x, k1 up."""
    frame = np.column_stack([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    return SurfaceFeature(v=Pose(p=[-0.1, 0.02, 0.05], q=quat_from_matrix(frame)), r=(0.0, 0.0))


@pytest.fixture(scope="session")
def tiny_config(tmp_path_factory):
    """Small counts so a full train/predict cycle finishes in seconds."""
    out = tmp_path_factory.mktemp("tiny") / "out"
    return RunConfig.from_dict(
        {
            "objects": {"cloud_density": 3000.0, "neighborhood_radius": 0.035},
            "training": {"samples_per_action": 4, "mass": 0.5, "ground_friction": 0.3},
            "actions": {"count": 2},
            "environment": {"samples": 3},
            "query": {"manipulator_kernels": 60, "pose_kernels": 150},
            "motion": {"environment_kernels": 40, "manipulator_kernels": 10},
            "annealing": {"candidates": 30, "steps": 20},
            "experiments": {
                "selection_conditions": 1,
                "pose_runs": 2,
                "pose_objects": [{"kind": "cube", "dimensions": [0.2], "name": "cube"}],
                "biasing_conditions": 1,
                "biasing_ground_truth_samples": 1,
                "biasing_objects": ["cube"],
            },
            "output": {"directory": str(out), "library": str(out / "library.json")},
        }
    )


@pytest.fixture(scope="session")
def tiny_library(tiny_config):
    return create_library(tiny_config)
