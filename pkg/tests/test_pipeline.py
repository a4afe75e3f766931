from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from evaluation.experiments import (
    BIAS_LEVELS,
    SELECTION_MODES,
    biased_distributions,
    run_biasing_experiment,
    run_cells,
    run_pose_experiment,
    run_selection_experiment,
)
from interaction.manager import PushPredictor
from pipeline.builder import create_world
from query.library import load_library, save_library
from shapes.cloud import sample_partial_cloud
from sim.params import preset
from utils.errors import ConfigError
from utils.rng import make_rng
from utils.serialization import dumps


def _square(i):
    return i * i


def _partial_cube(config, x=0.05, y=-0.03, yaw=0.3):
    world = create_world(config, config.shape("cube"))
    pose = world.object_pose(x, y, yaw)
    cloud = sample_partial_cloud(world.mesh, pose, config.objects.viewpoint, config.objects.cloud_density, seed=21)
    return cloud, pose


def test_library_holds_every_configured_object(tiny_config, tiny_library):
    assert tiny_library.keys() == ["cube", "cylinder"]
    assert tiny_library.config_hash == tiny_config.config_hash()
    for entry in tiny_library:
        assert [a.action_id for a in entry.motion.actions] == ["a0", "a1"]
        assert entry.motion.count() + sum(entry.motion.skipped.values()) == 8
        assert len(entry.contact) > 0
        assert len(entry.environment) == tiny_config.environment.training_contacts * entry.motion.count()


def test_library_file_round_trip(tiny_config, tiny_library, tmp_path):
    path = save_library(tiny_library, tmp_path / "library.json")
    loaded = load_library(path, expected_hash=tiny_config.config_hash())
    assert dumps(loaded.to_dict()) == dumps(tiny_library.to_dict())


def test_prediction_record(tiny_config, tiny_library):
    cloud, _ = _partial_cube(tiny_config)
    record = PushPredictor(tiny_config, tiny_library).run(cloud, None, make_rng(0, "test"))
    assert record.entry_id in tiny_library.keys()
    assert set(record.h_r) == {"cube", "cylinder"}
    assert record.placement is not None
    assert set(record.motions) == {"a0", "a1"}
    data = record.to_dict()
    assert data["config_hash"] == tiny_config.config_hash()
    dumps(data)


def test_prediction_is_reproducible(tiny_config, tiny_library):
    cloud, _ = _partial_cube(tiny_config)
    predictor = PushPredictor(tiny_config, tiny_library)
    first = predictor.run(cloud, ["a1"], make_rng(4, "test"), selection="cube")
    second = predictor.run(cloud, ["a1"], make_rng(4, "test"), selection="cube")
    assert dumps(first.to_dict()) == dumps(second.to_dict())
    assert first.entry_id == "cube"
    assert set(first.motions) == {"a1"}


def test_unknown_fixed_entry_is_reported(tiny_config, tiny_library):
    cloud, _ = _partial_cube(tiny_config)
    record = PushPredictor(tiny_config, tiny_library).run(cloud, None, make_rng(0, "test"), selection="teapot")
    assert not record.success
    assert "teapot" in record.error


def test_centroid_pose_source(tiny_config, tiny_library):
    config = replace(tiny_config, prediction=replace(tiny_config.prediction, pose_source="centroid"))
    cloud, _ = _partial_cube(config)
    record = PushPredictor(config, tiny_library).run(cloud, ["a0"], make_rng(1, "test"), selection="cube")
    np.testing.assert_allclose(record.placement.object_pose.p, cloud.centroid)


def test_cells_keep_their_order():
    assert run_cells(_square, 5, jobs=2) == [0, 1, 4, 9, 16]
    assert run_cells(_square, 3) == [0, 1, 4]


@pytest.mark.slow
def test_pose_experiment_is_independent_of_jobs(tiny_config):
    serial = run_pose_experiment(tiny_config, make_rng(0, "pose"))
    parallel = run_pose_experiment(replace(tiny_config, jobs=2), make_rng(0, "pose"))
    pd.testing.assert_frame_equal(serial.table, parallel.table)
    assert set(serial.table["condition"]) <= {"position", "centroid"}
    assert set(serial.table["object"]) == {"cube"}
    assert "median_rotation_error_deg" in serial.extra


@pytest.mark.slow
def test_selection_experiment(tiny_config, tiny_library):
    report = run_selection_experiment(tiny_config, make_rng(0, "selection"), tiny_library)
    assert set(report.table["condition"]) == set(SELECTION_MODES)
    assert set(report.table["object"]) == {"cube", "cylinder"}
    incongruent = report.table[report.table["condition"] == "incongruent"]
    assert not incongruent["selected_correct"].astype(bool).any()


@pytest.mark.slow
def test_biasing_experiment_with_given_models(tiny_config, tiny_library):
    libraries = {"general": tiny_library, "low": tiny_library}
    report = run_biasing_experiment(tiny_config, make_rng(0, "friction"), "friction", libraries)
    assert report.experiment == "friction_biasing"
    assert set(report.table["model"]) == {"general", "low"}
    assert set(report.table["test_condition"]) == set(BIAS_LEVELS)
    assert set(report.extra["training_displacement_m"]) == {"general", "low"}
    with pytest.raises(ConfigError):
        run_biasing_experiment(tiny_config, make_rng(0, "x"), "colour", libraries)


def test_biased_distributions(tiny_config):
    friction = biased_distributions(tiny_config, "friction", "low")
    assert friction.ground_friction == preset("friction_low")
    assert friction.mass == preset("mass_default")
    mass = biased_distributions(tiny_config, "mass", "high")
    assert mass.mass == preset("mass_high")
    assert mass.ground_friction == preset("ground_friction_default")
