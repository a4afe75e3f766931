from types import SimpleNamespace

import numpy as np
import pytest

from contact.frames import ContactFrame, FrameKind
from density.annealing import AnnealConfig
from geometry.pose import Pose, compose, inverse
from motion.model import global_to_local, local_to_global, predict, train_motion_model, training_displacements
from motion.records import Action, MotionModel, PushDataRecord, make_actions, record_push
from sim.params import ParameterDistribution, ParameterDistributions, PhysicalParams
from utils.errors import ModelError, SimulationError

START = Pose.planar(0.0, 0.0, 0.0, 0.1)
MOTION = Pose.planar(0.05, 0.01, 0.1, 0.0)
SMALL_ANNEAL = AnnealConfig(n_candidates=20, n_steps=30)


def _episode(start=START, final=None):
    return SimpleNamespace(
        initial_pose=start,
        final_pose=final or compose(start, MOTION),
        pusher_start=Pose.from_translation(-0.1, 0.0, 0.05),
        params=PhysicalParams(),
    )


def _frame(feature, kind=FrameKind.MANIPULATOR, r=None):
    if r is not None:
        feature = type(feature)(v=feature.v, r=r)
    return ContactFrame.create(feature, Pose.from_translation(0.0, 0.0, 0.002), kind, START)


def _model(feature):
    model = MotionModel(actions=make_actions(1), shape_id="cube")
    model.add(record_push(_episode(), [_frame(feature)], "a0"))
    return model


def test_local_and_global_motion_are_conjugates():
    h = Pose.planar(0.1, -0.05, 0.3, 0.02)
    local = global_to_local(MOTION, h)
    assert local_to_global(local, h).is_close(MOTION, tol=1e-12)


def test_recorded_local_motions_agree_with_the_global_motion(flat_feature):
    frames = [_frame(flat_feature), _frame(flat_feature.moved(Pose.planar(0.1, 0.0, 1.0, 0.0)))]
    record = record_push(_episode(), frames, "a0")
    assert record.global_motion.is_close(MOTION, tol=1e-12)
    for frame, local in zip(record.frames, record.local_motions):
        assert local_to_global(local, frame.h).is_close(record.global_motion, tol=1e-12)
    assert record.placement.is_close(Pose.from_translation(-0.1, 0.0, 0.05))


def test_diverged_episode_is_not_recorded(flat_feature):
    broken = _episode(final=Pose(p=[np.nan, 0.0, 0.1]))
    with pytest.raises(SimulationError):
        record_push(broken, [_frame(flat_feature)], "a0")


def test_record_needs_one_motion_per_frame(flat_feature):
    with pytest.raises(ModelError):
        PushDataRecord("a0", PhysicalParams(), [_frame(flat_feature)], [], MOTION)


def test_actions_spread_turn_rates():
    actions = make_actions(3)
    assert [a.action_id for a in actions] == ["a0", "a1", "a2"]
    assert [a.angular_velocity for a in actions] == [-10.0, 0.0, 10.0]
    assert make_actions(1)[0].angular_velocity == 0.0
    with pytest.raises(ValueError):
        Action("a0", duration=0.0)
    with pytest.raises(ValueError):
        make_actions(0)


def test_motion_model_bookkeeping(flat_feature):
    with pytest.raises(ModelError):
        MotionModel(actions=[Action("a0"), Action("a0")])
    with pytest.raises(ModelError):
        MotionModel(actions=[Action("a0")], records={"a9": []})
    model = _model(flat_feature)
    assert model.count() == 1
    assert model.count("a0") == 1
    frames, motions = model.frame_pool("a0", FrameKind.MANIPULATOR)
    assert len(frames) == len(motions) == 1
    assert model.frame_pool("a0", FrameKind.ENVIRONMENT) == ([], [])
    with pytest.raises(ModelError):
        model.action("a7")
    with pytest.raises(ModelError):
        model.add(PushDataRecord("a7", PhysicalParams(), [], [], MOTION))


def test_single_kernel_prediction_recovers_the_recorded_motion(flat_feature, rng):
    model = _model(flat_feature)
    estimate = Pose.planar(1.0, 2.0, 0.3, 0.1)
    prediction = predict(model, "a0", [_frame(flat_feature)], estimate, anneal_config=SMALL_ANNEAL, rng=rng)
    assert prediction.success
    assert prediction.rounds == 0
    assert prediction.global_motion.is_close(MOTION, tol=1e-6)
    assert prediction.final_pose.is_close(compose(estimate, MOTION), tol=1e-6)
    assert prediction.likelihood == pytest.approx(1.0, rel=1e-6)


def test_unmatched_contact_fails_softly(flat_feature, rng):
    model = _model(flat_feature)
    placed = _frame(flat_feature, r=(100.0, 100.0))
    prediction = predict(model, "a0", [placed], START, anneal_config=SMALL_ANNEAL, rng=rng)
    assert not prediction.success
    assert prediction.rounds == 10
    assert prediction.final_pose is None
    assert prediction.to_dict()["final_pose"] is None


def test_prediction_argument_errors(flat_feature, rng):
    model = _model(flat_feature)
    with pytest.raises(ModelError):
        predict(model, "a5", [_frame(flat_feature)], START, rng=rng)
    with pytest.raises(ModelError):
        predict(model, "a0", [], START, rng=rng)
    with pytest.raises(ModelError):
        predict(model, "a0", [_frame(flat_feature, kind=FrameKind.ENVIRONMENT)], START, rng=rng)


def test_motion_model_dict_keeps_records(flat_feature):
    model = _model(flat_feature)
    loaded = MotionModel.from_dict(model.to_dict())
    assert loaded.count("a0") == 1
    assert loaded.records["a0"][0].global_motion.is_close(MOTION, tol=1e-12)


def _fixed_params():
    return ParameterDistributions(
        mass=ParameterDistribution.dirac(0.5),
        ground_friction=ParameterDistribution.dirac(0.3),
    )


def test_training_records_every_push(cube_world, cube_contact_model, cube_features):
    model, env = train_motion_model(
        cube_world,
        cube_contact_model,
        cube_features,
        make_actions(2),
        samples_per_action=2,
        param_dists=_fixed_params(),
        seed=1,
        n_env_contacts=3,
    )
    assert model.count() == 4
    assert model.skipped == {"a0": 0, "a1": 0}
    assert len(env) == 12
    for record in model.records["a0"]:
        assert [f.kind for f in record.frames] == [FrameKind.MANIPULATOR] + [FrameKind.ENVIRONMENT] * 3
        for frame, local in zip(record.frames, record.local_motions):
            assert local_to_global(local, frame.h).is_close(record.global_motion, tol=1e-9)
    table = training_displacements(model, "a0")
    assert list(table["push_id"]) == [0, 1]
    assert (table["distance"] > 0.1).all()
    assert (table["mass"] == 0.5).all()


def test_training_is_reproducible(cube_world, cube_contact_model, cube_features):
    def run():
        model, _ = train_motion_model(
            cube_world,
            cube_contact_model,
            cube_features,
            [Action("a0", duration=1.0)],
            samples_per_action=2,
            param_dists=ParameterDistributions(),
            seed=5,
            n_env_contacts=2,
        )
        return [r.global_motion.to_array() for r in model.records["a0"]]

    assert run() == run()


def test_training_needs_a_positive_sample_count(cube_world, cube_contact_model, cube_features):
    with pytest.raises(ValueError):
        train_motion_model(
            cube_world, cube_contact_model, cube_features, make_actions(1), 0, ParameterDistributions(), seed=0
        )
