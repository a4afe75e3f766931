import numpy as np
import pytest

from contact.environment import (
    EnvironmentContactModel,
    floor_relation,
    place_environment_contacts,
    sample_environment_contacts,
    weight_ag,
    weight_cd,
    weight_z,
)
from contact.frames import ContactFrame, FrameKind
from contact.models import (
    ManipulatorContactModel,
    link_contact_frames,
    manipulator_weight,
    train_manipulator_contact_model,
    train_position_model,
)
from geometry.pose import Pose, compose
from shapes.features import SurfaceFeature
from utils.errors import ModelError, RescaleLimitError


def test_manipulator_weight_pieces():
    assert manipulator_weight(0.0, 0.01, 100.0) == 1.0
    assert manipulator_weight(-0.001, 0.01, 100.0) == 1.0
    assert manipulator_weight(0.005, 0.01, 100.0) == pytest.approx(np.exp(-100.0 * 0.005**2))
    assert manipulator_weight(0.01, 0.01, 100.0) == 0.0
    assert manipulator_weight(0.5, 0.01, 100.0) == 0.0


def test_contact_model_keeps_only_features_near_the_bumper(cube_contact_model, cube_features):
    assert 0 < len(cube_contact_model) < len(cube_features)
    for frame in cube_contact_model.frames:
        assert frame.kind is FrameKind.MANIPULATOR
        assert np.linalg.norm(frame.u.p) < cube_contact_model.delta_c
        assert frame.v.p[0] < -0.1 + cube_contact_model.delta_c


def test_touching_features_get_full_weight(cube_contact_model):
    touching = [f for f in cube_contact_model.frames if np.linalg.norm(f.u.p) < 1e-9]
    assert touching
    assert all(f.w == 1.0 for f in touching)


def test_trained_frames_reproduce_the_link_pose(cube_contact_model, cube_world):
    link = cube_world.training_link_pose()
    for pose in link_contact_frames(cube_contact_model, cube_world.rest_pose):
        assert pose.p[0] == pytest.approx(-0.1, abs=1e-6)
        assert 1.0 - abs(float(np.dot(pose.q, link.q))) < 1e-9


def test_contact_model_moves_with_the_object(cube_contact_model, cube_world):
    shifted = Pose.planar(0.4, -0.2, 0.5, cube_world.rest_height)
    moved = Pose.planar(0.4, -0.2, 0.5, 0.0)
    expected = compose(moved, cube_world.training_link_pose())
    poses = link_contact_frames(cube_contact_model, shifted)
    touching = [p for p, f in zip(poses, cube_contact_model.frames) if np.linalg.norm(f.u.p) < 1e-9]
    assert touching
    for pose in touching:
        np.testing.assert_allclose(pose.p[:2] - expected.p[:2], 0.0, atol=0.2)
        assert pose.yaw == pytest.approx(0.5, abs=1e-9)


def test_link_far_from_object_gives_no_model(cube_features, cube_world):
    with pytest.raises(ModelError):
        train_manipulator_contact_model(
            cube_features,
            cube_world.bumper_mesh,
            Pose.from_translation(-1.0, 0.0, 0.05),
            object_pose=cube_world.rest_pose,
        )


def test_contact_model_rejects_other_frame_kinds(flat_feature):
    frame = ContactFrame.create(flat_feature, Pose(), FrameKind.ENVIRONMENT, Pose())
    with pytest.raises(ModelError):
        ManipulatorContactModel(frames=[frame])
    with pytest.raises(ModelError):
        ManipulatorContactModel(frames=[])


def test_position_model_frames_point_at_the_object_origin(cube_features, cube_world):
    model = train_position_model(cube_features, cube_world.rest_pose, shape_id="cube")
    assert len(model) == len(cube_features)
    assert sum(f.w for f in model.frames) == pytest.approx(1.0)
    for frame in model.frames[::40]:
        assert frame.kind is FrameKind.POSITION
        assert frame.u.is_close(frame.h)
        assert frame.target.is_close(cube_world.rest_pose, tol=1e-9)


def test_frame_weight_must_be_non_negative(flat_feature):
    with pytest.raises(ValueError):
        ContactFrame.create(flat_feature, Pose(), FrameKind.MANIPULATOR, Pose(), w=-0.5)


def test_rebased_frame_points_at_new_origin(flat_feature):
    frame = ContactFrame.create(flat_feature, Pose(), FrameKind.MANIPULATOR, Pose())
    origin = Pose.planar(0.3, 0.1, 0.2, 0.1)
    rebased = frame.rebased(origin)
    assert compose(rebased.v, rebased.h).is_close(origin)
    assert rebased.u.is_close(frame.u)


def test_frame_dict_keeps_kind_and_poses(flat_feature):
    frame = ContactFrame.create(flat_feature, Pose.from_translation(0.0, 0.0, 0.004), "manipulator", Pose(), 0.3)
    loaded = ContactFrame.from_dict(frame.to_dict())
    assert loaded.kind is FrameKind.MANIPULATOR
    assert loaded.w == 0.3
    assert loaded.u.is_close(frame.u)
    assert loaded.h.is_close(frame.h)


def test_floor_relation_drops_to_the_ground(flat_feature):
    u = floor_relation(flat_feature)
    np.testing.assert_allclose(u.p, [0.0, 0.0, -0.05])
    np.testing.assert_allclose(u.q, [1.0, 0.0, 0.0, 0.0])


def test_sampled_environment_contacts_are_distinct_floor_frames(cube_features, cube_world, rng):
    frames = sample_environment_contacts(cube_features, 4, rng, object_pose=cube_world.rest_pose)
    assert len(frames) == 4
    positions = {tuple(f.v.p) for f in frames}
    assert len(positions) == 4
    for frame in frames:
        assert frame.kind is FrameKind.ENVIRONMENT
        assert frame.u.p[2] == pytest.approx(-frame.v.p[2])


def test_environment_contacts_prefer_low_features(cube_features, cube_world):
    heights = [
        sample_environment_contacts(cube_features, 1, np.random.default_rng(seed), cube_world.rest_pose)[0].v.p[2]
        for seed in range(300)
    ]
    assert np.mean(heights) < 0.095


def test_environment_weights(cube_features):
    lowest = min(cube_features, key=lambda f: f.v.p[2])
    highest = max(cube_features, key=lambda f: f.v.p[2])
    assert weight_z(lowest, cube_features) > weight_z(highest, cube_features)
    assert weight_z(highest, cube_features) == pytest.approx(np.exp(-1.0))
    centroid = np.mean([f.v.p for f in cube_features], axis=0)
    farthest = max(cube_features, key=lambda f: np.sum((f.v.p - centroid) ** 2))
    assert weight_cd(farthest, cube_features) == pytest.approx(1.0)
    assert weight_ag(lowest, cube_features, []) == 1.0
    assert weight_ag(lowest, cube_features, [lowest]) == 0.0


def test_sampling_needs_a_positive_count(cube_features, rng):
    with pytest.raises(ValueError):
        sample_environment_contacts(cube_features, 0, rng)
    with pytest.raises(ModelError):
        sample_environment_contacts([], 2, rng)


def test_environment_model_accepts_only_environment_frames(flat_feature):
    model = EnvironmentContactModel(shape_id="cube")
    with pytest.raises(ModelError):
        model.kernels()
    with pytest.raises(ModelError):
        model.extend([ContactFrame.create(flat_feature, Pose(), FrameKind.MANIPULATOR, Pose())])


def test_placed_environment_contacts(cube_features, cube_world, rng):
    model = EnvironmentContactModel(shape_id="cube")
    for seed in range(5):
        model.extend(sample_environment_contacts(cube_features, 3, np.random.default_rng(seed), cube_world.rest_pose))
    placed = place_environment_contacts(
        cube_features, model, n_contacts=3, n_samples=20, rng=rng, object_pose=cube_world.rest_pose
    )
    assert len(placed) == 3
    for frame in placed:
        assert frame.kind is FrameKind.ENVIRONMENT
        assert frame.u.is_close(floor_relation(frame.feature))
    positions = [tuple(np.round(frame.v.p, 9)) for frame in placed]
    assert len(set(positions)) == len(positions)


def test_placed_environment_contacts_use_each_feature_once(cube_features, cube_world, rng):
    model = EnvironmentContactModel(shape_id="cube")
    model.extend(sample_environment_contacts(cube_features, 5, np.random.default_rng(1), cube_world.rest_pose))
    few = cube_features[:2]
    placed = place_environment_contacts(few, model, n_contacts=4, n_samples=30, rng=rng)
    assert 1 <= len(placed) <= 2
    assert len({tuple(frame.v.p) for frame in placed}) == len(placed)


def test_placement_skips_contacts_when_rescaling_gives_up(cube_features, cube_world, rng, monkeypatch):
    model = EnvironmentContactModel(shape_id="cube")
    model.extend(sample_environment_contacts(cube_features, 3, np.random.default_rng(2), cube_world.rest_pose))

    def give_up(evaluate, trunc):
        raise RescaleLimitError(trunc.max_rounds, (0, 0, 0), (1, 1, 1))

    monkeypatch.setattr("contact.environment.evaluate_with_rescaling", give_up)
    assert place_environment_contacts(cube_features, model, n_contacts=3, n_samples=10, rng=rng) == []


def test_coincident_features_are_still_drawn_without_repeats(cube_features, rng):
    base = cube_features[0]
    features = [SurfaceFeature(v=base.v, r=np.array([10.0 * k, 0.0])) for k in range(1, 4)]
    frames = sample_environment_contacts(features, 3, rng)
    assert sorted(frame.r[0] for frame in frames) == [10.0, 20.0, 30.0]
