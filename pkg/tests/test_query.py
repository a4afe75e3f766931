import json
from types import SimpleNamespace

import numpy as np
import pytest

from contact.frames import ContactFrame, FrameKind
from density.annealing import AnnealConfig
from density.kernels import Bandwidths
from density.truncation import TruncationConfig
from geometry.pose import Pose, compose, inverse
from query.density import (
    build_query_density,
    estimate_pose,
    nearest_kernel,
    neighbourhood_weights,
    placed_manipulator_frame,
    select_manipulator_frame,
    selection_heuristic,
)
from query.library import ModelLibrary, load_library, select_model
from shapes.features import SurfaceFeature
from utils.errors import LibraryFormatError, ModelError, RescaleLimitError

LINK = Pose.planar(-0.1, 0.02, 0.0, 0.05)
MOVE = Pose.planar(0.3, 0.1, 0.4, 0.0)


def _frame(feature, r=None, w=1.0):
    u = compose(inverse(feature.v), LINK)
    if r is not None:
        feature = SurfaceFeature(v=feature.v, r=r)
    return ContactFrame.create(feature, u, FrameKind.MANIPULATOR, Pose(), w)


def test_heuristic_of_unit_descriptor_gap():
    assert selection_heuristic([[1.0, 0.0]], [[0.0, 0.0]]) == pytest.approx(1.0)


def test_heuristic_normalises_per_pair():
    model = [[0.0, 0.0], [0.0, 0.0]]
    sampled = [[1.0, 0.0], [16.0, 0.0]]
    assert selection_heuristic(model, sampled, normalize=False) == pytest.approx(10.0)
    assert selection_heuristic(model, sampled) == pytest.approx(2.5)


def test_heuristic_needs_descriptors():
    with pytest.raises(ModelError):
        selection_heuristic(np.zeros((0, 2)), [[0.0, 0.0]])


def test_neighbourhood_weight_modes():
    trunc = TruncationConfig()
    r_x = np.array([[0.0, 0.0]])
    r_c = np.array([[0.0, 0.0], [1.0, 1.0], [20.0, 0.0]])
    w_c = np.array([0.5, 0.25, 0.25])
    weights, stats = neighbourhood_weights(r_x, r_c, w_c, (100.0, 100.0), trunc)
    np.testing.assert_allclose(weights[0], [0.5, 0.25 * np.exp(-0.02), 0.0])
    assert stats.r == 1
    literal, _ = neighbourhood_weights(r_x, r_c, w_c, (100.0, 100.0), trunc, mode="literal")
    np.testing.assert_allclose(literal[0], [0.0, 0.25 * 0.02, 0.25 * 4.0])
    with pytest.raises(ValueError):
        neighbourhood_weights(r_x, r_c, w_c, (100.0, 100.0), trunc, mode="cosine")


def test_single_pair_query_peaks_at_the_placed_link(flat_feature, rng):
    qd = build_query_density([_frame(flat_feature)], [flat_feature.moved(MOVE)], 10, rng)
    assert len(qd) == 10
    assert qd.h_r == 0.0
    assert qd.rounds == 0
    np.testing.assert_allclose(qd.w.sum(), 1.0)
    expected = compose(MOVE, LINK)
    assert qd.kernel_pose(0).is_close(expected, tol=1e-9)
    pose, likelihood = estimate_pose(qd, AnnealConfig(n_candidates=20, n_steps=30), rng)
    assert pose.is_close(expected, tol=1e-6)
    assert likelihood == pytest.approx(1.0, rel=1e-6)


def test_descriptor_gap_is_bridged_by_rescaling(flat_feature, rng):
    qd = build_query_density([_frame(flat_feature, r=(50.0, 50.0))], [flat_feature], 5, rng)
    assert qd.trunc.T == (0, 0, 9)
    assert qd.rounds == 9


def test_unbridgeable_descriptor_gap_hits_the_round_cap(flat_feature, rng):
    with pytest.raises(RescaleLimitError) as info:
        build_query_density([_frame(flat_feature, r=(100.0, 100.0))], [flat_feature], 5, rng)
    assert info.value.rounds == 10


def test_query_density_argument_checks(flat_feature, rng):
    with pytest.raises(ModelError):
        build_query_density([_frame(flat_feature)], [flat_feature], 0, rng)
    with pytest.raises(ModelError):
        build_query_density([], [flat_feature], 5, rng)
    with pytest.raises(ModelError):
        build_query_density([_frame(flat_feature)], [], 5, rng)


def test_features_without_a_matching_frame_never_host_kernels(flat_feature, rng):
    curved = SurfaceFeature(v=flat_feature.v, r=(40.0, 0.0))
    qd = build_query_density([_frame(flat_feature)], [curved, flat_feature], 50, rng)
    assert set(qd.feature_index.tolist()) == {1}


def test_placed_frame_uses_the_cloud_feature(flat_feature, rng):
    moved = flat_feature.moved(MOVE)
    qd = build_query_density([_frame(flat_feature)], [moved], 3, rng)
    best = compose(MOVE, LINK)
    assert nearest_kernel(qd, best) == 0
    object_pose = Pose.planar(0.4, 0.1, 0.4, 0.1)
    frame = placed_manipulator_frame(qd, best, object_pose)
    assert frame.v.is_close(moved.v)
    assert frame.target.is_close(best, tol=1e-9)
    assert compose(frame.v, frame.h).is_close(object_pose, tol=1e-9)


def test_selected_frame_matches_an_exhaustive_scan(flat_feature, rng):
    frames = [_frame(flat_feature), _frame(flat_feature.moved(Pose.planar(0.0, 0.05, 0.0)))]
    features = [flat_feature.moved(MOVE), flat_feature.moved(Pose.planar(0.2, -0.1, -0.3))]
    qd = build_query_density(frames, features, 40, rng)
    query_pose = Pose.planar(0.25, 0.05, 0.2, 0.05)
    scan = min(
        range(len(qd)),
        key=lambda k: (
            float(np.sum((qd.p[k] - query_pose.p) ** 2)),
            1.0 - abs(float(qd.q[k] @ query_pose.q)),
            k,
        ),
    )
    assert select_manipulator_frame(qd, query_pose) is qd.source_frame(scan)

def _entry(name, features, r):
    frames = [_frame(f, r=r) for f in features]
    return SimpleNamespace(shape_id=name, contact=SimpleNamespace(frames=frames, sigma=Bandwidths()))


def test_selection_prefers_matching_descriptors(flat_feature, rng):
    library = ModelLibrary([_entry("curved", [flat_feature], (20.0, 5.0)), _entry("flat", [flat_feature], (0.0, 0.0))])
    entry, qd, scores = select_model(library, [flat_feature.moved(MOVE)], rng, n_kernels=20)
    assert entry.shape_id == "flat"
    assert qd.model_id == "flat"
    assert scores["flat"] == 0.0
    assert scores["curved"] > 0.0


def test_selection_ties_go_to_the_first_id(flat_feature, rng):
    library = ModelLibrary([_entry("b", [flat_feature], (0.0, 0.0)), _entry("a", [flat_feature], (0.0, 0.0))])
    entry, _, _ = select_model(library, [flat_feature], rng, n_kernels=5)
    assert entry.shape_id == "a"


def test_library_lookup_errors(flat_feature, rng):
    library = ModelLibrary()
    with pytest.raises(ModelError):
        select_model(library, [flat_feature], rng)
    library.add(_entry("flat", [flat_feature], (0.0, 0.0)))
    with pytest.raises(ModelError):
        library.add(_entry("flat", [flat_feature], (0.0, 0.0)))
    with pytest.raises(ModelError):
        library["missing"]


def test_library_file_checks(tmp_path):
    path = tmp_path / "library.json"
    path.write_text(json.dumps({"format_version": 1, "config_hash": "abc", "seed": 3, "entries": {}}))
    library = load_library(path, expected_hash="abc")
    assert len(library) == 0
    assert library.seed == 3
    with pytest.raises(LibraryFormatError):
        load_library(path, expected_hash="def")
    path.write_text(json.dumps({"format_version": 2, "config_hash": "abc", "entries": {}}))
    with pytest.raises(LibraryFormatError):
        load_library(path)
