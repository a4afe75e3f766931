"""
Experiment harnesses: contact-model selection, pose estimation against the
centroid baseline, and friction/mass parameter biasing.

Every harness splits its work into cells, one per (object, condition index).
A cell owns the random stream derived from the harness seed and its labels,
so cells can run in worker processes and still produce the rows a serial
run would. Rows are re-assembled in cell order.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from loguru import logger

from contact.models import PositionModel, train_position_model
from evaluation.accuracy import AccuracyReport, accuracy_terms, centroid_baseline
from evaluation.symmetry import symmetry_set
from geometry.pose import Pose
from interaction.manager import PushPredictor
from motion.model import training_displacements
from pipeline.builder import create_library, create_world, training_features
from query.density import build_query_density, estimate_pose
from query.library import ModelLibrary
from shapes.cloud import PointCloud, sample_partial_cloud
from shapes.features import extract_features
from shapes.mesh import ShapeSpec
from sim.params import ParameterDistribution, ParameterDistributions, PhysicalParams, preset, sample_params
from sim.pusher import simulate_push
from sim.world import World, settle_pusher
from utils.config_loader import RunConfig
from utils.errors import ConfigError, PushcastError
from utils.rng import make_rng

SELECTION_MODES = ("congruent", "incongruent", "adaptive")
BIAS_LEVELS = ("low", "medium", "high")

# family -> (varied field, preset per model label, preset for the held parameter)
BIASING_FAMILIES = {
    "friction": (
        "ground_friction",
        {"general": "friction_general", "low": "friction_low", "medium": "friction_medium", "high": "friction_high"},
        ("mass", "mass_default"),
    ),
    "mass": (
        "mass",
        {"general": "mass_general_table", "low": "mass_low", "medium": "mass_medium", "high": "mass_high"},
        ("ground_friction", "ground_friction_default"),
    ),
}


@dataclass(frozen=True)
class Scene:
    """One observed test condition: where the object sits and what the camera saw."""

    world: World
    initial_pose: Pose
    cloud: PointCloud


def run_cells(fn, n_cells: int, jobs: int = 1) -> list:
    """fn(i) for every cell index, results in index order."""
    if jobs <= 1 or n_cells <= 1:
        return [fn(i) for i in range(n_cells)]
    chunksize = max(1, n_cells // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(fn, range(n_cells), chunksize=chunksize))


def random_scene(config: RunConfig, spec: ShapeSpec, rng: np.random.Generator) -> Scene:
    """Object dropped at a random planar pose, seen once from the configured viewpoint."""
    world = create_world(config, spec)
    reach = config.experiments.placement_range
    x, y = rng.uniform(-reach, reach, size=2)
    yaw = np.radians(rng.uniform(-config.experiments.yaw_range_deg, config.experiments.yaw_range_deg))
    initial_pose = world.object_pose(float(x), float(y), float(yaw))
    cloud = sample_partial_cloud(
        world.mesh,
        initial_pose,
        config.objects.viewpoint,
        config.objects.cloud_density,
        seed=int(rng.integers(0, 2**63 - 1)),
        jitter=config.objects.jitter,
    )
    return Scene(world, initial_pose, cloud)


def ground_truth_push(
    config: RunConfig,
    scene: Scene,
    robot_placement: Pose,
    action,
    params: PhysicalParams,
    rng: np.random.Generator,
) -> Pose:
    """Final pose of the real push: bumper at the estimated placement, true object where it lies."""
    pusher = settle_pusher(scene.world, scene.initial_pose, scene.world.place_pusher(robot_placement))
    episode = simulate_push(
        scene.world,
        scene.initial_pose,
        params,
        pusher,
        action,
        dt=config.world.dt,
        rng=rng,
        stall_force=config.world.stall_force,
    )
    return episode.final_pose


def _score(predicted: Pose | None, ground_truth: Pose | None, spec: ShapeSpec) -> dict:
    if predicted is None or ground_truth is None:
        return {"h_acc": np.nan, "linear_error_m": np.nan, "angular_error_deg": np.nan, "success": False}
    terms = accuracy_terms(predicted, ground_truth, spec.extents, symmetry_set(spec))
    return {
        "h_acc": terms["h_acc"],
        "linear_error_m": terms["linear_error_m"],
        "angular_error_deg": terms["angular_error_deg"],
        "success": True,
    }


def _push_rows(config, scene, spec, record, params_for, rng, labels: dict) -> list[dict]:
    """Score every predicted action of one prediction record against simulated pushes."""
    rows = []
    if record.placement is None:
        return [{**labels, "object": spec.name, **_score(None, None, spec), "reason": record.error}]
    entry = record.placement.entry
    for action_id, prediction in sorted(record.motions.items()):
        action = entry.motion.action(action_id)
        for k, params in enumerate(params_for(action_id)):
            row = {**labels, "object": spec.name, "action_id": action_id, "gt_sample": k, "reason": prediction.reason}
            try:
                truth = ground_truth_push(config, scene, record.placement.robot_placement, action, params, rng)
            except PushcastError as e:
                logger.warning(f"Ground-truth push for '{spec.name}' / {action_id} failed: {e}")
                rows.append({**row, **_score(None, None, spec), "reason": str(e)})
                continue
            predicted = prediction.final_pose if prediction.success else None
            rows.append({**row, **_score(predicted, truth, spec), **params.to_dict()})
    return rows


def _incongruent(library: ModelLibrary, name: str) -> str:
    others = [key for key in library.keys() if key != name]
    if not others:
        raise ConfigError("Selection experiment needs at least two library entries", key="objects.shapes")
    return others[0]


def _selection_cell(config: RunConfig, library: ModelLibrary, specs: list, seed: int, index: int) -> list[dict]:
    spec = specs[index // config.experiments.selection_conditions]
    condition = index % config.experiments.selection_conditions
    rng = make_rng(seed, "selection", spec.name, condition)
    scene = random_scene(config, spec, rng)
    dists = ParameterDistributions(
        mass=ParameterDistribution.from_dict(config.experiments.selection_mass),
        ground_friction=preset(config.experiments.selection_friction),
        pusher_friction=config.parameter_distributions().pusher_friction,
    )
    params = sample_params(dists, rng)
    predictor = PushPredictor(config, library)
    targets = {"congruent": spec.name, "incongruent": _incongruent(library, spec.name), "adaptive": "adaptive"}
    rows = []
    for mode in SELECTION_MODES:
        predict_rng = make_rng(seed, "selection-predict", spec.name, condition, mode)
        record = predictor.run(scene.cloud, None, predict_rng, targets[mode])
        labels = {
            "experiment": "selection",
            "condition": mode,
            "model": record.entry_id,
            "test_condition": "",
            "push_id": condition,
            "selected_correct": record.entry_id == spec.name,
        }
        truth_rng = make_rng(seed, "selection-truth", spec.name, condition, mode)
        rows.extend(_push_rows(config, scene, spec, record, lambda _: [params], truth_rng, labels))
    logger.info(f"Selection cell {spec.name} #{condition} done")
    return rows


def run_selection_experiment(
    config: RunConfig,
    rng: np.random.Generator,
    library: ModelLibrary | None = None,
) -> AccuracyReport:
    """
    Congruent, incongruent and adaptive model choice on partial clouds of every
    library object, scored against simulated pushes.
    """
    library = library if library is not None else create_library(config, label="selection")
    specs = [entry.shape for entry in library]
    seed = int(rng.integers(0, 2**63 - 1))
    n_cells = len(specs) * config.experiments.selection_conditions
    logger.info(f"Selection experiment: {n_cells} cells over {', '.join(library.keys())}")
    cells = run_cells(partial(_selection_cell, config, library, specs, seed), n_cells, config.jobs)
    return AccuracyReport.from_rows("selection", [row for rows in cells for row in rows])


def position_models(config: RunConfig, specs: list[ShapeSpec]) -> dict[str, PositionModel]:
    models = {}
    for spec in specs:
        world = create_world(config, spec)
        features = training_features(config, world, config.seed)
        models[spec.name] = train_position_model(features, world.rest_pose, sigma=config.bandwidths(), shape_id=spec.name)
    return models


def _pose_cell(config: RunConfig, models: dict, specs: list, seed: int, index: int) -> list[dict]:
    spec = specs[index // config.experiments.pose_runs]
    run = index % config.experiments.pose_runs
    rng = make_rng(seed, "pose", spec.name, run)
    labels = {"experiment": "pose", "model": spec.name, "test_condition": "", "push_id": run, "object": spec.name}
    try:
        scene = random_scene(config, spec, rng)
        features = extract_features(scene.cloud, config.objects.neighborhood_radius)
        model = models[spec.name]
        qd = build_query_density(
            model.frames,
            features,
            config.query.pose_kernels,
            rng,
            sigma=model.sigma,
            trunc=config.truncation_config(),
            mode=config.query.weighting_mode,
            model_id=spec.name,
        )
        estimate, _ = estimate_pose(qd, config.anneal_config(), rng)
    except PushcastError as e:
        logger.warning(f"Pose run {spec.name} #{run} failed: {e}")
        return [{**labels, "condition": "position", **_score(None, None, spec), "reason": str(e)}]
    return [
        {**labels, "condition": "position", **_score(estimate, scene.initial_pose, spec)},
        {**labels, "condition": "centroid", **_score(centroid_baseline(scene.cloud), scene.initial_pose, spec)},
    ]


def run_pose_experiment(config: RunConfig, rng: np.random.Generator) -> AccuracyReport:
    """Position-model pose estimates against the centroid of the same partial cloud."""
    specs = [ShapeSpec.from_dict(s) for s in config.experiments.pose_objects]
    models = position_models(config, specs)
    seed = int(rng.integers(0, 2**63 - 1))
    n_cells = len(specs) * config.experiments.pose_runs
    logger.info(f"Pose experiment: {config.experiments.pose_runs} runs on {len(specs)} objects")
    cells = run_cells(partial(_pose_cell, config, models, specs, seed), n_cells, config.jobs)
    report = AccuracyReport.from_rows("pose", [row for rows in cells for row in rows])
    ok = report.successful()
    medians = ok.groupby(["object", "condition"])["angular_error_deg"].median()
    report.extra["median_rotation_error_deg"] = {
        obj: {cond: float(v) for (o, cond), v in medians.items() if o == obj} for obj in sorted(ok["object"].unique())
    }
    return report


def biased_distributions(config: RunConfig, family: str, label: str) -> ParameterDistributions:
    """Training or test distributions with one parameter family set to a named bias."""
    if family not in BIASING_FAMILIES:
        raise ConfigError(f"Unknown biasing family '{family}'")
    varied, presets, (held, held_preset) = BIASING_FAMILIES[family]
    values = {
        varied: preset(presets[label]),
        held: preset(held_preset),
        "pusher_friction": config.parameter_distributions().pusher_friction,
    }
    return ParameterDistributions(**values)


def _biasing_cell(config: RunConfig, family: str, libraries: dict, specs: list, seed: int, index: int) -> list[dict]:
    spec = specs[index // config.experiments.biasing_conditions]
    condition = index % config.experiments.biasing_conditions
    rng = make_rng(seed, family, spec.name, condition)
    scene = random_scene(config, spec, rng)
    n_truth = config.experiments.biasing_ground_truth_samples
    rows = []
    for model_label, library in libraries.items():
        # one prediction per model, scored against every test condition
        record = PushPredictor(config, library).run(
            scene.cloud, None, make_rng(seed, f"{family}-predict", spec.name, condition, model_label), spec.name
        )
        for test_label in BIAS_LEVELS:
            test_dists = biased_distributions(config, family, test_label)
            truth_rng = make_rng(seed, f"{family}-truth", spec.name, condition, model_label, test_label)
            labels = {
                "experiment": f"{family}_biasing",
                "condition": family,
                "model": model_label,
                "test_condition": test_label,
                "push_id": condition,
            }

            def params_for(action_id, dists=test_dists, r=truth_rng):
                return [sample_params(dists, r) for _ in range(n_truth)]

            rows.extend(_push_rows(config, scene, spec, record, params_for, truth_rng, labels))
    logger.info(f"{family.capitalize()} biasing cell {spec.name} #{condition} done")
    return rows


def run_biasing_experiment(
    config: RunConfig,
    rng: np.random.Generator,
    family: str = "friction",
    libraries: dict[str, ModelLibrary] | None = None,
) -> AccuracyReport:
    """
    Models trained under general, low, medium and high settings of one
    parameter family, each tested under the low, medium and high settings.
    """
    if family not in BIASING_FAMILIES:
        raise ConfigError(f"Unknown biasing family '{family}'")
    specs = [config.shape(name) for name in config.experiments.biasing_objects]
    if libraries is None:
        libraries = {
            label: create_library(config, specs, biased_distributions(config, family, label), label=f"{family}-{label}")
            for label in BIASING_FAMILIES[family][1]
        }
    seed = int(rng.integers(0, 2**63 - 1))
    n_cells = len(specs) * config.experiments.biasing_conditions
    logger.info(f"{family.capitalize()} biasing experiment: {len(libraries)} models, {n_cells} cells")
    cells = run_cells(partial(_biasing_cell, config, family, libraries, specs, seed), n_cells, config.jobs)
    report = AccuracyReport.from_rows(f"{family}_biasing", [row for rows in cells for row in rows])
    report.extra["training_displacement_m"] = mean_training_displacements(libraries)
    return report


def mean_training_displacements(libraries: dict[str, ModelLibrary]) -> dict:
    """Mean planar distance travelled in the training pushes, per model and object."""
    result = {}
    for label, library in libraries.items():
        result[label] = {}
        for entry in library:
            distances = [training_displacements(entry.motion, a.action_id)["distance"] for a in entry.motion.actions]
            values = np.concatenate([d.to_numpy(dtype=float) for d in distances])
            result[label][entry.shape_id] = float(values.mean()) if len(values) else None
    return result
