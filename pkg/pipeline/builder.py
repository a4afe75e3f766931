from loguru import logger

from contact.models import train_manipulator_contact_model, train_position_model
from motion.model import train_motion_model
from motion.records import make_actions
from query.library import LibraryEntry, ModelLibrary
from shapes.cloud import sample_full_cloud
from shapes.features import extract_features
from shapes.mesh import ShapeSpec
from sim.params import ParameterDistributions
from sim.world import World, make_world
from utils.config_loader import RunConfig
from utils.rng import derive_seed


def create_world(config: RunConfig, spec: ShapeSpec) -> World:
    return make_world(spec, config.bumper())


def training_features(config: RunConfig, world: World, seed: int):
    """Full cloud of the resting object and its surface features."""
    cloud = sample_full_cloud(
        world.mesh,
        config.objects.cloud_density,
        seed=derive_seed(seed, "training-cloud", world.spec.name),
        pose=world.rest_pose,
        jitter=config.objects.jitter,
    )
    return extract_features(cloud, config.objects.neighborhood_radius)


def create_entry(
    config: RunConfig,
    spec: ShapeSpec,
    param_dists: ParameterDistributions | None = None,
    seed: int | None = None,
    label: str = "",
) -> LibraryEntry:
    """
    Train every model for one object: manipulator contacts, object position,
    then the motion and environment contact models from simulated pushes.
    """
    seed = config.seed if seed is None else seed
    param_dists = param_dists or config.parameter_distributions()
    sigma = config.bandwidths()
    world = create_world(config, spec)
    features = training_features(config, world, seed)
    logger.info(f"Training '{spec.name}'{f' ({label})' if label else ''} on {len(features)} features")

    contact = train_manipulator_contact_model(
        features,
        world.bumper_mesh,
        world.training_link_pose(),
        delta_c=config.contact.delta_c,
        lambda_c=config.contact.lambda_c,
        object_pose=world.rest_pose,
        shape_id=spec.name,
        sigma=sigma,
    )
    position = train_position_model(features, world.rest_pose, sigma=sigma, shape_id=spec.name)
    actions = make_actions(
        config.actions.count,
        tuple(config.actions.angle_range),
        duration=config.actions.duration,
        speed=config.actions.speed,
    )
    motion, environment = train_motion_model(
        world,
        contact,
        features,
        actions,
        config.training.samples_per_action,
        param_dists,
        seed=derive_seed(seed, "motion", label),
        n_env_contacts=config.environment.training_contacts,
        dt=config.world.dt,
        stall_force=config.world.stall_force,
        sigma=sigma,
    )
    return LibraryEntry(
        shape=spec,
        contact=contact,
        environment=environment,
        position=position,
        motion=motion,
        metadata={
            "label": label,
            "features": len(features),
            "parameters": param_dists.to_dict(),
            "skipped_pushes": sum(motion.skipped.values()),
        },
    )


def create_library(
    config: RunConfig,
    specs: list[ShapeSpec] | None = None,
    param_dists: ParameterDistributions | None = None,
    label: str = "",
) -> ModelLibrary:
    specs = specs if specs is not None else config.shape_specs()
    library = ModelLibrary(config_hash=config.config_hash(), seed=config.seed)
    for spec in specs:
        library.add(create_entry(config, spec, param_dists, label=label))
    logger.info(f"Model library ready: {', '.join(library.keys())}")
    return library
