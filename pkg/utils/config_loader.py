"""
Run configuration.

RunConfig is a tree of dataclasses, one per YAML section. Unknown keys are
rejected with the dotted key path and the YAML line they came from.
"""
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import yaml

from density.annealing import AnnealConfig
from density.kernels import Bandwidths
from density.truncation import TruncationConfig
from shapes.mesh import ShapeSpec
from sim.params import ParameterDistribution, ParameterDistributions
from sim.world import BumperSpec
from utils.errors import BandwidthError, ConfigError, ParameterError, ShapeError, SimulationError
from utils.serialization import content_hash

# sections that do not change results and stay out of the config hash
UNHASHED = ("seed", "jobs", "output")


@dataclass
class ObjectsConfig:
    shapes: list = field(
        default_factory=lambda: [
            {"kind": "cube", "dimensions": [0.2], "name": "cube"},
            {"kind": "cylinder", "dimensions": [0.2, 0.1], "name": "cylinder"},
        ]
    )
    cloud_density: float = 10000.0  # points per m²
    neighborhood_radius: float = 0.02
    jitter: float = 0.0
    viewpoint: list = field(default_factory=lambda: [-0.7, -0.35, 0.7])


@dataclass
class WorldConfig:
    bumper_width: float = 0.4
    bumper_height: float = 0.1
    bumper_depth: float = 0.02
    dt: float = 0.01
    stall_force: float = 20.0


@dataclass
class ActionsConfig:
    count: int = 3
    angle_range: list = field(default_factory=lambda: [-10.0, 10.0])
    duration: float = 4.0
    speed: float = 0.1


@dataclass
class TrainingConfig:
    samples_per_action: int = 500
    mass: object = "mass_general_table"
    ground_friction: object = "friction_general"
    pusher_friction: object = 0.5


@dataclass
class ContactConfig:
    delta_c: float = 0.01
    lambda_c: float = 100.0
    sigma_p: float = 1e-4
    sigma_q: float = 0.01
    sigma_r: list = field(default_factory=lambda: [100.0, 100.0])


@dataclass
class EnvironmentConfig:
    training_contacts: int = 10
    prediction_contacts: int = 5
    samples: int = 100


@dataclass
class QueryConfig:
    manipulator_kernels: int = 500
    pose_kernels: int = 3000
    weighting_mode: str = "similarity"


@dataclass
class MotionConfig:
    environment_kernels: int = 5000
    manipulator_kernels: int = 500
    sigma_pm: float = 4e-4
    sigma_qm: float = 0.05


@dataclass
class AnnealingConfig:
    candidates: int = 500
    steps: int = 100
    t_start: float = 1.0
    t_end: float = 1e-3
    linear_step: float = 0.1
    angular_step: float = 0.2
    angular_bandwidth_deg: float = 20.0  # reported only


@dataclass
class TruncationSection:
    delta_p: float = 5.0
    delta_q: float = 5.0
    delta_r: float = 0.1
    alpha_T: float = 2.0
    max_rounds: int = 10


@dataclass
class PredictionConfig:
    selection: str = "adaptive"  # or a library shape id
    pose_source: str = "position"  # or centroid


@dataclass
class ExperimentsConfig:
    selection_conditions: int = 50
    selection_mass: float = 0.5
    selection_friction: str = "selection_friction"
    pose_runs: int = 100
    pose_objects: list = field(
        default_factory=lambda: [
            {"kind": "cube", "dimensions": [0.2], "name": "cube"},
            {"kind": "cylinder", "dimensions": [0.2, 0.1], "name": "cylinder"},
            {"kind": "notched-cube", "dimensions": [0.2], "name": "notched-cube"},
        ]
    )
    biasing_conditions: int = 100
    biasing_ground_truth_samples: int = 3
    biasing_objects: list = field(default_factory=lambda: ["cube", "cylinder"])
    placement_range: float = 0.1
    yaw_range_deg: float = 45.0


@dataclass
class OutputConfig:
    directory: str = "out"
    library: str = "out/library.json"


@dataclass
class RunConfig:
    objects: ObjectsConfig = field(default_factory=ObjectsConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    actions: ActionsConfig = field(default_factory=ActionsConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    query: QueryConfig = field(default_factory=QueryConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    annealing: AnnealingConfig = field(default_factory=AnnealingConfig)
    truncation: TruncationSection = field(default_factory=TruncationSection)
    prediction: PredictionConfig = field(default_factory=PredictionConfig)
    experiments: ExperimentsConfig = field(default_factory=ExperimentsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    jobs: int = 1

    @classmethod
    def load_from_yaml(cls, file_path, overrides: list[str] | None = None) -> "RunConfig":
        with open(file_path, "r") as file:
            text = file.read()
        try:
            config_data = yaml.safe_load(text) or {}
            lines = _key_lines(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"{file_path}: invalid YAML ({e})", line=mark.line + 1 if mark else None) from e
        if not isinstance(config_data, dict):
            raise ConfigError(f"{file_path}: top level must be a mapping")
        return cls.from_dict(apply_overrides(config_data, overrides or []), lines)

    @classmethod
    def from_dict(cls, data: dict, lines: dict | None = None) -> "RunConfig":
        config = _build(cls, data, "", lines or {})
        config.validate()
        return config

    def validate(self) -> None:
        try:
            self.shape_specs()
            self.parameter_distributions()
            self.bandwidths()
            self.truncation_config()
            self.anneal_config()
            self.bumper()
        except (ShapeError, ParameterError, BandwidthError, SimulationError, KeyError, TypeError) as e:
            raise ConfigError(str(e)) from e
        if self.query.weighting_mode not in ("similarity", "literal"):
            raise ConfigError(f"Unknown weighting mode '{self.query.weighting_mode}'", key="query.weighting_mode")
        if self.prediction.pose_source not in ("position", "centroid"):
            raise ConfigError(f"Unknown pose source '{self.prediction.pose_source}'", key="prediction.pose_source")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}", key="jobs")
        names = [s.name for s in self.shape_specs()]
        if len(set(names)) != len(names):
            raise ConfigError(f"Object names must be unique, got {names}", key="objects.shapes")

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        data = {k: v for k, v in self.to_dict().items() if k not in UNHASHED}
        return content_hash(data)

    def shape_specs(self) -> list[ShapeSpec]:
        return [ShapeSpec.from_dict(s) for s in self.objects.shapes]

    def shape(self, name: str) -> ShapeSpec:
        for spec in self.shape_specs() + [ShapeSpec.from_dict(s) for s in self.experiments.pose_objects]:
            if spec.name == name:
                return spec
        raise ConfigError(f"No object named '{name}'", key="objects.shapes")

    def parameter_distributions(self) -> ParameterDistributions:
        return ParameterDistributions(
            mass=ParameterDistribution.from_dict(self.training.mass),
            ground_friction=ParameterDistribution.from_dict(self.training.ground_friction),
            pusher_friction=ParameterDistribution.from_dict(self.training.pusher_friction),
        )

    def bandwidths(self) -> Bandwidths:
        return Bandwidths(
            sigma_p=self.contact.sigma_p,
            sigma_q=self.contact.sigma_q,
            sigma_r=tuple(self.contact.sigma_r),
            sigma_pm=self.motion.sigma_pm,
            sigma_qm=self.motion.sigma_qm,
        )

    def truncation_config(self) -> TruncationConfig:
        t = self.truncation
        return TruncationConfig(t.delta_p, t.delta_q, t.delta_r, t.alpha_T, max_rounds=t.max_rounds)

    def anneal_config(self) -> AnnealConfig:
        a = self.annealing
        return AnnealConfig(
            n_candidates=a.candidates,
            n_steps=a.steps,
            t_start=a.t_start,
            t_end=a.t_end,
            linear_step=a.linear_step,
            angular_step=a.angular_step,
        )

    def bumper(self) -> BumperSpec:
        w = self.world
        return BumperSpec(width=w.bumper_width, height=w.bumper_height, depth=w.bumper_depth)


def _key_lines(text: str) -> dict:
    """Dotted key path -> 1-based line of the key in the YAML source."""
    lines = {}
    root = yaml.compose(text, Loader=yaml.SafeLoader)

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(value, path)

    walk(root, "")
    return lines


def _build(cls, data, prefix: str, lines: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"Section must be a mapping, got {type(data).__name__}", key=prefix or None, line=lines.get(prefix))
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    values = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in known:
            raise ConfigError(f"Unknown config key '{path}'", key=path, line=lines.get(path))
        current = getattr(defaults, key)
        if is_dataclass(current):
            values[key] = _build(type(current), value or {}, path, lines)
        elif known[key].type is object:
            values[key] = value
        else:
            values[key] = _coerce(current, value, path, lines)
    return cls(**values)


def _coerce(default, value, path: str, lines: dict):
    def wrong(expected):
        return ConfigError(f"Expected {expected}, got {value!r}", key=path, line=lines.get(path))

    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise wrong("true or false")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise wrong("an integer")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise wrong("a number")
        return float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise wrong("a string")
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise wrong("a list")
    return value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply `a.b=value` overrides; values are parsed as YAML scalars."""
    data = dict(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value")
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = data
        for key in keys[:-1]:
            child = node.get(key)
            child = dict(child) if isinstance(child, dict) else {}
            node[key] = child
            node = child
        node[keys[-1]] = yaml.safe_load(raw)
    return data
