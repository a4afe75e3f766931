import argparse
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from loguru import logger

from evaluation.accuracy import AccuracyReport, write_report
from evaluation.experiments import run_biasing_experiment, run_pose_experiment, run_selection_experiment
from interaction.manager import PushPredictor
from pipeline.builder import create_library, create_world
from query.library import load_library, save_library
from shapes.cloud import read_ply, sample_full_cloud, sample_partial_cloud, write_ply
from utils.config_loader import RunConfig, apply_overrides
from utils.errors import ConfigError, PushcastError
from utils.rng import derive_seed, make_rng
from utils.serialization import write_json

DEFAULT_CONFIG = "config/run_config.yaml"
EXPERIMENTS = ("selection", "pose", "friction", "mass")
LOG_LEVELS = {"error": "ERROR", "info": "INFO", "debug": "DEBUG"}


def configure_logging() -> None:
    load_dotenv(override=True)
    level = os.environ.get("PUSHCAST_LOG", "info").lower()
    logger.remove()
    logger.add(sys.stderr, level=LOG_LEVELS.get(level, "INFO"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", default=None, help=f"YAML run config (default {DEFAULT_CONFIG})")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=None)
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Config override, dotted key")

    parser = argparse.ArgumentParser(prog="pushcast", description="Push-manipulation forward models.", allow_abbrev=False)
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-object", parents=[common], allow_abbrev=False, help="Write an object mesh and its clouds")
    gen.add_argument("--object", required=True, help="Object name from the config")
    gen.add_argument("--x", type=float, default=0.0)
    gen.add_argument("--y", type=float, default=0.0)
    gen.add_argument("--yaw-deg", type=float, default=0.0)

    commands.add_parser("train", parents=[common], allow_abbrev=False, help="Train the model library")

    pred = commands.add_parser("predict", parents=[common], allow_abbrev=False, help="Predict pushes for one cloud")
    pred.add_argument("--library", default=None)
    pred.add_argument("--cloud", required=True, help="PLY cloud with source_pose and viewpoint header comments")
    pred.add_argument("--action", action="append", default=None, help="Action id, repeatable (default all)")

    ev = commands.add_parser("evaluate", parents=[common], allow_abbrev=False, help="Run experiments")
    ev.add_argument("--experiment", choices=EXPERIMENTS + ("all",), default="all")
    ev.add_argument("--library", default=None, help="Library for the selection experiment")

    rep = commands.add_parser("report", parents=[common], allow_abbrev=False, help="Summarise a per-push CSV")
    rep.add_argument("--input", required=True)
    return parser


def split_dotted(extra: list[str]) -> list[str]:
    """`--a.b value` and `--a.b=value` pairs as `a.b=value` overrides."""
    overrides = []
    i = 0
    while i < len(extra):
        item = extra[i]
        if not item.startswith("--") or "." not in item:
            raise ConfigError(f"Unrecognised argument '{item}'")
        key = item[2:]
        if "=" in key:
            overrides.append(key)
            i += 1
            continue
        if i + 1 >= len(extra):
            raise ConfigError(f"Missing value for '{item}'", key=key)
        overrides.append(f"{key}={extra[i + 1]}")
        i += 2
    return overrides


class Application:
    def __init__(self, args: argparse.Namespace, overrides: list[str]):
        self._args = args
        self._config = self._load_config(args, overrides)

    @staticmethod
    def _load_config(args, overrides: list[str]) -> RunConfig:
        overrides = list(args.set) + overrides
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        if args.jobs is not None:
            overrides.append(f"jobs={args.jobs}")
        if args.out is not None:
            overrides.append(f"output.directory={args.out}")
        path = args.config
        if path is None and not Path(DEFAULT_CONFIG).exists():
            logger.warning(f"{DEFAULT_CONFIG} not found, using built-in defaults")
            return RunConfig.from_dict(apply_overrides({}, overrides))
        if path is not None and not Path(path).exists():
            raise ConfigError(f"Config file {path} does not exist")
        return RunConfig.load_from_yaml(path or DEFAULT_CONFIG, overrides)

    @property
    def out_dir(self) -> Path:
        return Path(self._config.output.directory)

    def run(self) -> int:
        logger.info(f"Running '{self._args.command}' with config {self._config.config_hash()[:12]}, seed {self._config.seed}")
        handler = {
            "gen-object": self.gen_object,
            "train": self.train,
            "predict": self.predict,
            "evaluate": self.evaluate,
            "report": self.report,
        }[self._args.command]
        return handler()

    def gen_object(self) -> int:
        config, args = self._config, self._args
        spec = config.shape(args.object)
        world = create_world(config, spec)
        pose = world.object_pose(args.x, args.y, float(np.radians(args.yaw_deg)))
        seed = derive_seed(config.seed, "gen-object", spec.name)
        write_json(
            {
                "spec": spec.to_dict(),
                "vertices": world.mesh.vertices,
                "triangles": world.mesh.faces,
                "config_hash": config.config_hash(),
            },
            self.out_dir / f"{spec.name}_mesh.json",
        )
        full = sample_full_cloud(world.mesh, config.objects.cloud_density, seed, pose=pose, jitter=config.objects.jitter)
        partial = sample_partial_cloud(
            world.mesh, pose, config.objects.viewpoint, config.objects.cloud_density, seed, jitter=config.objects.jitter
        )
        write_ply(full, self.out_dir / f"{spec.name}_full.ply", config.config_hash())
        write_ply(partial, self.out_dir / f"{spec.name}_partial.ply", config.config_hash())
        logger.info(f"Wrote '{spec.name}': {len(full)} full and {len(partial)} partial points")
        return 0

    def train(self) -> int:
        library = create_library(self._config)
        save_library(library, self._library_path())
        return 0

    def predict(self) -> int:
        library = load_library(self._library_path(), expected_hash=self._config.config_hash())
        cloud = read_ply(self._args.cloud)
        record = PushPredictor(self._config, library).run(cloud, self._args.action, make_rng(self._config.seed, "predict"))
        path = write_json(record.to_dict(), self.out_dir / "prediction.json")
        logger.info(f"Prediction record written to {path}")
        return 1 if record.error else 0

    def evaluate(self) -> int:
        config = self._config
        chosen = EXPERIMENTS if self._args.experiment == "all" else (self._args.experiment,)
        for name in chosen:
            rng = make_rng(config.seed, "evaluate", name)
            if name == "selection":
                library = None
                if self._args.library:
                    library = load_library(self._args.library, expected_hash=config.config_hash())
                report = run_selection_experiment(config, rng, library)
            elif name == "pose":
                report = run_pose_experiment(config, rng)
            else:
                report = run_biasing_experiment(config, rng, family=name)
            write_report(report, self.out_dir, config.config_hash(), config.seed)
            logger.info(f"{report.experiment}: mean H_acc {report.mean:.4f} ± {report.std:.4f} over {len(report.values)} pushes")
        return 0

    def report(self) -> int:
        path = Path(self._args.input)
        if not path.exists():
            raise PushcastError(f"Report input {path} does not exist")
        table = pd.read_csv(path)
        report = AccuracyReport.from_rows(path.stem, table.to_dict("records"))
        write_report(report, self.out_dir, self._config.config_hash(), self._config.seed)
        return 0

    def _library_path(self) -> Path:
        if getattr(self._args, "library", None):
            return Path(self._args.library)
        if self._args.out is not None:
            return self.out_dir / "library.json"
        return Path(self._config.output.library)


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        app = Application(args, split_dotted(extra))
        return app.run()
    except PushcastError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except FileNotFoundError as e:
        logger.error(f"Missing file: {e}")
        return 1
    finally:
        logger.info("Done.")


if __name__ == "__main__":
    sys.exit(main())
