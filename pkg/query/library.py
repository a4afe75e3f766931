"""
Model library: one trained entry per shape, persisted as a single JSON file,
and model selection by the descriptor-distance heuristic.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from contact.environment import EnvironmentContactModel
from contact.models import ManipulatorContactModel, PositionModel
from density.truncation import TruncationConfig
from motion.records import MotionModel
from query.density import QueryDensity, build_query_density
from shapes.features import SurfaceFeature
from shapes.mesh import ShapeSpec
from utils.errors import LibraryFormatError, ModelError
from utils.rng import make_rng
from utils.serialization import read_json, write_json

FORMAT_VERSION = 1


@dataclass(eq=False)
class LibraryEntry:
    shape: ShapeSpec
    contact: ManipulatorContactModel
    environment: EnvironmentContactModel
    position: PositionModel
    motion: MotionModel
    metadata: dict = field(default_factory=dict)

    @property
    def shape_id(self) -> str:
        return self.shape.name

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.to_dict(),
            "contact": self.contact.to_dict(),
            "environment": self.environment.to_dict(),
            "position": self.position.to_dict(),
            "motion": self.motion.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LibraryEntry":
        return cls(
            shape=ShapeSpec.from_dict(data["shape"]),
            contact=ManipulatorContactModel.from_dict(data["contact"]),
            environment=EnvironmentContactModel.from_dict(data["environment"]),
            position=PositionModel.from_dict(data["position"]),
            motion=MotionModel.from_dict(data["motion"]),
            metadata=dict(data.get("metadata", {})),
        )


class ModelLibrary:
    """Entries keyed by shape id; keys are unique."""

    def __init__(self, entries=None, config_hash: str = "", seed: int = 0):
        self.entries: dict[str, LibraryEntry] = {}
        self.config_hash = config_hash
        self.seed = seed
        for entry in entries or []:
            self.add(entry)

    def add(self, entry: LibraryEntry) -> None:
        if entry.shape_id in self.entries:
            raise ModelError(f"Library already holds an entry for '{entry.shape_id}'")
        self.entries[entry.shape_id] = entry

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries[k] for k in sorted(self.entries))

    def __getitem__(self, shape_id: str) -> LibraryEntry:
        try:
            return self.entries[shape_id]
        except KeyError:
            raise ModelError(f"No library entry '{shape_id}', known: {sorted(self.entries)}") from None

    def keys(self) -> list[str]:
        return sorted(self.entries)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "entries": {k: self.entries[k].to_dict() for k in self.keys()},
        }


def save_library(library: ModelLibrary, path) -> Path:
    path = write_json(library.to_dict(), path)
    logger.info(f"Saved model library with {len(library)} entries to {path}")
    return path


def load_library(path, expected_hash: str | None = None) -> ModelLibrary:
    """
    Read a library file.

    Raises:
        LibraryFormatError: Unknown format version, or `expected_hash` is given
            and the file was trained under another configuration.
    """
    data = read_json(path)
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise LibraryFormatError(f"{path}: format_version {version}, expected {FORMAT_VERSION}")
    config_hash = data.get("config_hash", "")
    if expected_hash is not None and config_hash != expected_hash:
        raise LibraryFormatError(
            f"{path} was trained with config {config_hash[:12]}, current config is {expected_hash[:12]}"
        )
    entries = [LibraryEntry.from_dict(e) for _, e in sorted(data["entries"].items())]
    return ModelLibrary(entries, config_hash=config_hash, seed=int(data.get("seed", 0)))


def select_model(
    library: ModelLibrary,
    features: list[SurfaceFeature],
    rng: np.random.Generator,
    n_kernels: int = 500,
    trunc: TruncationConfig | None = None,
    mode: str = "similarity",
) -> tuple[LibraryEntry, QueryDensity, dict]:
    """
    Build one manipulator query density per entry and keep the entry with the
    lowest H_r. Each entry draws from its own stream; ties go to the first
    shape id in sorted order.

    Returns:
        (chosen entry, its query density, {shape_id: H_r}).
    """
    if len(library) == 0:
        raise ModelError("Cannot select from an empty model library")
    base = int(rng.integers(0, 2**63 - 1))
    scores, densities = {}, {}
    for entry in library:
        qd = build_query_density(
            entry.contact.frames,
            features,
            n_kernels,
            make_rng(base, "select", entry.shape_id),
            sigma=entry.contact.sigma,
            trunc=trunc,
            mode=mode,
            model_id=entry.shape_id,
        )
        scores[entry.shape_id] = qd.h_r
        densities[entry.shape_id] = qd
    chosen = min(scores, key=lambda k: (scores[k], k))
    logger.info(f"Selected library entry '{chosen}' (H_r {', '.join(f'{k}={v:.4f}' for k, v in scores.items())})")
    return library[chosen], densities[chosen], scores
