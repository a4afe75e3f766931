"""JSON helpers shared by libraries, configs and reports."""
import hashlib
import json
from pathlib import Path

import numpy as np


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data) -> str:
    """Canonical JSON: sorted keys, fixed indent, shortest round-trip floats."""
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + "\n"


def write_json(data, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def content_hash(data) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True, default=_plain).encode("utf-8")).hexdigest()
