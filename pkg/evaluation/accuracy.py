"""
Prediction accuracy H_acc, the centroid baseline and report tables.

H_acc adds a size-normalised translation error to a rotation error taken
over every orientation the object cannot be told apart from.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from evaluation.symmetry import SymmetrySet
from geometry.pose import Pose, quat_conjugate, quat_multiply
from shapes.cloud import PointCloud
from utils.errors import ShapeError
from utils.serialization import write_json

REPORT_COLUMNS = [
    "experiment",
    "condition",
    "model",
    "test_condition",
    "object",
    "push_id",
    "action_id",
    "h_acc",
    "linear_error_m",
    "angular_error_deg",
    "success",
]


def rotation_term(q_e, q_gt, symmetry: SymmetrySet) -> float:
    """min over symmetries g of 1 − ⟨q_e, q_gt ∘ g⟩²."""
    if symmetry.continuous == "all":
        return 0.0
    q_e = np.asarray(q_e, dtype=float)
    q_gt = np.asarray(q_gt, dtype=float)
    if symmetry.continuous == "z":
        # d = q_gt⁻¹ q_e; the best yaw (plain or flipped) has a closed form
        d = quat_multiply(quat_conjugate(q_gt), q_e)
        best = max(d[0] ** 2 + d[3] ** 2, d[1] ** 2 + d[2] ** 2)
        return float(max(0.0, 1.0 - best))
    candidates = quat_multiply(q_gt, symmetry.elements)
    dots = candidates @ q_e
    return float(max(0.0, 1.0 - np.max(dots**2)))


def accuracy_terms(predicted: Pose, ground_truth: Pose, dims, symmetry: SymmetrySet) -> dict:
    dims = np.asarray(dims, dtype=float)
    if np.any(dims <= 0.0):
        raise ShapeError(f"Object dimensions must be positive, got {dims.tolist()}")
    delta = ground_truth.rotation.T @ (predicted.p - ground_truth.p)
    linear = float(np.linalg.norm(delta / dims))
    rotation = rotation_term(predicted.q, ground_truth.q, symmetry)
    return {
        "h_acc": linear + rotation,
        "linear": linear,
        "rotation": rotation,
        "linear_error_m": float(np.linalg.norm(predicted.p - ground_truth.p)),
        "angular_error_deg": float(np.degrees(2.0 * np.arccos(np.sqrt(np.clip(1.0 - rotation, 0.0, 1.0))))),
    }


def accuracy(predicted: Pose, ground_truth: Pose, dims, symmetry: SymmetrySet) -> float:
    return accuracy_terms(predicted, ground_truth, dims, symmetry)["h_acc"]


def centroid_baseline(cloud: PointCloud) -> Pose:
    """Mean of the points with no rotation estimate."""
    if len(cloud) == 0:
        raise ShapeError("Centroid baseline needs a non-empty cloud")
    return Pose(p=cloud.centroid)


@dataclass(eq=False)
class AccuracyReport:
    """Per-push rows of one experiment; means and spreads are computed from them."""

    experiment: str
    table: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=REPORT_COLUMNS))
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, experiment: str, rows: list[dict], extra: dict | None = None) -> "AccuracyReport":
        table = pd.DataFrame(rows)
        for column in REPORT_COLUMNS:
            if column not in table:
                table[column] = np.nan
        ordered = REPORT_COLUMNS + [c for c in table.columns if c not in REPORT_COLUMNS]
        return cls(experiment, table[ordered].reset_index(drop=True), extra or {})

    def successful(self) -> pd.DataFrame:
        return self.table[self.table["success"].astype(bool)]

    @property
    def values(self) -> np.ndarray:
        return self.successful()["h_acc"].to_numpy(dtype=float)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if len(self.values) else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.values)) if len(self.values) else float("nan")


def _cell_stats(group: pd.DataFrame) -> dict:
    ok = group[group["success"].astype(bool)]
    values = ok["h_acc"].to_numpy(dtype=float)
    stats = {
        "pushes": int(len(group)),
        "failures": int(len(group) - len(ok)),
        "h_acc_mean": float(np.mean(values)) if len(values) else None,
        "h_acc_std": float(np.std(values)) if len(values) else None,
        "linear_error_m_mean": float(ok["linear_error_m"].mean()) if len(ok) else None,
        "angular_error_deg_median": float(ok["angular_error_deg"].median()) if len(ok) else None,
    }
    if "selected_correct" in group:
        stats["selection_rate"] = float(group["selected_correct"].astype(float).mean())
    return stats


def summarise(report: AccuracyReport) -> dict:
    """Mean/std of H_acc per (condition, model, test condition, object) cell."""
    table = report.table.fillna({"condition": "", "model": "", "test_condition": ""})
    cells = []
    for keys, group in table.groupby(["condition", "model", "test_condition", "object"], sort=True):
        condition, model, test_condition, obj = keys
        cells.append(
            {
                "condition": condition,
                "model": model,
                "test_condition": test_condition,
                "object": obj,
                **_cell_stats(group),
            }
        )
    return {
        "experiment": report.experiment,
        "overall": _cell_stats(report.table),
        "cells": cells,
        **report.extra,
    }


def write_report(report: AccuracyReport, directory, config_hash: str = "", seed: int = 0) -> tuple[Path, Path]:
    """`<experiment>.csv` with every push and `<experiment>_summary.json`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{report.experiment}.csv"
    report.table.to_csv(csv_path, index=False, float_format="%.10g")
    summary = summarise(report)
    summary.update({"config_hash": config_hash, "seed": seed})
    json_path = write_json(summary, directory / f"{report.experiment}_summary.json")
    logger.info(f"Wrote {len(report.table)} rows to {csv_path} and summary to {json_path}")
    return csv_path, json_path
