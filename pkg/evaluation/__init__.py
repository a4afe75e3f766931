from evaluation.accuracy import AccuracyReport, accuracy, accuracy_terms, centroid_baseline, summarise, write_report
from evaluation.symmetry import SymmetrySet, symmetry_set

__all__ = [
    "AccuracyReport",
    "accuracy",
    "accuracy_terms",
    "centroid_baseline",
    "summarise",
    "write_report",
    "SymmetrySet",
    "symmetry_set",
]
