from query.density import (
    QueryDensity,
    build_query_density,
    estimate_pose,
    neighbourhood_weights,
    select_manipulator_frame,
    selection_heuristic,
)
from query.library import LibraryEntry, ModelLibrary, load_library, save_library, select_model

__all__ = [
    "QueryDensity",
    "build_query_density",
    "estimate_pose",
    "neighbourhood_weights",
    "select_manipulator_frame",
    "selection_heuristic",
    "LibraryEntry",
    "ModelLibrary",
    "load_library",
    "save_library",
    "select_model",
]
