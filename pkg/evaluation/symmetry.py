"""Rotations under which an object looks the same."""
import itertools
from dataclasses import dataclass

import numpy as np

from geometry.pose import quat_from_matrix
from shapes.mesh import ShapeSpec
from utils.errors import ShapeError


@dataclass(frozen=True, eq=False)
class SymmetrySet:
    """
    Args:
        elements (array): (n, 4) body-frame rotations, identity first.
        continuous (str): "" for a discrete set, "z" for free yaw about the
            body z axis (combined with `elements`), "all" for a sphere.
    """

    elements: np.ndarray
    continuous: str = ""

    def __len__(self):
        return 0 if self.continuous == "all" else len(self.elements)


def _proper_signed_permutations():
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            m = np.zeros((3, 3))
            m[np.arange(3), perm] = signs
            if np.linalg.det(m) > 0.0:
                yield perm, m


def _box_group(dims) -> np.ndarray:
    """Signed permutations with det +1 that map the box onto itself."""
    dims = np.asarray(dims, dtype=float)
    rotations = [
        m for perm, m in _proper_signed_permutations() if np.allclose(dims[list(perm)], dims, rtol=1e-9, atol=1e-12)
    ]
    return _with_identity_first(rotations)


def _with_identity_first(matrices) -> np.ndarray:
    matrices = sorted(matrices, key=lambda m: not np.allclose(m, np.eye(3)))
    return np.array([quat_from_matrix(m) for m in matrices])


def symmetry_set(spec: ShapeSpec) -> SymmetrySet:
    tag = spec.symmetry_class
    if tag in ("cube", "box"):
        return SymmetrySet(_box_group(spec.extents))
    if tag == "cylinder":
        flip = np.diag([1.0, -1.0, -1.0])
        return SymmetrySet(_with_identity_first([np.eye(3), flip]), continuous="z")
    if tag == "mirror":
        # half turn about the body x axis swaps the flat faces of the prism
        return SymmetrySet(_with_identity_first([np.eye(3), np.diag([1.0, -1.0, -1.0])]))
    if tag == "notched-cube":
        cycle = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return SymmetrySet(_with_identity_first([np.eye(3), cycle, cycle @ cycle]))
    if tag == "sphere":
        return SymmetrySet(np.array([[1.0, 0.0, 0.0, 0.0]]), continuous="all")
    if tag == "none":
        return SymmetrySet(np.array([[1.0, 0.0, 0.0, 0.0]]))
    raise ShapeError(f"Unknown symmetry class '{tag}'")
