"""
Surface features: a local frame (normal plus principal directions) and the
pair of principal curvature magnitudes at each cloud point.

Frames are stored with columns [k1, k2, n]; k1 follows the direction of
highest curvature and n faces out of the object.
"""
from dataclasses import dataclass

import numpy as np
import open3d as o3d
from loguru import logger

from geometry.pose import Pose, quat_from_matrix
from shapes.cloud import PointCloud
from utils.errors import ShapeError

MIN_NEIGHBORS = 8
ISOTROPY_TOL = 0.5  # 1/m; below this r1 - r2 the principal directions are arbitrary
AXIS_TOL = 1e-3

WORLD_X = np.array([1.0, 0.0, 0.0])
WORLD_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class SurfaceFeature:
    """
    Args:
        v (Pose): Feature frame in world coordinates.
        r (array): Descriptor (r1, r2) in 1/m with r1 >= r2.
    """

    v: Pose
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(2)
        if r[1] > r[0]:
            r = r[::-1].copy()
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def position(self) -> np.ndarray:
        return self.v.p

    @property
    def normal(self) -> np.ndarray:
        return self.v.rotation[:, 2]

    def moved(self, pose: Pose) -> "SurfaceFeature":
        return SurfaceFeature(v=pose.compose(self.v), r=self.r)


def feature_arrays(features) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack positions (n, 3), quaternions (n, 4) and descriptors (n, 2)."""
    if len(features) == 0:
        return np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 2))
    p = np.array([f.v.p for f in features])
    q = np.array([f.v.q for f in features])
    r = np.array([f.r for f in features])
    return p, q, r


def extract_features(cloud: PointCloud, neighborhood_radius: float = 0.02, min_neighbors: int = MIN_NEIGHBORS) -> list[SurfaceFeature]:
    """
    Estimate a SurfaceFeature for every point with enough neighbours.

    Normals come from Open3D's neighbourhood PCA, oriented towards the capture
    viewpoint, along the stored normal hints, or away from the centroid.
    Curvatures come from a quadric fitted in the tangent frame. Points with
    fewer than `min_neighbors` others inside the radius are dropped.
    """
    points = cloud.points
    pcd = _oriented_normals(cloud, neighborhood_radius)
    normals = np.asarray(pcd.normals)
    tree = o3d.geometry.KDTreeFlann(pcd)
    features = []
    dropped = 0
    for i, point in enumerate(points):
        count, idx, _ = tree.search_radius_vector_3d(point, neighborhood_radius)
        if count - 1 < min_neighbors:
            dropped += 1
            continue
        local = points[np.asarray(idx)]
        normal = normals[i] / np.linalg.norm(normals[i])
        curvature = _principal_curvatures(points[i], local, normal)
        if curvature is None:
            dropped += 1
            continue
        r, k1 = curvature
        frame = _canonical_frame(normal, k1, r)
        features.append(SurfaceFeature(v=Pose(p=points[i], q=quat_from_matrix(frame)), r=r))
    if not features:
        raise ShapeError(
            f"No point has {min_neighbors} neighbours within {neighborhood_radius} m "
            f"({len(points)} points)"
        )
    if dropped:
        logger.debug(f"Feature extraction dropped {dropped}/{len(points)} sparse points")
    return features


def _oriented_normals(cloud: PointCloud, radius: float) -> o3d.geometry.PointCloud:
    pcd = o3d.geometry.PointCloud(o3d.utility.Vector3dVector(cloud.points))
    if cloud.normals is not None:
        # estimate_normals flips each estimate to agree with an existing normal
        pcd.normals = o3d.utility.Vector3dVector(cloud.normals)
    pcd.estimate_normals(o3d.geometry.KDTreeSearchParamRadius(radius))
    if cloud.viewpoint is not None:
        pcd.orient_normals_towards_camera_location(cloud.viewpoint)
    elif cloud.normals is None:
        pcd.orient_normals_towards_camera_location(cloud.centroid)
        pcd.normals = o3d.utility.Vector3dVector(-np.asarray(pcd.normals))
    return pcd


def _tangent_basis(normal):
    helper = WORLD_X if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return e1, e2


def _principal_curvatures(point, local, normal):
    """Quadric h = Au² + Buv + Cv² + Du + Ev + F in the tangent frame at `point`."""
    e1, e2 = _tangent_basis(normal)
    rel = local - point
    u = rel @ e1
    v = rel @ e2
    h = rel @ normal
    design = np.column_stack([u * u, u * v, v * v, u, v, np.ones_like(u)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, h, rcond=None)
    if rank < 6:
        return None
    a, b, c, d, e, _ = coeffs
    first = np.array([[1.0 + d * d, d * e], [d * e, 1.0 + e * e]])
    scale = np.sqrt(1.0 + d * d + e * e)
    second = np.array([[2.0 * a, b], [b, 2.0 * c]]) / scale
    shape_operator = np.linalg.solve(first, second)
    values, vectors = np.linalg.eig(shape_operator)
    values = np.real(values)
    vectors = np.real(vectors)
    order = np.argsort(-np.abs(values))
    r = np.abs(values[order])
    direction = vectors[0, order[0]] * e1 + vectors[1, order[0]] * e2
    direction -= np.dot(direction, normal) * normal
    norm = np.linalg.norm(direction)
    k1 = direction / norm if norm > 0.0 else e1
    return r, k1


def _canonical_frame(normal, k1, r) -> np.ndarray:
    if r[0] - r[1] < ISOTROPY_TOL:
        k1 = WORLD_Z - np.dot(WORLD_Z, normal) * normal
        if np.linalg.norm(k1) < 0.1:
            k1 = WORLD_X - np.dot(WORLD_X, normal) * normal
        k1 /= np.linalg.norm(k1)
    k2 = np.cross(normal, k1)
    if abs(k2[2]) > AXIS_TOL:
        flip = k2[2] < 0.0
    elif abs(k1[2]) > AXIS_TOL:
        flip = k1[2] < 0.0
    elif abs(k1[0]) > AXIS_TOL:
        flip = k1[0] < 0.0
    else:
        flip = k1[1] < 0.0
    if flip:
        k1, k2 = -k1, -k2
    return np.column_stack([k1, k2, normal])
