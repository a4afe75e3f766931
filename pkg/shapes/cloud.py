"""Point-cloud rendering from meshes and PLY persistence."""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import open3d as o3d
import trimesh

from geometry.pose import Pose, quat_rotate
from shapes.mesh import TriMesh, contains_point, visible_from
from utils.errors import ShapeError


@dataclass(eq=False)
class PointCloud:
    """
    Captured object surface.

    Args:
        points (array): (n, 3) world coordinates.
        source_pose (Pose): Object pose at capture time.
        viewpoint (array | None): Camera position for single-view captures.
        normals (array | None): Per-point outward hints; only used to orient
            estimated normals.
    """

    points: np.ndarray
    source_pose: Pose = field(default_factory=Pose.identity)
    viewpoint: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(self.points) == 0:
            raise ShapeError("Point cloud is empty")
        if self.viewpoint is not None:
            self.viewpoint = np.asarray(self.viewpoint, dtype=float).reshape(3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.points)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


def _surface_samples(mesh: TriMesh, density: float, seed: int, jitter: float):
    if not density > 0.0:
        raise ShapeError(f"Sampling density must be positive, got {density}")
    count = int(round(mesh.area * density))
    if count < 1:
        raise ShapeError(f"Density {density} yields no points on a {mesh.area:.4f} m² surface")
    points, faces = trimesh.sample.sample_surface(mesh, count, seed=seed)
    normals = mesh.face_normals[faces]
    if jitter > 0.0:
        rng = np.random.default_rng([int(seed), 1])
        points = points + normals * rng.uniform(-jitter, jitter, size=(count, 1))
    return points, normals


def sample_full_cloud(mesh: TriMesh, density: float, seed: int, pose: Pose | None = None, jitter: float = 0.0) -> PointCloud:
    """Area-weighted uniform samples over the whole surface, placed at `pose`."""
    pose = pose or Pose.identity()
    points, normals = _surface_samples(mesh, density, seed, jitter)
    return PointCloud(
        points=pose.transform_points(points),
        source_pose=pose,
        normals=quat_rotate(pose.q, normals),
    )


def sample_partial_cloud(mesh: TriMesh, pose: Pose, viewpoint, density: float, seed: int, jitter: float = 0.0) -> PointCloud:
    """
    Single-view capture: samples facing `viewpoint` with an unobstructed line of sight.

    The same seed draws the same surface samples as `sample_full_cloud`, so the
    result is a positional subset of the full cloud.
    """
    viewpoint = np.asarray(viewpoint, dtype=float).reshape(3)
    local_view = pose.inverse().transform_points(viewpoint)
    if contains_point(mesh, local_view):
        raise ShapeError(f"Viewpoint {viewpoint.tolist()} lies inside the object")
    points, normals = _surface_samples(mesh, density, seed, jitter)
    facing = np.einsum("ij,ij->i", normals, local_view - points) > 0.0
    points, normals = points[facing], normals[facing]
    if len(points):
        visible = visible_from(mesh, points, local_view)
        points, normals = points[visible], normals[visible]
    if len(points) == 0:
        raise ShapeError("No surface is visible from the viewpoint")
    return PointCloud(
        points=pose.transform_points(points),
        source_pose=pose,
        viewpoint=viewpoint,
        normals=quat_rotate(pose.q, normals),
    )


def write_ply(cloud: PointCloud, path, config_hash: str = "") -> Path:
    """
    Binary PLY with points and normal hints. The capture pose, viewpoint and
    config hash travel as header comments.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcd = o3d.geometry.PointCloud(o3d.utility.Vector3dVector(cloud.points))
    if cloud.normals is not None:
        pcd.normals = o3d.utility.Vector3dVector(cloud.normals)
    if not o3d.io.write_point_cloud(str(path), pcd, write_ascii=False):
        raise ShapeError(f"Could not write cloud to {path}")
    comments = [f"source_pose {' '.join(repr(v) for v in cloud.source_pose.to_array())}"]
    if cloud.viewpoint is not None:
        comments.append(f"viewpoint {' '.join(repr(float(v)) for v in cloud.viewpoint)}")
    if config_hash:
        comments.append(f"config_hash {config_hash}")
    _add_header_comments(path, comments)
    return path


def _add_header_comments(path: Path, comments: list[str]) -> None:
    data = path.read_bytes()
    end = data.index(b"end_header")
    lines = data[:end].split(b"\n")
    extra = [f"comment {c}".encode("ascii") for c in comments]
    path.write_bytes(b"\n".join(lines[:2] + extra + lines[2:]) + data[end:])


def read_ply_header(path) -> dict:
    """Metadata comments of a cloud file: source_pose, viewpoint and config_hash when present."""
    path = Path(path)
    if not path.exists():
        raise ShapeError(f"Cloud file not found: {path}")
    data = path.read_bytes()
    if not data.startswith(b"ply") or b"end_header" not in data:
        raise ShapeError(f"{path} is not a PLY file")
    header = data[: data.index(b"end_header")].decode("ascii", errors="replace")
    meta = {}
    for line in header.splitlines():
        tokens = line.split()
        if len(tokens) < 3 or tokens[0] != "comment":
            continue
        if tokens[1] == "source_pose":
            meta["source_pose"] = Pose.from_array([float(t) for t in tokens[2:9]])
        elif tokens[1] == "viewpoint":
            meta["viewpoint"] = np.array([float(t) for t in tokens[2:5]])
        elif tokens[1] == "config_hash":
            meta["config_hash"] = tokens[2]
    return meta


def read_ply(path) -> PointCloud:
    meta = read_ply_header(path)
    pcd = o3d.io.read_point_cloud(str(path), format="ply")
    if not pcd.has_points():
        raise ShapeError(f"{path} holds no points")
    return PointCloud(
        points=np.asarray(pcd.points),
        source_pose=meta.get("source_pose", Pose.identity()),
        viewpoint=meta.get("viewpoint"),
        normals=np.asarray(pcd.normals) if pcd.has_normals() else None,
    )
