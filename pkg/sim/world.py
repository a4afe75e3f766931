"""
Simulator world: ground plane at z = 0, one object at rest, and a flat bumper.

The bumper link frame sits at the centre of its front face with x along the
push direction and z up.
"""
from dataclasses import dataclass, field

import numpy as np

from geometry.pose import Pose, planarize
from shapes.mesh import ShapeSpec, TriMesh, footprint_polygon, make_mesh, outline_polygon, polygon_centroid
from utils.errors import SimulationError

CONTACT_TOL = 1e-3
SUPPORT_POINTS = 16


@dataclass(frozen=True)
class BumperSpec:
    width: float = 0.4
    height: float = 0.1
    depth: float = 0.02

    def __post_init__(self):
        if min(self.width, self.height, self.depth) <= 0.0:
            raise SimulationError(f"Bumper dimensions must be positive, got {self}")

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "depth": self.depth}


def make_bumper_mesh(bumper: BumperSpec) -> TriMesh:
    """Box behind the front face: x in [−depth, 0]."""
    mesh = make_mesh(ShapeSpec("box", (bumper.depth, bumper.width, bumper.height), name="bumper"))
    mesh.apply_translation([-0.5 * bumper.depth, 0.0, 0.0])
    return mesh


@dataclass(eq=False)
class World:
    """
    Args:
        spec (ShapeSpec): Object description.
        mesh (TriMesh): Object mesh in its body frame.
        bumper (BumperSpec): Pusher geometry.
        bumper_mesh (TriMesh): Pusher mesh in the link frame.
        rest_pose (Pose): Object pose when resting at the world origin.
    """

    spec: ShapeSpec
    mesh: TriMesh
    bumper: BumperSpec
    bumper_mesh: TriMesh
    rest_pose: Pose
    footprint: np.ndarray = field(init=False)
    outline: np.ndarray = field(init=False)
    support_centre: np.ndarray = field(init=False)

    def __post_init__(self):
        self.footprint = footprint_polygon(self.mesh)
        self.outline = outline_polygon(self.mesh)
        self.support_centre = polygon_centroid(self.footprint)

    @property
    def rest_height(self) -> float:
        return float(self.rest_pose.p[2])

    @property
    def mount_height(self) -> float:
        """Height of the bumper face centre; its bottom edge skims the floor."""
        return 0.5 * self.bumper.height

    def object_pose(self, x: float, y: float, yaw: float) -> Pose:
        return Pose.planar(x, y, yaw, self.rest_height)

    def support_points(self, rng: np.random.Generator, n: int = SUPPORT_POINTS) -> np.ndarray:
        """Uniform draws over the footprint, in the body frame."""
        lo, hi = self.footprint.min(axis=0), self.footprint.max(axis=0)
        points = []
        while len(points) < n:
            candidates = rng.uniform(lo, hi, size=(4 * n, 2))
            points.extend(candidates[_inside_convex(self.footprint, candidates)])
        return np.array(points[:n])

    def training_link_pose(self) -> Pose:
        """Bumper centred on the −x side, touching it and facing +x."""
        x_min = float(self.mesh.vertices[:, 0].min())
        return Pose.from_translation(x_min, 0.0, self.mount_height)

    def place_pusher(self, contact_pose: Pose) -> Pose:
        """Bumper face centred on a contact pose, upright at the mount height."""
        return Pose.planar(contact_pose.p[0], contact_pose.p[1], contact_pose.yaw, self.mount_height)

    def to_dict(self) -> dict:
        return {
            "object": self.spec.to_dict(),
            "bumper": self.bumper.to_dict(),
            "rest_pose": self.rest_pose.to_array(),
        }


def _inside_convex(polygon: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Points on or inside a counter-clockwise convex polygon."""
    edges = np.roll(polygon, -1, axis=0) - polygon
    rel = points[:, None, :] - polygon[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -1e-12, axis=1)


def make_world(spec: ShapeSpec, bumper: BumperSpec | None = None) -> World:
    mesh = make_mesh(spec)
    bumper = bumper or BumperSpec()
    return World(
        spec=spec,
        mesh=mesh,
        bumper=bumper,
        bumper_mesh=make_bumper_mesh(bumper),
        rest_pose=Pose.from_translation(0.0, 0.0, 0.5 * mesh.extents[2]),
    )


def face_depths(world: World, object_pose: Pose, pusher_pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """
    Outline vertices in the bumper frame: depth in front of the face and
    lateral offset. Negative depth means the vertex is inside the bumper.
    """
    outline = np.column_stack([world.outline, np.zeros(len(world.outline))])
    world_points = object_pose.transform_points(outline)[:, :2]
    heading = pusher_pose.yaw
    normal = np.array([np.cos(heading), np.sin(heading)])
    tangent = np.array([-normal[1], normal[0]])
    rel = world_points - pusher_pose.p[:2]
    return rel @ normal, rel @ tangent


def penetration_depth(world: World, object_pose: Pose, pusher_pose: Pose) -> float:
    """Deepest outline vertex behind the bumper face, 0 when clear or the object is behind the bumper."""
    depth, lateral = face_depths(world, object_pose, pusher_pose)
    centre = object_pose.transform_points(np.append(world.support_centre, 0.0))[:2]
    heading = pusher_pose.yaw
    if float((centre - pusher_pose.p[:2]) @ np.array([np.cos(heading), np.sin(heading)])) <= 0.0:
        return 0.0
    inside = depth[(np.abs(lateral) <= 0.5 * world.bumper.width) & (depth < 0.0)]
    return float(-inside.min()) if inside.size else 0.0


def settle_pusher(world: World, object_pose: Pose, pusher_pose: Pose) -> Pose:
    """Back the bumper off along its heading until it no longer overlaps the object."""
    overlap = penetration_depth(world, object_pose, pusher_pose)
    if overlap == 0.0:
        return pusher_pose
    heading = pusher_pose.yaw
    shift = -overlap * np.array([np.cos(heading), np.sin(heading), 0.0])
    return Pose(p=pusher_pose.p + shift, q=pusher_pose.q)


def check_clearance(world: World, object_pose: Pose, pusher_pose: Pose, tol: float = CONTACT_TOL) -> None:
    if penetration_depth(world, object_pose, pusher_pose) > tol:
        raise SimulationError(f"Bumper overlaps '{world.spec.name}' at the start pose")
