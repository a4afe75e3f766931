"""
Synthetic object meshes.

Every builder returns a watertight, outward-wound trimesh.Trimesh whose
bounding-box centre sits at the origin, so the resting face lies on
z = -extents_z/2.
"""
from dataclasses import dataclass

import numpy as np
import trimesh
from scipy.spatial import ConvexHull

from utils.errors import ShapeError

CURVED_SEGMENTS = 64
SPHERE_SUBDIVISIONS = 3

TriMesh = trimesh.Trimesh

# kind -> number of dimension values it takes
SHAPE_ARITY = {
    "cube": 1,
    "box": 3,
    "cylinder": 2,
    "hybrid-halfcylinder-prism": 3,
    "notched-cube": 1,
    "sphere": 1,
}

# symmetry tag used by evaluation when a spec does not name one
DEFAULT_SYMMETRY = {
    "cube": "cube",
    "box": "box",
    "cylinder": "cylinder",
    "hybrid-halfcylinder-prism": "mirror",
    "notched-cube": "notched-cube",
    "sphere": "sphere",
}


@dataclass(frozen=True)
class ShapeSpec:
    """
    Object description used by configs and experiments.

    Args:
        kind (str): One of cube, box, cylinder, hybrid-halfcylinder-prism,
            notched-cube, sphere.
        dimensions (tuple): Metres. cube/notched-cube: (side,); box and hybrid:
            (x, y, z); cylinder: (height, radius); sphere: (radius,).
        symmetry_class (str): Tag consumed by evaluation.symmetry.
        name (str): Identifier used in libraries and reports.
    """

    kind: str
    dimensions: tuple
    symmetry_class: str = ""
    name: str = ""

    def __post_init__(self):
        if self.kind not in SHAPE_ARITY:
            raise ShapeError(f"Unknown shape kind '{self.kind}'")
        dims = tuple(float(d) for d in np.atleast_1d(self.dimensions))
        if len(dims) != SHAPE_ARITY[self.kind]:
            raise ShapeError(
                f"Shape '{self.kind}' takes {SHAPE_ARITY[self.kind]} dimension(s), got {len(dims)}"
            )
        if any(not d > 0.0 for d in dims):
            raise ShapeError(f"Shape dimensions must be positive, got {dims}")
        object.__setattr__(self, "dimensions", dims)
        if not self.symmetry_class:
            object.__setattr__(self, "symmetry_class", DEFAULT_SYMMETRY[self.kind])
        if not self.name:
            label = "x".join(f"{d * 100:g}" for d in dims)
            object.__setattr__(self, "name", f"{self.kind}-{label}")

    @property
    def extents(self) -> np.ndarray:
        """Bounding-box extents in metres."""
        d = self.dimensions
        if self.kind in ("cube", "notched-cube"):
            return np.array([d[0], d[0], d[0]])
        if self.kind == "cylinder":
            return np.array([2.0 * d[1], 2.0 * d[1], d[0]])
        if self.kind == "sphere":
            return np.full(3, 2.0 * d[0])
        return np.array(d)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dimensions": list(self.dimensions),
            "symmetry_class": self.symmetry_class,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShapeSpec":
        return cls(
            kind=data["kind"],
            dimensions=tuple(data["dimensions"]),
            symmetry_class=data.get("symmetry_class", ""),
            name=data.get("name", ""),
        )


def mesh_area(mesh: TriMesh) -> float:
    return float(mesh.area)


def mesh_volume(mesh: TriMesh) -> float:
    """Signed volume; positive for outward winding."""
    return float(mesh.volume)


def is_watertight(mesh: TriMesh) -> bool:
    return bool(mesh.is_watertight and mesh.is_winding_consistent)


def make_mesh(spec: ShapeSpec) -> TriMesh:
    builders = {
        "cube": lambda d: trimesh.creation.box(extents=(d[0], d[0], d[0])),
        "box": lambda d: trimesh.creation.box(extents=d),
        "cylinder": lambda d: trimesh.creation.cylinder(radius=d[1], height=d[0], sections=CURVED_SEGMENTS),
        "hybrid-halfcylinder-prism": lambda d: _hybrid(*d),
        "notched-cube": lambda d: _notched_cube(d[0]),
        "sphere": lambda d: trimesh.creation.icosphere(subdivisions=SPHERE_SUBDIVISIONS, radius=d[0]),
    }
    if spec.kind not in builders:
        raise ShapeError(f"Unknown shape kind '{spec.kind}'")
    mesh = builders[spec.kind](spec.dimensions)
    mesh.apply_translation(-mesh.bounds.mean(axis=0))
    return mesh


def _hybrid(dx: float, dy: float, dz: float, segments: int = CURVED_SEGMENTS) -> TriMesh:
    """Half disc on -x joined to an isosceles triangle on +x along their flat sides."""
    radius = 0.5 * dy
    length = dx - radius
    if length <= 0.0:
        raise ShapeError(f"Hybrid needs x extent > y/2, got {dx} <= {radius}")
    arc = np.linspace(0.5 * np.pi, 1.5 * np.pi, segments // 2 + 1)
    half_disc = radius * np.column_stack([np.cos(arc), np.sin(arc)])
    profile = np.vstack([half_disc, [[length, 0.0]]])
    # convex profile, so a fan triangulates it
    fan = np.array([[0, i, i + 1] for i in range(1, len(profile) - 1)])
    return trimesh.creation.extrude_triangulation(profile, fan, dz)


def _notched_cube(side: float) -> TriMesh:
    """Cube with a corner cube of 1/16 the volume removed at the +x+y+z corner."""
    notch = side * (1.0 / 16.0) ** (1.0 / 3.0)
    ticks = np.array([0.0, side - notch, side])
    filled = np.ones((2, 2, 2), dtype=bool)
    filled[1, 1, 1] = False
    return _cell_complex(ticks, filled)


def _cell_complex(ticks: np.ndarray, filled: np.ndarray) -> TriMesh:
    """Boundary of a union of grid cells, one quad per exposed cell face."""
    n = len(ticks)

    def occupied(i, j, k):
        inside = 0 <= i < n - 1 and 0 <= j < n - 1 and 0 <= k < n - 1
        return inside and filled[i, j, k]

    quads = []
    for i, j, k in zip(*np.nonzero(filled)):
        for axis in range(3):
            for side in (0, 1):
                step = [0, 0, 0]
                step[axis] = 1 if side else -1
                if occupied(i + step[0], j + step[1], k + step[2]):
                    continue
                a, b = [ax for ax in range(3) if ax != axis]
                quad = []
                for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    corner = [i, j, k]
                    corner[axis] += side
                    corner[a] += da
                    corner[b] += db
                    quad.append(ticks[corner])
                quads.append(quad)
    vertices = np.array(quads).reshape(-1, 3)
    base = 4 * np.arange(len(quads))[:, None]
    faces = np.vstack([base + [0, 1, 2], base + [0, 2, 3]])
    mesh = trimesh.Trimesh(vertices=vertices, faces=faces, process=True)
    mesh.fix_normals()
    return mesh


def footprint_polygon(mesh: TriMesh, tol: float = 1e-6) -> np.ndarray:
    """Counter-clockwise xy hull of the vertices on the resting face."""
    z = mesh.vertices[:, 2]
    bottom = mesh.vertices[z <= z.min() + tol, :2]
    if len(bottom) < 3:
        # curved bottoms rest on a patch; use the lowest band of vertices
        bottom = mesh.vertices[z <= z.min() + 0.05 * mesh.extents[2], :2]
    hull = ConvexHull(bottom)
    return bottom[hull.vertices]


def outline_polygon(mesh: TriMesh, max_height: float | None = None) -> np.ndarray:
    """Counter-clockwise xy hull of the mesh projected onto the ground plane."""
    vertices = mesh.vertices
    if max_height is not None:
        low = vertices[vertices[:, 2] - vertices[:, 2].min() <= max_height]
        if len(low) >= 3:
            vertices = low
    hull = ConvexHull(vertices[:, :2])
    return vertices[hull.vertices, :2]


def polygon_centroid(polygon: np.ndarray) -> np.ndarray:
    x, y = polygon[:, 0], polygon[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def contains_point(mesh: TriMesh, point) -> bool:
    return bool(mesh.contains(np.asarray(point, dtype=float).reshape(1, 3))[0])


def closest_point(mesh: TriMesh, x):
    """
    Closest point on the mesh surface.

    Args:
        mesh (TriMesh): Target surface.
        x (array): A point (3,) or stack of points (n, 3).

    Returns:
        (points, distances) with the same leading shape as `x`.
    """
    x = np.asarray(x, dtype=float)
    points, distances, _ = trimesh.proximity.closest_point(mesh, np.atleast_2d(x))
    if x.ndim == 1:
        return points[0], float(distances[0])
    return points, distances


def visible_from(mesh: TriMesh, points, viewpoint, tol: float = 1e-6) -> np.ndarray:
    """
    Mask of surface `points` whose line of sight to `viewpoint` is clear.

    Casts one ray from the viewpoint to each point; a point is visible when
    the first hit along its ray is the point itself.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    viewpoint = np.asarray(viewpoint, dtype=float).reshape(3)
    rays = points - viewpoint
    lengths = np.linalg.norm(rays, axis=1)
    directions = rays / lengths[:, None]
    origins = np.tile(viewpoint, (len(points), 1))
    locations, index_ray, _ = mesh.ray.intersects_location(origins, directions, multiple_hits=False)
    visible = np.ones(len(points), dtype=bool)
    if len(index_ray):
        first = np.einsum("ij,ij->i", locations - viewpoint, directions[index_ray])
        visible[index_ray] = first >= lengths[index_ray] - tol
    return visible
