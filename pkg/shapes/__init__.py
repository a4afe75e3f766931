from shapes.mesh import ShapeSpec, TriMesh, make_mesh
from shapes.cloud import PointCloud, read_ply, sample_full_cloud, sample_partial_cloud, write_ply
from shapes.features import SurfaceFeature, extract_features

__all__ = [
    "ShapeSpec",
    "TriMesh",
    "make_mesh",
    "PointCloud",
    "sample_full_cloud",
    "sample_partial_cloud",
    "write_ply",
    "read_ply",
    "SurfaceFeature",
    "extract_features",
]
