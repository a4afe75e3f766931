"""
Rigid-body algebra over SE(3).

Quaternions are scalar-first (w, x, y, z) numpy arrays. Every helper accepts
stacked inputs of shape (..., 4) / (..., 3) so kernel code can work on whole
collections at once. The world origin is the identity pose.

Classes:
- Pose: immutable (p, q) pair, normalised on construction.

Functions:
- compose / inverse: group operations on Pose values.
- compose_arrays / inverse_arrays: the same on stacked arrays.
- dist_p / dist_q / dist_r: the three distances every kernel is built from.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from utils.errors import BandwidthError

IDENTITY_Q = np.array([1.0, 0.0, 0.0, 0.0])
UNIT_TOL = 1e-9


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_multiply(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_conjugate(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_rotate(q, v):
    """Rotate vectors `v` (..., 3) by unit quaternions `q` (..., 4)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def quat_to_matrix(q):
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(np.roll(q, -1, axis=-1)).as_matrix()


def quat_from_matrix(m):
    """Scalar-first quaternion with non-negative w for rotation matrices `m`."""
    xyzw = Rotation.from_matrix(np.asarray(m, dtype=float)).as_quat()
    q = np.roll(xyzw, 1, axis=-1)
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = 0.5 * np.asarray(angle, dtype=float)[..., None]
    return np.concatenate([np.cos(half), np.sin(half) * axis], axis=-1)


def quat_from_yaw(yaw):
    return quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)


def yaw_of(q):
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def quat_angle(a, b):
    """Rotation angle in radians between two unit quaternions."""
    dot = np.abs(np.sum(np.asarray(a) * np.asarray(b), axis=-1))
    return 2.0 * np.arccos(np.clip(dot, 0.0, 1.0))


def random_quaternion(rng: np.random.Generator, size=None):
    shape = (4,) if size is None else (size, 4)
    return quat_normalize(rng.normal(size=shape))


def compose_arrays(pa, qa, pb, qb):
    """(pa, qa) ∘ (pb, qb) on stacked arrays."""
    p = np.asarray(pa, dtype=float) + quat_rotate(qa, pb)
    q = quat_normalize(quat_multiply(qa, qb))
    return p, q


def inverse_arrays(p, q):
    q_inv = quat_conjugate(q)
    return -quat_rotate(q_inv, p), q_inv


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Rigid-body pose or motion.

    Args:
        p (array): Translation in metres, 3 components.
        q (array): Unit quaternion, scalar first. Normalised on construction.
    """

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: IDENTITY_Q.copy())

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(3)
        q = np.array(self.q, dtype=float).reshape(4)
        norm = np.linalg.norm(q)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError(f"Degenerate quaternion {q}")
        p.setflags(write=False)
        q = q / norm
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_translation(cls, x: float, y: float, z: float) -> "Pose":
        return cls(p=np.array([x, y, z], dtype=float))

    @classmethod
    def planar(cls, x: float, y: float, yaw: float, z: float = 0.0) -> "Pose":
        return cls(p=np.array([x, y, z], dtype=float), q=quat_from_yaw(yaw))

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(p=m[:3, 3], q=quat_from_matrix(m[:3, :3]))

    @classmethod
    def from_array(cls, values) -> "Pose":
        values = [float(v) for v in values]
        if len(values) != 7:
            raise ValueError(f"A pose needs 7 numbers, got {len(values)}")
        return cls(p=values[:3], q=values[3:])

    def to_array(self) -> list[float]:
        """[px, py, pz, qw, qx, qy, qz] as plain floats."""
        return [float(v) for v in np.concatenate([self.p, self.q])]

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.q)
        m[:3, 3] = self.p
        return m

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    @property
    def yaw(self) -> float:
        return float(yaw_of(self.q))

    def transform_points(self, points) -> np.ndarray:
        return self.p + quat_rotate(self.q, np.asarray(points, dtype=float))

    def compose(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def inverse(self) -> "Pose":
        return inverse(self)

    def is_close(self, other: "Pose", tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.p, other.p, atol=tol)
            and 1.0 - abs(float(np.dot(self.q, other.q))) <= tol
        )

    def __repr__(self):
        p = ", ".join(f"{v:.4f}" for v in self.p)
        q = ", ".join(f"{v:.4f}" for v in self.q)
        return f"Pose(p=[{p}], q=[{q}])"


def compose(a: Pose, b: Pose) -> Pose:
    p, q = compose_arrays(a.p, a.q, b.p, b.q)
    return Pose(p=p, q=q)


def inverse(v: Pose) -> Pose:
    p, q = inverse_arrays(v.p, v.q)
    return Pose(p=p, q=q)


def planarize(pose: Pose) -> Pose:
    """Upright pose with the same position and heading."""
    return Pose.planar(pose.p[0], pose.p[1], pose.yaw, pose.p[2])


def _check_bandwidth(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0.0)):
        raise BandwidthError(f"Bandwidth must be strictly positive, got {sigma.tolist()}")
    return sigma


def dist_p(p, mu, sigma):
    """‖p − μ‖² / σ, broadcast over leading axes."""
    sigma = _check_bandwidth(sigma)
    diff = np.asarray(p, dtype=float) - np.asarray(mu, dtype=float)
    return np.sum(diff * diff, axis=-1) / sigma


def dist_q(q, mu, sigma):
    """(1 − |⟨q, μ⟩|) / σ; invariant under the sign of either quaternion."""
    sigma = _check_bandwidth(sigma)
    dot = np.abs(np.sum(np.asarray(q, dtype=float) * np.asarray(mu, dtype=float), axis=-1))
    return np.clip(1.0 - dot, 0.0, 1.0) / sigma


def dist_r(r, mu, sigma):
    """(r − μ)ᵀ diag(1/σ) (r − μ) for curvature descriptors."""
    sigma = _check_bandwidth(sigma)
    diff = np.asarray(r, dtype=float) - np.asarray(mu, dtype=float)
    return np.sum(diff * diff / sigma, axis=-1)
