"""Contact frames: a surface feature plus its relational pose u and object offset h."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from geometry.pose import Pose, compose, inverse
from shapes.features import SurfaceFeature


class FrameKind(str, Enum):
    MANIPULATOR = "manipulator"
    ENVIRONMENT = "environment"
    POSITION = "position"


@dataclass(frozen=True, eq=False)
class ContactFrame:
    """
    Args:
        v (Pose): Feature frame.
        r (array): Feature descriptor (r1, r2).
        u (Pose): Relation to the link, the floor or the object origin, in the
            feature frame.
        h (Pose): v⁻¹ ∘ B^O, the object origin seen from the feature.
        kind (FrameKind): Fixed for the life of the frame.
        w (float): Non-negative weight.
    """

    v: Pose
    r: np.ndarray
    u: Pose
    h: Pose
    kind: FrameKind
    w: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FrameKind(self.kind))
        r = np.array(self.r, dtype=float).reshape(2)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        if self.w < 0.0:
            raise ValueError(f"Contact frame weight must be non-negative, got {self.w}")

    @classmethod
    def create(cls, feature: SurfaceFeature, u: Pose, kind, object_pose: Pose, w: float = 1.0) -> "ContactFrame":
        return cls(
            v=feature.v,
            r=feature.r,
            u=u,
            h=compose(inverse(feature.v), object_pose),
            kind=kind,
            w=float(w),
        )

    @property
    def feature(self) -> SurfaceFeature:
        return SurfaceFeature(v=self.v, r=self.r)

    @property
    def target(self) -> Pose:
        """Pose the relational offset points at: v ∘ u."""
        return compose(self.v, self.u)

    def with_weight(self, w: float) -> "ContactFrame":
        return ContactFrame(self.v, self.r, self.u, self.h, self.kind, float(w))

    def rebased(self, object_pose: Pose) -> "ContactFrame":
        """Same frame with h recomputed against another object pose estimate."""
        return ContactFrame(self.v, self.r, self.u, compose(inverse(self.v), object_pose), self.kind, self.w)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "v": self.v.to_array(),
            "r": [float(x) for x in self.r],
            "u": self.u.to_array(),
            "h": self.h.to_array(),
            "w": float(self.w),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContactFrame":
        return cls(
            v=Pose.from_array(data["v"]),
            r=np.array(data["r"], dtype=float),
            u=Pose.from_array(data["u"]),
            h=Pose.from_array(data["h"]),
            kind=data["kind"],
            w=float(data["w"]),
        )


def frame_arrays(frames):
    """Stacked v (p, q), r, u (p, q), w for vectorised kernels."""
    return (
        np.array([f.v.p for f in frames]).reshape(-1, 3),
        np.array([f.v.q for f in frames]).reshape(-1, 4),
        np.array([f.r for f in frames]).reshape(-1, 2),
        np.array([f.u.p for f in frames]).reshape(-1, 3),
        np.array([f.u.q for f in frames]).reshape(-1, 4),
        np.array([f.w for f in frames], dtype=float),
    )
