from geometry.pose import (
    Pose,
    compose,
    inverse,
    dist_p,
    dist_q,
    dist_r,
    planarize,
)

__all__ = ["Pose", "compose", "inverse", "dist_p", "dist_q", "dist_r", "planarize"]
