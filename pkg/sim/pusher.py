"""
Quasi-static planar pushing.

The object slides on the floor with an ellipsoidal limit surface centred on
its footprint centroid. The bumper follows the action's unicycle twist; at up
to two contact points the stick / slide / separate modes are enumerated and
the first consistent one drives the object.
"""
import itertools
from dataclasses import dataclass

import numpy as np
import pandas as pd
from loguru import logger

from geometry.pose import Pose, planarize
from sim.params import PhysicalParams
from sim.world import CONTACT_TOL, World, check_clearance, face_depths, penetration_depth
from utils.errors import SimulationError

GRAVITY = 9.81
STALL_FORCE = 20.0  # N; bumper speed drops linearly to zero at this pushing force
KE_LIMIT = 0.5  # J
SOLVE_TOL = 1e-9
MODES = ("stick", "slide+", "slide-", "separate")


@dataclass(eq=False)
class PushEpisode:
    """
    Args:
        times (array): Strictly increasing timestamps, starting at 0.
        object_states (array): (n, 3) object x, y, yaw.
        pusher_states (array): (n, 3) bumper x, y, heading.
        initial_pose (Pose): Object pose at t0.
        final_pose (Pose): Object pose at t_F.
        pusher_start (Pose): Bumper pose at t0 after settling.
        params (PhysicalParams): Parameters the episode ran with.
        contact_lost (bool): Contact was made and later broken.
        max_kinetic_energy (float): Largest object kinetic energy seen, J.
    """

    times: np.ndarray
    object_states: np.ndarray
    pusher_states: np.ndarray
    initial_pose: Pose
    final_pose: Pose
    pusher_start: Pose
    params: PhysicalParams
    contact_lost: bool = False
    max_kinetic_energy: float = 0.0

    @property
    def displacement(self) -> float:
        return float(np.linalg.norm(self.final_pose.p[:2] - self.initial_pose.p[:2]))

    def object_pose_at(self, i: int) -> Pose:
        x, y, yaw = self.object_states[i]
        return Pose.planar(x, y, yaw, self.initial_pose.p[2])


@dataclass(frozen=True)
class _Solution:
    modes: tuple
    forces: np.ndarray
    twist: np.ndarray
    violation: float


def _perp(a):
    return np.stack([-a[..., 1], a[..., 0]], axis=-1)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _solve_modes(points, centre, c, normal, tangent, pusher_xy, v, omega, mu) -> _Solution:
    """
    Quasi-static twist of the object for pusher contacts at `points`.

    Forces are kept in twist units: the object twist is G f, where G maps
    per-contact (normal, tangential) forces through the limit surface
    diag(1, 1, 1/c²).
    """
    k = len(points)
    r = points - centre
    G = np.zeros((3, 2 * k))
    for i in range(k):
        G[:, 2 * i] = [normal[0], normal[1], _cross(r[i], normal) / c**2]
        G[:, 2 * i + 1] = [tangent[0], tangent[1], _cross(r[i], tangent) / c**2]
    JG = [np.array([[1.0, 0.0, -r[i, 1]], [0.0, 1.0, r[i, 0]]]) @ G for i in range(k)]
    v_push = v * normal + omega * _perp(points - pusher_xy)

    best = None
    for modes in itertools.product(MODES, repeat=k):
        rows, rhs = [], []
        for i, mode in enumerate(modes):
            fn_row, ft_row = np.zeros(2 * k), np.zeros(2 * k)
            fn_row[2 * i], ft_row[2 * i + 1] = 1.0, 1.0
            if mode == "stick":
                rows.extend(JG[i])
                rhs.extend(v_push[i])
            elif mode == "separate":
                rows += [fn_row, ft_row]
                rhs += [0.0, 0.0]
            else:
                s = 1.0 if mode == "slide+" else -1.0
                rows += [normal @ JG[i], ft_row + s * mu * fn_row]
                rhs += [normal @ v_push[i], 0.0]
        A, b = np.array(rows), np.array(rhs)
        f = np.linalg.lstsq(A, b, rcond=None)[0]
        violation = float(np.linalg.norm(A @ f - b))
        for i, mode in enumerate(modes):
            fn, ft = f[2 * i], f[2 * i + 1]
            rel = JG[i] @ f - v_push[i]
            violation += max(0.0, -fn)
            if mode == "stick":
                violation += max(0.0, abs(ft) - mu * fn)
            elif mode == "separate":
                violation += max(0.0, -float(normal @ rel))
            else:
                s = 1.0 if mode == "slide+" else -1.0
                violation += max(0.0, -s * float(tangent @ rel))
        solution = _Solution(modes, f, G @ f, violation)
        if violation <= SOLVE_TOL:
            return solution
        if best is None or violation < best.violation:
            best = solution
    return best


def _edge_distance(polygon: np.ndarray, origin: np.ndarray, direction: np.ndarray) -> float:
    """Distance from `origin` along `direction` to the boundary of a convex polygon."""
    a = polygon
    e = np.roll(polygon, -1, axis=0) - a
    den = _cross(direction[None, :], e)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _cross(a - origin, e) / den
        s = _cross(a - origin, direction[None, :]) / den
    valid = (np.abs(den) > 1e-12) & (t >= 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    return float(t[valid].min()) if np.any(valid) else 0.0


def _rotation2(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s], [s, c]])


def _contacts(world: World, object_pose: Pose, pusher_pose: Pose) -> np.ndarray:
    """Outline vertices touching the bumper face, reduced to the two lateral extremes."""
    depth, lateral = face_depths(world, object_pose, pusher_pose)
    touching = (depth <= CONTACT_TOL) & (depth > -world.bumper.depth) & (np.abs(lateral) <= 0.5 * world.bumper.width)
    if not np.any(touching):
        return np.zeros((0, 2))
    outline = np.column_stack([world.outline, np.zeros(len(world.outline))])
    points = object_pose.transform_points(outline)[touching, :2]
    side = lateral[touching]
    lo, hi = int(np.argmin(side)), int(np.argmax(side))
    if side[hi] - side[lo] <= 1e-9:
        return points[[lo]]
    return points[[lo, hi]]


def simulate_push(
    world: World,
    initial_pose: Pose,
    params: PhysicalParams,
    pusher_pose: Pose,
    action,
    dt: float = 0.01,
    rng: np.random.Generator | None = None,
    duration: float | None = None,
    stall_force: float = STALL_FORCE,
) -> PushEpisode:
    """
    Push the object with the bumper following `action` for `duration` seconds.

    Args:
        world (World): Object and bumper geometry.
        initial_pose (Pose): Upright object pose at t0.
        params (PhysicalParams): Mass and friction coefficients.
        pusher_pose (Pose): Bumper link pose at t0; must not overlap the object.
        action (Action): Speed and turn rate of the bumper.
        dt (float): Integration step, (0, 0.05] s.
        rng (Generator): Draws the limit-surface support points.
        duration (float | None): Overrides the action's duration.
        stall_force (float): Pushing force at which the bumper stops, N.

    Raises:
        SimulationError: Bumper overlaps the object, contact is never made,
            the object would tip, or the motion stops being quasi-static.
    """
    if not 0.0 < dt <= 0.05:
        raise SimulationError(f"dt must lie in (0, 0.05], got {dt}")
    rng = rng if rng is not None else np.random.default_rng(0)
    duration = action.duration if duration is None else float(duration)
    initial_pose = planarize(initial_pose)
    pusher_pose = planarize(pusher_pose)
    check_clearance(world, initial_pose, pusher_pose)

    n_steps = int(round(duration / dt))
    support = world.support_points(rng)
    c = float(np.linalg.norm(support - world.support_centre, axis=1).mean())
    f_max = params.ground_friction * params.mass * GRAVITY
    v_cmd, omega_cmd = action.speed, np.deg2rad(action.angular_velocity)
    z_object, z_pusher = initial_pose.p[2], pusher_pose.p[2]

    obj = np.array([initial_pose.p[0], initial_pose.p[1], initial_pose.yaw])
    push = np.array([pusher_pose.p[0], pusher_pose.p[1], pusher_pose.yaw])
    object_states, pusher_states = [obj.copy()], [push.copy()]
    touched = lost = False
    max_ke = 0.0
    last_modes = None

    for _ in range(n_steps):
        object_pose = Pose.planar(*obj, z_object)
        current_pusher = Pose.planar(*push, z_pusher)
        points = _contacts(world, object_pose, current_pusher)
        normal = np.array([np.cos(push[2]), np.sin(push[2])])
        twist, speed = np.zeros(3), 1.0
        if len(points):
            touched = True
            centre = obj[:2] + _rotation2(obj[2]) @ world.support_centre
            footprint = obj[:2] + world.footprint @ _rotation2(obj[2]).T
            if params.ground_friction * z_pusher > _edge_distance(footprint, centre, normal):
                raise SimulationError(
                    f"Object '{world.spec.name}' would tip: μ_g·h = {params.ground_friction * z_pusher:.3f} m"
                )
            solution = _solve_modes(
                points, centre, c, normal, _perp(normal), push[:2], v_cmd, omega_cmd, params.pusher_friction
            )
            if solution.modes != last_modes:
                logger.debug(f"Contact modes {solution.modes} (violation {solution.violation:.2e})")
                last_modes = solution.modes
            wrench_norm = np.sqrt(solution.twist[0] ** 2 + solution.twist[1] ** 2 + (solution.twist[2] * c) ** 2)
            pushing_force = 0.0
            if wrench_norm > 0.0:
                pushing_force = f_max * float(solution.forces[0::2].sum()) / wrench_norm
            speed = max(0.0, 1.0 - pushing_force / stall_force)
            twist = speed * solution.twist
        elif touched:
            lost = True

        centre = obj[:2] + _rotation2(obj[2]) @ world.support_centre
        yaw = obj[2] + twist[2] * dt
        obj = np.append(centre + twist[:2] * dt - _rotation2(yaw) @ world.support_centre, yaw)
        push = push + speed * dt * np.array([v_cmd * normal[0], v_cmd * normal[1], omega_cmd])

        overlap = penetration_depth(world, Pose.planar(*obj, z_object), Pose.planar(*push, z_pusher))
        if overlap > 0.0:
            heading = np.array([np.cos(push[2]), np.sin(push[2])])
            obj[:2] += overlap * heading

        kinetic = 0.5 * params.mass * (twist[0] ** 2 + twist[1] ** 2 + (c * twist[2]) ** 2)
        max_ke = max(max_ke, kinetic)
        if kinetic > KE_LIMIT or not np.isfinite(obj).all():
            raise SimulationError(f"Push left the quasi-static regime (kinetic energy {kinetic:.3g} J)")
        object_states.append(obj.copy())
        pusher_states.append(push.copy())

    if n_steps > 0 and not touched:
        raise SimulationError(f"Bumper never reached '{world.spec.name}'")

    x, y, yaw = object_states[-1]
    return PushEpisode(
        times=dt * np.arange(n_steps + 1),
        object_states=np.array(object_states),
        pusher_states=np.array(pusher_states),
        initial_pose=initial_pose,
        final_pose=Pose.planar(x, y, yaw, z_object) if n_steps else initial_pose,
        pusher_start=pusher_pose,
        params=params,
        contact_lost=lost,
        max_kinetic_energy=max_ke,
    )


def episode_to_frame(episode: PushEpisode) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": episode.times,
            "x": episode.object_states[:, 0],
            "y": episode.object_states[:, 1],
            "yaw": episode.object_states[:, 2],
            "pusher_x": episode.pusher_states[:, 0],
            "pusher_y": episode.pusher_states[:, 1],
            "pusher_heading": episode.pusher_states[:, 2],
        }
    )
