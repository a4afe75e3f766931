"""Push actions, push data records and the per-action motion model that stores them."""
from dataclasses import dataclass, field

import numpy as np

from contact.frames import ContactFrame, FrameKind
from density.kernels import Bandwidths
from geometry.pose import Pose, compose, inverse
from sim.params import PhysicalParams
from utils.errors import ModelError, SimulationError


@dataclass(frozen=True)
class Action:
    """
    Args:
        action_id (str): Key used by motion models and reports.
        linear_velocity (float): Desired forward velocity ẋ, m/s.
        angular_velocity (float): Desired turn rate θ̇, deg/s.
        duration (float): Push length, s.
        speed (float): Target speed the drive tries to hold, m/s.
    """

    action_id: str
    linear_velocity: float = 0.1
    angular_velocity: float = 0.0
    duration: float = 4.0
    speed: float = 0.1

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError(f"Action duration must be positive, got {self.duration}")
        if self.speed < 0.0:
            raise ValueError(f"Action speed must be non-negative, got {self.speed}")

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "linear_velocity": self.linear_velocity,
            "angular_velocity": self.angular_velocity,
            "duration": self.duration,
            "speed": self.speed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Action":
        return cls(**data)


def make_actions(n_actions: int = 3, angle_range=(-10.0, 10.0), duration: float = 4.0, speed: float = 0.1) -> list[Action]:
    """Evenly spread turn rates over `angle_range` (deg/s)."""
    if n_actions < 1:
        raise ValueError("At least one action is needed")
    rates = [0.5 * (angle_range[0] + angle_range[1])] if n_actions == 1 else np.linspace(*angle_range, n_actions)
    return [
        Action(
            action_id=f"a{i}",
            linear_velocity=speed,
            angular_velocity=float(rate),
            duration=duration,
            speed=speed,
        )
        for i, rate in enumerate(rates)
    ]


@dataclass(eq=False)
class PushDataRecord:
    action_id: str
    params: PhysicalParams
    frames: list[ContactFrame]
    local_motions: list[Pose]
    global_motion: Pose
    placement: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if len(self.frames) != len(self.local_motions):
            raise ModelError(
                f"Record has {len(self.frames)} frames but {len(self.local_motions)} local motions"
            )

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "params": self.params.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
            "local_motions": [m.to_array() for m in self.local_motions],
            "global_motion": self.global_motion.to_array(),
            "placement": self.placement.to_array(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PushDataRecord":
        return cls(
            action_id=data["action_id"],
            params=PhysicalParams.from_dict(data["params"]),
            frames=[ContactFrame.from_dict(f) for f in data["frames"]],
            local_motions=[Pose.from_array(m) for m in data["local_motions"]],
            global_motion=Pose.from_array(data["global_motion"]),
            placement=Pose.from_array(data["placement"]),
        )


def record_push(episode, frames: list[ContactFrame], action_id: str = "", params: PhysicalParams | None = None) -> PushDataRecord:
    """
    Turn a finished episode into a PushDataRecord.

    Frames ride rigidly on the object: frame i sits at B(t) ∘ h_i⁻¹, and its
    local motion is v_i(t0)⁻¹ ∘ v_i(t_F).
    """
    start, final = episode.initial_pose, episode.final_pose
    if not (np.isfinite(final.p).all() and np.isfinite(final.q).all()):
        raise SimulationError("Simulation diverged: non-finite final pose")
    local_motions = []
    for frame in frames:
        v0 = compose(start, inverse(frame.h))
        vF = compose(final, inverse(frame.h))
        local_motions.append(compose(inverse(v0), vF))
    return PushDataRecord(
        action_id=action_id,
        params=params or episode.params,
        frames=list(frames),
        local_motions=local_motions,
        global_motion=compose(inverse(start), final),
        placement=episode.pusher_start,
    )


@dataclass(eq=False)
class MotionModel:
    actions: list[Action]
    records: dict = field(default_factory=dict)
    sigma: Bandwidths = field(default_factory=Bandwidths)
    shape_id: str = ""
    skipped: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [a.action_id for a in self.actions]
        if len(set(ids)) != len(ids):
            raise ModelError(f"Duplicate action ids {ids}")
        for action_id in ids:
            self.records.setdefault(action_id, [])
        unknown = set(self.records) - set(ids)
        if unknown:
            raise ModelError(f"Records for unknown actions {sorted(unknown)}")

    def action(self, action_id: str) -> Action:
        for action in self.actions:
            if action.action_id == action_id:
                return action
        raise ModelError(f"Unknown action '{action_id}'")

    def add(self, record: PushDataRecord) -> None:
        if record.action_id not in self.records:
            raise ModelError(f"Record for unknown action '{record.action_id}'")
        self.records[record.action_id].append(record)

    def count(self, action_id: str | None = None) -> int:
        if action_id is not None:
            return len(self.records[action_id])
        return sum(len(r) for r in self.records.values())

    def frame_pool(self, action_id: str, kind: FrameKind) -> tuple[list[ContactFrame], list[Pose]]:
        """Every recorded frame of `kind` for an action, with its local motion."""
        frames, motions = [], []
        for record in self.records[self.action(action_id).action_id]:
            for frame, motion in zip(record.frames, record.local_motions):
                if frame.kind is kind:
                    frames.append(frame)
                    motions.append(motion)
        return frames, motions

    def to_dict(self) -> dict:
        return {
            "shape_id": self.shape_id,
            "sigma": self.sigma.to_dict(),
            "actions": [a.to_dict() for a in self.actions],
            "records": {k: [r.to_dict() for r in v] for k, v in sorted(self.records.items())},
            "skipped": dict(sorted(self.skipped.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MotionModel":
        return cls(
            actions=[Action.from_dict(a) for a in data["actions"]],
            records={k: [PushDataRecord.from_dict(r) for r in v] for k, v in data["records"].items()},
            sigma=Bandwidths.from_dict(data["sigma"]),
            shape_id=data["shape_id"],
            skipped=dict(data.get("skipped", {})),
        )
