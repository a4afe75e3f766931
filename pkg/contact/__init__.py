from contact.frames import ContactFrame, FrameKind
from contact.models import (
    ManipulatorContactModel,
    PositionModel,
    link_contact_frames,
    train_manipulator_contact_model,
    train_position_model,
)
from contact.environment import (
    EnvironmentContactModel,
    place_environment_contacts,
    sample_environment_contacts,
    weight_ag,
    weight_cd,
    weight_z,
)

__all__ = [
    "ContactFrame",
    "FrameKind",
    "ManipulatorContactModel",
    "PositionModel",
    "EnvironmentContactModel",
    "train_manipulator_contact_model",
    "train_position_model",
    "link_contact_frames",
    "sample_environment_contacts",
    "place_environment_contacts",
    "weight_z",
    "weight_cd",
    "weight_ag",
]
