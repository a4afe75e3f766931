from motion.records import Action, MotionModel, PushDataRecord, make_actions, record_push
from motion.model import MotionPrediction, local_to_global, predict, training_displacements

__all__ = [
    "Action",
    "MotionModel",
    "PushDataRecord",
    "make_actions",
    "record_push",
    "MotionPrediction",
    "local_to_global",
    "predict",
    "training_displacements",
]
