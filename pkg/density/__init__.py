from density.truncation import FailureStats, TruncationConfig, evaluate_with_rescaling, rescale_on_failure
from density.kernels import (
    Bandwidths,
    ContactKernel,
    FeatureKernel,
    MotionKernel,
    eval_contact_density,
    eval_feature_density,
    eval_motion_density,
)
from density.annealing import AnnealConfig, anneal

__all__ = [
    "FailureStats",
    "TruncationConfig",
    "evaluate_with_rescaling",
    "rescale_on_failure",
    "Bandwidths",
    "FeatureKernel",
    "ContactKernel",
    "MotionKernel",
    "eval_feature_density",
    "eval_contact_density",
    "eval_motion_density",
    "AnnealConfig",
    "anneal",
]
