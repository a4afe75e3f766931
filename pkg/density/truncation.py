"""
Kernel truncation and bandwidth rescaling between trial rounds.

Each distance component (p, q, r) is cut off once β·d reaches δ. When a trial
round leaves every query with zero likelihood, one component's counter T is
incremented, shrinking β = α_T^(−T) and widening that component's kernels.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from loguru import logger

from utils.errors import ConfigError, RescaleLimitError

COMPONENTS = ("p", "q", "r")


@dataclass(frozen=True)
class FailureStats:
    """Zero-likelihood counts each component produced in one trial round."""

    p: int = 0
    q: int = 0
    r: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.p, self.q, self.r)

    def __add__(self, other: "FailureStats") -> "FailureStats":
        return FailureStats(self.p + other.p, self.q + other.q, self.r + other.r)


@dataclass(frozen=True)
class TruncationConfig:
    delta_p: float = 5.0
    delta_q: float = 5.0
    delta_r: float = 0.1
    alpha_T: float = 2.0
    T: tuple = field(default=(0, 0, 0))
    max_rounds: int = 10

    def __post_init__(self):
        for name in ("delta_p", "delta_q", "delta_r"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}", key=name)
        if not self.alpha_T > 1.0:
            raise ConfigError(f"alpha_T must exceed 1, got {self.alpha_T}", key="alpha_T")
        counters = tuple(int(t) for t in self.T)
        if len(counters) != 3 or min(counters) < 0:
            raise ConfigError(f"T must be three non-negative integers, got {self.T}", key="T")
        object.__setattr__(self, "T", counters)

    @property
    def beta_p(self) -> float:
        return self.alpha_T ** -self.T[0]

    @property
    def beta_q(self) -> float:
        return self.alpha_T ** -self.T[1]

    @property
    def beta_r(self) -> float:
        return self.alpha_T ** -self.T[2]

    @property
    def rounds(self) -> int:
        return sum(self.T)

    def reset(self) -> "TruncationConfig":
        return replace(self, T=(0, 0, 0))

    def to_dict(self) -> dict:
        return {
            "delta_p": self.delta_p,
            "delta_q": self.delta_q,
            "delta_r": self.delta_r,
            "alpha_T": self.alpha_T,
            "max_rounds": self.max_rounds,
        }


def truncated_exp(d, delta: float, beta: float):
    """exp(−β·d) where β·d < δ, else 0. Returns (values, zero mask)."""
    scaled = beta * np.asarray(d, dtype=float)
    cut = scaled >= delta
    return np.where(cut, 0.0, np.exp(-np.where(cut, 0.0, scaled))), cut


def rescale_on_failure(trunc: TruncationConfig, failure_stats: FailureStats) -> TruncationConfig:
    """
    Widen one component after a round in which every query had zero likelihood.

    Components that produced no zero likelihood are left alone. Among the rest
    the smallest counter is incremented; ties go to the component with more
    zeros, then to the order p, q, r.
    """
    if trunc.rounds >= trunc.max_rounds:
        raise RescaleLimitError(trunc.rounds, trunc.T, failure_stats.as_tuple())
    counts = failure_stats.as_tuple()
    candidates = [i for i in range(3) if counts[i] > 0] or [0, 1, 2]
    chosen = min(candidates, key=lambda i: (trunc.T[i], -counts[i], i))
    counters = list(trunc.T)
    counters[chosen] += 1
    rescaled = replace(trunc, T=tuple(counters))
    logger.debug(
        f"Rescaling {COMPONENTS[chosen]} bandwidth: T={rescaled.T}, zeros p/q/r={counts}"
    )
    return rescaled


def evaluate_with_rescaling(evaluate, trunc: TruncationConfig):
    """
    Run `evaluate(trunc) -> (values, FailureStats)` until some value is non-zero.

    Returns (values, trunc used). Raises RescaleLimitError past the round cap.
    """
    while True:
        values, stats = evaluate(trunc)
        if np.any(np.asarray(values) > 0.0):
            return values, trunc
        trunc = rescale_on_failure(trunc, stats)
