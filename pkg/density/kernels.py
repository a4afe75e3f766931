"""
Truncated kernels over SE(3) and curvature descriptors.

Three densities are built here:
- feature density over surface features (translation · rotation · descriptor),
- contact density over contact frames, keyed on the relational pose u and r,
- conditional motion density over rigid motions given a contact frame.

Kernel collections are stored as stacked arrays so one call evaluates every
kernel at once.
"""
from dataclasses import dataclass, field

import numpy as np

from geometry.pose import Pose, dist_p, dist_q, dist_r
from density.truncation import FailureStats, TruncationConfig, truncated_exp
from utils.errors import BandwidthError, DensityError


@dataclass(frozen=True)
class Bandwidths:
    """
    Kernel bandwidths. These divide the distances directly, so the length
    terms are squared lengths: sigma_p = 1e-4 corresponds to a 1 cm scale.

    Args:
        sigma_p (float): Translation bandwidth, m².
        sigma_q (float): Rotation bandwidth, quaternion-distance units.
        sigma_r (tuple): Per-component descriptor bandwidths, (1/m)².
        sigma_pm (float): Motion translation bandwidth, m².
        sigma_qm (float): Motion rotation bandwidth.
    """

    sigma_p: float = 1e-4
    sigma_q: float = 0.01
    sigma_r: tuple = field(default=(100.0, 100.0))
    sigma_pm: float = 4e-4
    sigma_qm: float = 0.05

    def __post_init__(self):
        sigma_r = tuple(float(s) for s in np.atleast_1d(self.sigma_r))
        if len(sigma_r) == 1:
            sigma_r = sigma_r * 2
        object.__setattr__(self, "sigma_r", sigma_r)
        values = [self.sigma_p, self.sigma_q, self.sigma_pm, self.sigma_qm, *sigma_r]
        if any(not v > 0.0 for v in values):
            raise BandwidthError(f"Bandwidths must be strictly positive, got {self.to_dict()}")

    def to_dict(self) -> dict:
        return {
            "sigma_p": self.sigma_p,
            "sigma_q": self.sigma_q,
            "sigma_r": list(self.sigma_r),
            "sigma_pm": self.sigma_pm,
            "sigma_qm": self.sigma_qm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Bandwidths":
        return cls(**{k: v for k, v in data.items()})


def eval_gauss3(p, mu, sigma, trunc: TruncationConfig):
    value, _ = truncated_exp(dist_p(p, mu, sigma), trunc.delta_p, trunc.beta_p)
    return value


def eval_vmf(q, mu, sigma, trunc: TruncationConfig):
    value, _ = truncated_exp(dist_q(q, mu, sigma), trunc.delta_q, trunc.beta_q)
    return value


def eval_gauss2(r, mu, sigma, trunc: TruncationConfig):
    value, _ = truncated_exp(dist_r(r, mu, sigma), trunc.delta_r, trunc.beta_r)
    return value


@dataclass(frozen=True, eq=False)
class FeatureKernel:
    mu: "SurfaceFeature"  # noqa: F821
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class ContactKernel:
    mu_r: np.ndarray
    mu_u: Pose
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class MotionKernel:
    contact: ContactKernel
    mu_m: Pose


def _normalized(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if len(w) == 0:
        raise DensityError("A density needs at least one kernel")
    if np.any(w < 0.0) or not np.isfinite(w).all():
        raise DensityError("Kernel weights must be finite and non-negative")
    total = w.sum()
    if total <= 0.0:
        raise DensityError("Kernel weights sum to zero")
    return w / total


class FeatureKernels:
    """Stacked feature kernels with weights normalised to 1."""

    def __init__(self, p, q, r, weights):
        self.p = np.asarray(p, dtype=float).reshape(-1, 3)
        self.q = np.asarray(q, dtype=float).reshape(-1, 4)
        self.r = np.asarray(r, dtype=float).reshape(-1, 2)
        self.w = _normalized(weights)

    @classmethod
    def from_kernels(cls, kernels: list[FeatureKernel]) -> "FeatureKernels":
        return cls(
            [k.mu.v.p for k in kernels],
            [k.mu.v.q for k in kernels],
            [k.mu.r for k in kernels],
            [k.weight for k in kernels],
        )

    def __len__(self):
        return len(self.w)

    def terms(self, x, sigma: Bandwidths, trunc: TruncationConfig):
        """Per-kernel products and the zero counts each component caused."""
        gp, zp = truncated_exp(dist_p(x.v.p, self.p, sigma.sigma_p), trunc.delta_p, trunc.beta_p)
        gq, zq = truncated_exp(dist_q(x.v.q, self.q, sigma.sigma_q), trunc.delta_q, trunc.beta_q)
        gr, zr = truncated_exp(dist_r(x.r, self.r, sigma.sigma_r), trunc.delta_r, trunc.beta_r)
        stats = FailureStats(int(zp.sum()), int(zq.sum()), int(zr.sum()))
        return gp * gq * gr, stats


class ContactKernels:
    """Stacked contact kernels: relational pose u and descriptor r per kernel."""

    def __init__(self, u_p, u_q, r, weights):
        self.u_p = np.asarray(u_p, dtype=float).reshape(-1, 3)
        self.u_q = np.asarray(u_q, dtype=float).reshape(-1, 4)
        self.r = np.asarray(r, dtype=float).reshape(-1, 2)
        self.w = _normalized(weights)

    @classmethod
    def from_kernels(cls, kernels: list[ContactKernel]) -> "ContactKernels":
        return cls(
            [k.mu_u.p for k in kernels],
            [k.mu_u.q for k in kernels],
            [k.mu_r for k in kernels],
            [k.weight for k in kernels],
        )

    def __len__(self):
        return len(self.w)

    def terms(self, r, u: Pose, sigma: Bandwidths, trunc: TruncationConfig):
        gp, zp = truncated_exp(dist_p(u.p, self.u_p, sigma.sigma_p), trunc.delta_p, trunc.beta_p)
        gq, zq = truncated_exp(dist_q(u.q, self.u_q, sigma.sigma_q), trunc.delta_q, trunc.beta_q)
        gr, zr = truncated_exp(dist_r(r, self.r, sigma.sigma_r), trunc.delta_r, trunc.beta_r)
        stats = FailureStats(int(zp.sum()), int(zq.sum()), int(zr.sum()))
        return gp * gq * gr, stats


class MotionKernels(ContactKernels):
    """Contact kernels that also carry a sampled motion m per kernel."""

    def __init__(self, u_p, u_q, r, m_p, m_q, weights):
        super().__init__(u_p, u_q, r, weights)
        self.m_p = np.asarray(m_p, dtype=float).reshape(-1, 3)
        self.m_q = np.asarray(m_q, dtype=float).reshape(-1, 4)
        self.m_q = self.m_q / np.linalg.norm(self.m_q, axis=1, keepdims=True)

    @classmethod
    def from_kernels(cls, kernels: list[MotionKernel]) -> "MotionKernels":
        return cls(
            [k.contact.mu_u.p for k in kernels],
            [k.contact.mu_u.q for k in kernels],
            [k.contact.mu_r for k in kernels],
            [k.mu_m.p for k in kernels],
            [k.mu_m.q for k in kernels],
            [k.contact.weight for k in kernels],
        )

    def motion_terms(self, m: Pose, sigma: Bandwidths, trunc: TruncationConfig):
        gp, zp = truncated_exp(dist_p(m.p, self.m_p, sigma.sigma_pm), trunc.delta_p, trunc.beta_p)
        gq, zq = truncated_exp(dist_q(m.q, self.m_q, sigma.sigma_qm), trunc.delta_q, trunc.beta_q)
        return gp * gq, FailureStats(int(zp.sum()), int(zq.sum()), 0)


def _as_feature_kernels(kernels) -> FeatureKernels:
    return kernels if isinstance(kernels, FeatureKernels) else FeatureKernels.from_kernels(list(kernels))


def _as_contact_kernels(kernels) -> ContactKernels:
    return kernels if isinstance(kernels, ContactKernels) else ContactKernels.from_kernels(list(kernels))


def _as_motion_kernels(kernels) -> MotionKernels:
    return kernels if isinstance(kernels, MotionKernels) else MotionKernels.from_kernels(list(kernels))


def eval_feature_density(kernels, x, sigma: Bandwidths, trunc: TruncationConfig) -> float:
    """P(x) ≈ Σ w_i · gauss3 · vmf · gauss2."""
    kernels = _as_feature_kernels(kernels)
    values, _ = kernels.terms(x, sigma, trunc)
    return float(np.dot(kernels.w, values))


def eval_contact_density(kernels, c, sigma: Bandwidths, trunc: TruncationConfig) -> float:
    """P(c) ≈ Σ w_i K^c(c | c_i); `c` needs `.r` and `.u`."""
    kernels = _as_contact_kernels(kernels)
    values, _ = kernels.terms(c.r, c.u, sigma, trunc)
    return float(np.dot(kernels.w, values))


def eval_motion_density(kernels, c, m: Pose, sigma: Bandwidths, trunc: TruncationConfig) -> float:
    """P(m | c) = Σ w_i K^c(c | c_i) K^m(m | m_i) / Σ w_i K^c(c | c_i)."""
    kernels = _as_motion_kernels(kernels)
    contact, _ = kernels.terms(c.r, c.u, sigma, trunc)
    weighted = kernels.w * contact
    evidence = weighted.sum()
    if evidence <= 0.0:
        raise DensityError("Motion density undefined: P(c) = 0 for this contact frame")
    motion, _ = kernels.motion_terms(m, sigma, trunc)
    return float(np.dot(weighted, motion) / evidence)
