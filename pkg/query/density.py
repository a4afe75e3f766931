"""
Query densities: a trained frame model fused with the features of a new cloud.

Each kernel pairs a uniformly drawn cloud feature with a model frame drawn by
neighbourhood weight, and sits at compose(v, u). Only the SE(3) terms are
evaluated afterwards; descriptor agreement is already folded into the weights.
"""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from contact.frames import ContactFrame, frame_arrays
from density.annealing import AnnealConfig, anneal
from density.kernels import Bandwidths
from density.truncation import (
    FailureStats,
    TruncationConfig,
    evaluate_with_rescaling,
    rescale_on_failure,
    truncated_exp,
)
from geometry.pose import Pose, compose_arrays, dist_p, dist_q, dist_r, planarize, quat_from_yaw, yaw_of
from shapes.features import SurfaceFeature, feature_arrays
from utils.errors import ModelError

WEIGHTING_MODES = ("similarity", "literal")


@dataclass(eq=False)
class QueryDensity:
    """
    Args:
        p (array): (n, 3) kernel translations.
        q (array): (n, 4) kernel rotations.
        w (array): (n,) kernel weights summing to 1.
        frame_index (array): Source model frame of each kernel.
        feature_index (array): Source cloud feature of each kernel.
        frames (list): The model frames.
        features (list): The cloud features.
        sigma (Bandwidths): Bandwidths used for evaluation.
        trunc (TruncationConfig): Truncation after any rescaling rounds.
        h_r (float): Descriptor-distance heuristic, normalised per pair.
        h_r_raw (float): The un-normalised double sum.
        model_id (str): Source model tag.
    """

    p: np.ndarray
    q: np.ndarray
    w: np.ndarray
    frame_index: np.ndarray
    feature_index: np.ndarray
    frames: list
    features: list
    sigma: Bandwidths
    trunc: TruncationConfig
    h_r: float
    h_r_raw: float = 0.0
    model_id: str = ""
    rounds: int = field(default=0)

    def __len__(self):
        return len(self.w)

    def terms(self, P, Q, trunc: TruncationConfig | None = None, chunk: int = 256):
        """Densities at candidate poses (P, Q) plus per-component zero counts."""
        trunc = trunc or self.trunc
        P = np.atleast_2d(P)
        Q = np.atleast_2d(Q)
        values = np.empty(len(P))
        stats = FailureStats()
        for start in range(0, len(P), chunk):
            gp, zp = truncated_exp(
                dist_p(P[start:start + chunk, None, :], self.p[None], self.sigma.sigma_p),
                trunc.delta_p,
                trunc.beta_p,
            )
            gq, zq = truncated_exp(
                dist_q(Q[start:start + chunk, None, :], self.q[None], self.sigma.sigma_q),
                trunc.delta_q,
                trunc.beta_q,
            )
            values[start:start + chunk] = (gp * gq) @ self.w
            stats = stats + FailureStats(int(zp.sum()), int(zq.sum()), 0)
        return values, stats

    def evaluate(self, P, Q, trunc: TruncationConfig | None = None) -> np.ndarray:
        values, _ = self.terms(P, Q, trunc)
        return values

    def kernel_pose(self, k: int) -> Pose:
        return Pose(p=self.p[k], q=self.q[k])

    def source_frame(self, k: int) -> ContactFrame:
        return self.frames[int(self.frame_index[k])]

    def source_feature(self, k: int) -> SurfaceFeature:
        return self.features[int(self.feature_index[k])]


def neighbourhood_weights(r_x, r_c, w_c, sigma_r, trunc: TruncationConfig, mode: str = "similarity"):
    """
    w^n[i, j] for cloud descriptors r_x (n, 2) against model frames (r_c, w_c).

    `similarity` weights frames by exp(−β d_r), cut at δ_r; `literal` uses
    w_j · d_r directly. Returns (weights, FailureStats).
    """
    if mode not in WEIGHTING_MODES:
        raise ValueError(f"Unknown weighting mode '{mode}', expected one of {WEIGHTING_MODES}")
    d = dist_r(np.asarray(r_x)[:, None, :], np.asarray(r_c)[None, :, :], sigma_r)
    if mode == "literal":
        weights = np.asarray(w_c)[None, :] * trunc.beta_r * d
        return weights, FailureStats(0, 0, int(np.sum(weights <= 0.0)))
    similarity, cut = truncated_exp(d, trunc.delta_r, trunc.beta_r)
    return np.asarray(w_c)[None, :] * similarity, FailureStats(0, 0, int(cut.sum()))


def selection_heuristic(model_r, sampled_r, normalize: bool = True) -> float:
    """
    H_r = Σ_i Σ_j ⁴√‖r_i − r_j‖² over sampled cloud descriptors and model descriptors.

    With `normalize` the sum is divided by the number of pairs so models of
    different sizes compare fairly.
    """
    model_r = np.asarray(model_r, dtype=float).reshape(-1, 2)
    sampled_r = np.asarray(sampled_r, dtype=float).reshape(-1, 2)
    if len(model_r) == 0 or len(sampled_r) == 0:
        raise ModelError("Selection heuristic needs non-empty descriptor sets")
    total = 0.0
    for start in range(0, len(sampled_r), 512):
        diff = sampled_r[start:start + 512, None, :] - model_r[None, :, :]
        total += float(np.sum(np.sum(diff * diff, axis=-1) ** 0.25))
    if normalize:
        return total / (len(model_r) * len(sampled_r))
    return total


def _per_feature_heuristic(feature_r, model_r) -> np.ndarray:
    values = np.empty(len(feature_r))
    for start in range(0, len(feature_r), 512):
        diff = feature_r[start:start + 512, None, :] - model_r[None, :, :]
        values[start:start + 512] = np.sum(np.sum(diff * diff, axis=-1) ** 0.25, axis=1)
    return values


def build_query_density(
    frames: list[ContactFrame],
    features: list[SurfaceFeature],
    n_kernels: int,
    rng: np.random.Generator,
    sigma: Bandwidths | None = None,
    trunc: TruncationConfig | None = None,
    mode: str = "similarity",
    model_id: str = "",
    weights=None,
) -> QueryDensity:
    """
    Draw `n_kernels` (feature, frame) pairings and place each kernel at compose(v, u).

    Kernel weight is Σ_j w^n[i, j] for its feature. Features whose neighbourhood
    weights are all zero cannot host a kernel and are redrawn; if no feature
    qualifies the descriptor bandwidth is rescaled.
    """
    if n_kernels < 1:
        raise ModelError(f"n_kernels must be >= 1, got {n_kernels}")
    if not frames:
        raise ModelError(f"Model '{model_id}' has no frames")
    if not features:
        raise ModelError("Query density needs at least one cloud feature")
    sigma = sigma or Bandwidths()
    trunc = trunc or TruncationConfig()
    _, _, r_c, u_p, u_q, w_c = frame_arrays(frames)
    if weights is not None:
        w_c = np.asarray(weights, dtype=float)
    w_c = w_c / w_c.sum() if w_c.sum() > 0.0 else np.full(len(frames), 1.0 / len(frames))
    v_p, v_q, r_x = feature_arrays(features)

    def evaluate(current: TruncationConfig):
        weights_n, stats = neighbourhood_weights(r_x, r_c, w_c, sigma.sigma_r, current, mode)
        return weights_n.sum(axis=1), stats

    row_sums, trunc = evaluate_with_rescaling(evaluate, trunc)
    weights_n, _ = neighbourhood_weights(r_x, r_c, w_c, sigma.sigma_r, trunc, mode)

    drawn = rng.integers(0, len(features), size=n_kernels)
    eligible = np.flatnonzero(row_sums > 0.0)
    usable = row_sums[drawn] > 0.0
    feature_index = drawn.copy()
    n_redraw = int((~usable).sum())
    if n_redraw:
        feature_index[~usable] = rng.choice(eligible, size=n_redraw)

    frame_index = np.empty(n_kernels, dtype=np.int64)
    for k, i in enumerate(feature_index):
        row = weights_n[i]
        frame_index[k] = rng.choice(len(frames), p=row / row_sums[i])

    p, q = compose_arrays(v_p[feature_index], v_q[feature_index], u_p[frame_index], u_q[frame_index])
    kernel_w = row_sums[feature_index]
    kernel_w = kernel_w / kernel_w.sum()

    per_feature = _per_feature_heuristic(r_x, r_c)
    h_r_raw = float(per_feature[drawn].sum())
    h_r = h_r_raw / (len(drawn) * len(frames))
    logger.debug(
        f"Query density '{model_id}': {n_kernels} kernels, {n_redraw} redrawn, "
        f"H_r={h_r:.4f}, T={trunc.T}"
    )
    return QueryDensity(
        p=p,
        q=q,
        w=kernel_w,
        frame_index=frame_index,
        feature_index=feature_index,
        frames=frames,
        features=features,
        sigma=sigma,
        trunc=trunc,
        h_r=h_r,
        h_r_raw=h_r_raw,
        model_id=model_id,
        rounds=trunc.rounds,
    )


def _upright(P, Q):
    return P, quat_from_yaw(yaw_of(Q))


def estimate_pose(qd: QueryDensity, config: AnnealConfig, rng: np.random.Generator) -> tuple[Pose, float]:
    """
    Annealed mode of the query density.

    Seeds are the kernel means (made upright in planar mode) drawn by kernel
    weight. If even the best pose has zero density the translation/rotation
    bandwidths are rescaled and the search repeats.
    """
    if len(qd) == 0:
        raise ModelError("Query density is empty")
    P0, Q0 = (qd.p, qd.q) if not config.planar else _upright(qd.p, qd.q)
    trunc = qd.trunc
    while True:
        current = trunc

        def score(P, Q):
            values = qd.evaluate(P, Q, current)
            with np.errstate(divide="ignore"):
                return np.log(values)

        best, best_score = anneal(score, (P0, Q0), config, rng, weights=qd.w)
        if np.isfinite(best_score):
            qd.trunc = trunc
            qd.rounds = trunc.rounds
            if config.planar:
                best = planarize(best)
            return best, float(np.exp(best_score))
        _, stats = qd.terms(P0, Q0, trunc)
        trunc = rescale_on_failure(trunc, stats)


def select_manipulator_frame(qd: QueryDensity, best_pose: Pose) -> ContactFrame:
    """Source frame of the kernel nearest to `best_pose` (translation, then rotation, then index)."""
    k = nearest_kernel(qd, best_pose)
    return qd.source_frame(k)


def nearest_kernel(qd: QueryDensity, pose: Pose) -> int:
    translation = np.sum((qd.p - pose.p) ** 2, axis=1)
    rotation = 1.0 - np.abs(qd.q @ pose.q)
    order = np.lexsort((np.arange(len(qd)), rotation, translation))
    return int(order[0])


def placed_manipulator_frame(qd: QueryDensity, best_pose: Pose, object_pose: Pose) -> ContactFrame:
    """
    The manipulator frame used for motion prediction: the nearest kernel's
    cloud feature carrying its source frame's u, with h against `object_pose`.
    """
    k = nearest_kernel(qd, best_pose)
    source = qd.source_frame(k)
    feature = qd.source_feature(k)
    return ContactFrame.create(feature, source.u, source.kind, object_pose, source.w)

