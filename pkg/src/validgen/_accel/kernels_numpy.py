"""Pure-numpy implementations of the hot kernels.

These are the reference semantics; the numba module mirrors them
function for function. Integer and comparison kernels are bit-identical
across backends, float accumulations may differ in the last ulp.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def sample_from_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms in [0,1) to support indices through a cumulative table.

    Returns, for each u, the first index whose cdf value strictly exceeds
    it, clamped to the last cell against u values at the rounding edge.
    """
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1).astype(np.int64)


def weighted_invalidity_estimates(
    member_probs: np.ndarray,
    mu: np.ndarray,
    codes: np.ndarray,
    inv_vals: np.ndarray,
    weight_cap: float,
) -> tuple[np.ndarray, float]:
    """Per-member importance-weighted invalidity estimates.

    For each member row q, averages inv(x) * (q(x)/mu(x)) over the sampled
    codes, zeroing terms whose weight reaches the cap. Also returns the
    largest weight that survived the cap, for bound auditing.
    """
    mu_at = mu[codes]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = member_probs[:, codes] / mu_at
    w[~np.isfinite(w)] = np.inf
    keep = w < weight_cap
    kept_w = np.where(keep, w, 0.0)
    est = (kept_w * inv_vals).mean(axis=1)
    max_w = float(kept_w.max()) if kept_w.size else 0.0
    return est, max_w


def acceptance_probs(member_probs: np.ndarray, mu: np.ndarray, weight_cap: float) -> np.ndarray:
    """Per-point acceptance probability: fraction of members under the weight cap.

    Points with zero mixture mass get probability 1 (they are never drawn).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        w = member_probs / mu[None, :]
    pi = (w < weight_cap).mean(axis=0)
    pi[mu <= 0.0] = 1.0
    return pi


def box_stats(
    lo: np.ndarray,
    hi: np.ndarray,
    pts: np.ndarray,
    cnts: np.ndarray,
    neg: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted positive-point counts and negative-feasibility per candidate box.

    lo/hi are (C, d) corner arrays, pts (P, d) distinct positive points with
    multiplicities cnts, neg (N, d) forbidden points. A box is feasible when
    it contains no forbidden point.
    """
    inside_pos = np.logical_and(
        (pts[None, :, :] >= lo[:, None, :]).all(axis=2),
        (pts[None, :, :] <= hi[:, None, :]).all(axis=2),
    )
    inside = inside_pos @ cnts.astype(np.int64)
    if neg.shape[0]:
        hit = np.logical_and(
            (neg[None, :, :] >= lo[:, None, :]).all(axis=2),
            (neg[None, :, :] <= hi[:, None, :]).all(axis=2),
        ).any(axis=1)
        feasible = ~hit
    else:
        feasible = np.ones(lo.shape[0], dtype=bool)
    return inside.astype(np.int64), feasible


def max_intersection(cand: np.ndarray, kept: np.ndarray) -> int:
    """Largest coordinatewise overlap between a 0/1 vector and any kept row."""
    if kept.shape[0] == 0:
        return 0
    return int((kept.astype(np.int64) @ cand.astype(np.int64)).max())
