"""Shared numerics for logit vectors and probability vectors.

All functions take 1-D float arrays (or array-likes). Logit vectors must be
finite and non-empty; probability vectors must additionally be non-negative
and sum to 1 within 1e-9. Computations run in float64.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_logits",
    "check_probs",
    "softmax",
    "margin",
    "normalized_entropy",
    "argmax_index",
]

_PROB_SUM_TOL = 1e-9


def check_logits(x, min_size: int = 1) -> np.ndarray:
    """Validate and return a logit vector as a float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"logit vector must be 1-D, got shape {arr.shape}")
    if arr.size < min_size:
        raise ValueError(f"logit vector needs at least {min_size} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("logit vector contains non-finite entries")
    return arr


def check_probs(p, min_size: int = 1) -> np.ndarray:
    """Validate and return a probability vector as a float64 array."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {arr.shape}")
    if arr.size < min_size:
        raise ValueError(f"probability vector needs at least {min_size} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("probability vector contains non-finite entries")
    if np.any(arr < 0.0):
        raise ValueError("probability vector contains negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"probability vector sums to {total!r}, not 1")
    return arr


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax: exp(s - max(s)) normalized to sum 1."""
    s = check_logits(logits)
    shifted = s - s.max()
    e = np.exp(shifted)
    return e / e.sum()


def margin(logits) -> float:
    """Gap between the largest and second-largest logit (>= 0).

    Duplicated maxima give margin 0. Requires at least two entries.
    """
    s = check_logits(logits, min_size=2)
    top2 = np.partition(s, -2)[-2:]
    return float(top2[1] - top2[0])


def normalized_entropy(probs) -> float:
    """Shannon entropy scaled to [0, 1]: -(1/ln|V|) * sum p ln p, with 0 ln 0 = 0."""
    p = check_probs(probs, min_size=2)
    nz = p[p > 0.0]
    h = -float(np.sum(nz * np.log(nz)))
    return h / float(np.log(p.size))


def argmax_index(logits) -> int:
    """Index of the largest logit; ties resolve to the lowest index."""
    s = check_logits(logits)
    return int(np.argmax(s))
