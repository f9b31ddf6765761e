"""Hard thresholding operators and sphere normalization."""

from __future__ import annotations

import numpy as np


def top_k(v, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries of v, zeroing the rest.

    Ties are broken deterministically in favor of the lowest index (a stable
    sort on descending magnitude), so repeated runs select identical supports.
    Idempotent: top_k(top_k(v, k), k) == top_k(v, k).
    """
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("v must be one-dimensional")
    if not (0 <= k <= a.size):
        raise ValueError(f"k={k} outside [0, {a.size}]")
    out = np.zeros_like(a)
    if k == 0:
        return out
    keep = np.argsort(-np.abs(a), kind="stable")[:k]
    out[keep] = a[keep]
    return out


def threshold_set(v, J) -> np.ndarray:
    """Keep exactly the coordinates in the index set J, zeroing the rest.

    Equivalent to multiplication by the 0/1 diagonal matrix of J, hence
    linear in v.
    """
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("v must be one-dimensional")
    idx = np.asarray(sorted(set(int(j) for j in J)), dtype=np.intp)
    if idx.size and (idx[0] < 0 or idx[-1] >= a.size):
        raise IndexError("coordinate set J out of range")
    out = np.zeros_like(a)
    out[idx] = a[idx]
    return out


def normalize(v) -> np.ndarray:
    """v / ||v||_2; raises on the zero vector (callers choose the fallback)."""
    a = np.asarray(v, dtype=np.float64)
    nrm = float(np.linalg.norm(a))
    if nrm == 0.0:
        raise ZeroDivisionError("cannot normalize the zero vector")
    return a / nrm
