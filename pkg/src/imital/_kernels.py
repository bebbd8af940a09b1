"""Distance kernels used by the state encoding and the diversity strategies.

The mean-distance scans are the hottest loops outside learner training: every
encoding step evaluates them for j*k candidates against the labeled and
unlabeled sets.  The default implementations are numba-compiled; setting the
environment variable ``IMITAL_NO_NUMBA=1`` before import selects the pure
numpy path instead (same semantics, useful where JIT compilation is unwanted).
``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("IMITAL_NO_NUMBA", "0") != "1"


def _mean_dist_euclidean_np(X, Y):
    # (m, n) pairwise distances via the expanded square; clip guards tiny
    # negative values from cancellation.
    sq = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * (X @ Y.T)
        + np.sum(Y * Y, axis=1)[None, :]
    )
    return np.sqrt(np.clip(sq, 0.0, None)).mean(axis=1)


def _mean_dist_cosine_np(X, Y):
    xn = np.linalg.norm(X, axis=1)
    yn = np.linalg.norm(Y, axis=1)
    dots = X @ Y.T
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = dots / np.outer(xn, yn)
    dist = 1.0 - cos
    # zero-norm rows: distance 0 to another zero vector, 1 otherwise
    zx = xn == 0.0
    zy = yn == 0.0
    if zx.any() or zy.any():
        dist = np.where(np.isfinite(dist), dist, 0.0)
        dist[np.ix_(zx, ~zy)] = 1.0
        dist[np.ix_(~zx, zy)] = 1.0
        dist[np.ix_(zx, zy)] = 0.0
    return np.clip(dist, 0.0, None).mean(axis=1)


if USE_NUMBA:
    from numba import njit

    @njit(cache=True, fastmath=False)
    def _mean_dist_euclidean_nb(X, Y):  # pragma: no cover - compiled
        m, f = X.shape
        n = Y.shape[0]
        out = np.empty(m)
        for i in range(m):
            acc = 0.0
            for j in range(n):
                s = 0.0
                for d in range(f):
                    diff = X[i, d] - Y[j, d]
                    s += diff * diff
                acc += np.sqrt(s)
            out[i] = acc / n
        return out

    @njit(cache=True, fastmath=False)
    def _mean_dist_cosine_nb(X, Y):  # pragma: no cover - compiled
        m, f = X.shape
        n = Y.shape[0]
        xn = np.empty(m)
        for i in range(m):
            s = 0.0
            for d in range(f):
                s += X[i, d] * X[i, d]
            xn[i] = np.sqrt(s)
        yn = np.empty(n)
        for j in range(n):
            s = 0.0
            for d in range(f):
                s += Y[j, d] * Y[j, d]
            yn[j] = np.sqrt(s)
        out = np.empty(m)
        for i in range(m):
            acc = 0.0
            for j in range(n):
                if xn[i] == 0.0 and yn[j] == 0.0:
                    dist = 0.0
                elif xn[i] == 0.0 or yn[j] == 0.0:
                    dist = 1.0
                else:
                    dot = 0.0
                    for d in range(f):
                        dot += X[i, d] * Y[j, d]
                    dist = 1.0 - dot / (xn[i] * yn[j])
                    if dist < 0.0:
                        dist = 0.0
                acc += dist
            out[i] = acc / n
        return out

    _euclidean_impl = _mean_dist_euclidean_nb
    _cosine_impl = _mean_dist_cosine_nb
else:
    _euclidean_impl = _mean_dist_euclidean_np
    _cosine_impl = _mean_dist_cosine_np


def mean_distances(X, Y, metric):
    """Mean distance from every row of X to the rows of Y.

    metric is "euclidean" or "cosine"; both are symmetric, non-negative and
    zero on identical points.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must be 2-d with matching feature width")
    if Y.shape[0] == 0:
        return np.zeros(X.shape[0])
    if metric == "euclidean":
        return _euclidean_impl(X, Y)
    if metric == "cosine":
        return _cosine_impl(X, Y)
    raise ValueError(f"unknown metric: {metric!r}")
