"""Candidate pre-selection and the fixed-size listwise state encoding.

Every candidate contributes one 5-tuple (u1, u2, u3, dl, du): the three
largest class probabilities under the current learner, the average distance
to the labeled set and the average distance to the unlabeled set.  A state
is k such tuples flattened to 5*k values, zero-padded when fewer than k
candidates exist.
"""

from dataclasses import dataclass

import numpy as np

from . import learner as learner_mod
from ._kernels import mean_distances
from .errors import EmptyLabeledSet, EmptyPool, EmptyUnlabeledSet

TUPLE_WIDTH = 5
# euclidean below, cosine above (distances degenerate in high dimensions)
METRIC_FEATURE_THRESHOLD = 50
# unlabeled-distance averages are estimated on at most this many points
DU_SUBSAMPLE_CAP = 1000
_DU_SEED = 0x5EED


@dataclass
class CandidateSet:
    indices: np.ndarray  # global sample indices, canonical encoding order
    k: int
    j: int


@dataclass
class EncodedState:
    values: np.ndarray  # 5*k floats, k consecutive 5-tuples
    k: int


def metric_for(n_features):
    return "euclidean" if n_features <= METRIC_FEATURE_THRESHOLD else "cosine"


def uncertainty_tuple(x, classifier):
    """Three largest class probabilities, zero-filled beyond n_classes."""
    probs = learner_mod.predict_proba(classifier, x)
    top = np.sort(probs)[::-1][:3]
    return tuple(np.pad(top, (0, 3 - top.size)))


def avg_dist_labeled(x, labeled_features, metric="euclidean"):
    labeled_features = np.atleast_2d(labeled_features)
    if labeled_features.shape[0] == 0:
        raise EmptyLabeledSet("dl needs at least one labeled sample")
    return float(mean_distances(np.atleast_2d(x), labeled_features, metric)[0])


def avg_dist_unlabeled(
    x,
    unlabeled_features,
    metric="euclidean",
    *,
    exclude_row=None,
    cap=DU_SUBSAMPLE_CAP,
    seed=_DU_SEED,
):
    """Mean distance from x to the unlabeled set, x itself excluded.

    Above `cap` points a seeded uniform subsample estimates the mean so the
    cost stays bounded on large pools.
    """
    U = np.atleast_2d(unlabeled_features)
    if U.shape[0] == 0:
        raise EmptyUnlabeledSet("du needs at least one unlabeled sample")
    rows = np.arange(U.shape[0])
    if exclude_row is not None:
        rows = rows[rows != exclude_row]
    if rows.size == 0:
        return 0.0
    if rows.size > cap:
        rng = np.random.default_rng(seed)
        rows = rows[np.sort(rng.choice(rows.size, size=cap, replace=False))]
    return float(mean_distances(np.atleast_2d(x), U[rows], metric)[0])


def _du_subsample(unlabeled, cap=DU_SUBSAMPLE_CAP, seed=_DU_SEED):
    """Order-invariant seeded subsample of the unlabeled index set."""
    ordered = np.sort(np.asarray(unlabeled))
    if ordered.size <= cap:
        return ordered
    rng = np.random.default_rng(seed)
    return ordered[np.sort(rng.choice(ordered.size, size=cap, replace=False))]


def pre_select(pool, j, k, rng):
    """Draw j random size-min(k,|U|) subsets of U and keep the one whose
    summed labeled-distance is largest (ties go to the first drawn)."""
    if j < 1 or k < 1:
        raise ValueError("j and k must be >= 1")
    unlabeled = np.asarray(pool.unlabeled)
    if unlabeled.size == 0:
        raise EmptyPool("no unlabeled samples left")
    X = pool.dataset.features
    metric = metric_for(X.shape[1])
    m = min(k, unlabeled.size)
    subsets = [rng.choice(unlabeled, size=m, replace=False) for _ in range(j)]
    flat = np.concatenate(subsets)
    dl = mean_distances(X[flat], X[np.asarray(pool.labeled)], metric)
    sums = dl.reshape(j, m).sum(axis=1)
    best = subsets[int(np.argmax(sums))]
    return CandidateSet(indices=_canonical_order(pool, best), k=k, j=j)


def _canonical_order(pool, indices):
    """Descending top-class probability, ties by ascending sample index."""
    probs = learner_mod.predict_proba(pool.learner, pool.dataset.features[indices])
    u1 = probs.max(axis=1)
    return indices[np.lexsort((indices, -u1))]


def encode_state(pool, candidates, classifier):
    """Flatten the candidates' 5-tuples in canonical order, zero-padded to k."""
    idx = np.asarray(candidates.indices)
    k = candidates.k
    X = pool.dataset.features
    metric = metric_for(X.shape[1])
    values = np.zeros(TUPLE_WIDTH * k)
    if idx.size:
        probs = np.atleast_2d(learner_mod.predict_proba(classifier, X[idx]))
        top3 = -np.sort(-probs, axis=1)[:, :3]
        if top3.shape[1] < 3:
            top3 = np.pad(top3, ((0, 0), (0, 3 - top3.shape[1])))
        dl = mean_distances(X[idx], X[np.asarray(pool.labeled)], metric)
        sub = _du_subsample(pool.unlabeled)
        dmat = mean_distances(X[idx], X[sub], metric)
        # remove each candidate's self-distance (0) from its own average
        in_sub = np.isin(idx, sub)
        denom = sub.size - in_sub.astype(np.int64)
        du = np.where(denom > 0, dmat * sub.size / np.maximum(denom, 1), 0.0)
        tuples = np.column_stack([top3, dl, du])
        values[: idx.size * TUPLE_WIDTH] = tuples.ravel()
    return EncodedState(values=values, k=k)
