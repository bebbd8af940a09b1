"""Pool-based active-learning engine and the classic query strategies."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import encoding, learner as learner_mod
from ._kernels import mean_distances
from .errors import EmptyPool, MissingClass
from .synthgen import Dataset

STRATEGY_NAMES = ("random", "lc", "entropy", "qbc", "gd", "imital", "expert")

QBC_COMMITTEE_SIZE = 4


@dataclass
class PoolState:
    dataset: Dataset
    labeled: list
    unlabeled: list
    learner: learner_mod.Classifier
    learner_cfg: learner_mod.TrainConfig

    def copy(self):
        return PoolState(
            dataset=self.dataset,
            labeled=list(self.labeled),
            unlabeled=list(self.unlabeled),
            learner=self.learner,
            learner_cfg=self.learner_cfg,
        )


@dataclass
class Query:
    indices: list


@dataclass
class LearningCurve:
    f1_per_cycle: list


@dataclass
class EpisodeLog:
    """LearningCurve plus per-cycle bookkeeping for the benchmark tables."""

    curve: LearningCurve
    query_seconds: list = field(default_factory=list)
    candidates_evaluated: list = field(default_factory=list)
    initial_labeled: list = field(default_factory=list)


def _labeled_subset(pool, indices):
    idx = np.asarray(indices)
    return Dataset(
        features=pool.dataset.features[idx],
        labels=pool.dataset.labels[idx],
        n_classes=pool.dataset.n_classes,
    )


def refit(pool):
    pool.learner = learner_mod.fit(
        pool.learner, _labeled_subset(pool, pool.labeled), pool.learner_cfg
    )


def init_pool(train, rng, learner_cfg):
    """One uniformly chosen labeled sample per class; learner fit on them."""
    present = np.unique(train.labels)
    if present.size < train.n_classes:
        raise MissingClass("train set is missing a class")
    labeled = sorted(
        int(rng.choice(np.flatnonzero(train.labels == cls)))
        for cls in range(train.n_classes)
    )
    unlabeled = sorted(set(range(train.n_samples)) - set(labeled))
    pool = PoolState(
        dataset=train,
        labeled=labeled,
        unlabeled=unlabeled,
        learner=learner_mod.init(
            train.n_features, train.n_classes, seed=learner_cfg.seed
        ),
        learner_cfg=learner_cfg,
    )
    refit(pool)
    return pool


def apply_query(pool, query):
    """Label the queried indices (ground-truth oracle) and refit."""
    chosen = set(query.indices)
    if not chosen or not chosen.issubset(set(pool.unlabeled)):
        raise ValueError("query must be a non-empty subset of the unlabeled set")
    pool.labeled = sorted(set(pool.labeled) | chosen)
    pool.unlabeled = sorted(set(pool.unlabeled) - chosen)
    refit(pool)


def al_loop(pool, strategy, b, cycles, test, rng):
    """Run `cycles` query/label/refit rounds, recording test macro-F1.

    `strategy` is a callable (pool, b, rng) -> Query.  Stops early when the
    unlabeled set runs dry.  Returns an EpisodeLog; the learning curve has
    one entry per executed cycle.
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    log = EpisodeLog(curve=LearningCurve(f1_per_cycle=[]))
    log.initial_labeled = list(pool.labeled)
    for _ in range(cycles):
        if not pool.unlabeled:
            break
        counter = getattr(strategy, "evaluation_count", None)
        log.candidates_evaluated.append(
            counter(pool, b) if counter else len(pool.unlabeled)
        )
        t0 = time.perf_counter()
        query = strategy(pool, b, rng)
        log.query_seconds.append(time.perf_counter() - t0)
        apply_query(pool, query)
        log.curve.f1_per_cycle.append(learner_mod.macro_f1(pool.learner, test))
    return log


def _require_unlabeled(pool):
    if not pool.unlabeled:
        raise EmptyPool("no unlabeled samples left")


def random_query(pool, b, rng):
    _require_unlabeled(pool)
    take = min(b, len(pool.unlabeled))
    return Query(indices=sorted(int(i) for i in rng.choice(pool.unlabeled, size=take, replace=False)))


def _top_b_by_score(indices, scores, b):
    """Highest score first; ties broken by the lower sample index."""
    indices = np.asarray(indices)
    order = np.lexsort((indices, -np.asarray(scores)))
    return [int(i) for i in indices[order[: min(b, indices.size)]]]


def lc_query(pool, b, rng=None):
    """Least confidence: smallest top-class probability first."""
    _require_unlabeled(pool)
    probs = learner_mod.predict_proba(
        pool.learner, pool.dataset.features[pool.unlabeled]
    )
    return Query(indices=_top_b_by_score(pool.unlabeled, -probs.max(axis=1), b))


def entropy_query(pool, b, rng=None):
    """Largest Shannon entropy (natural log) of the predicted distribution."""
    _require_unlabeled(pool)
    probs = learner_mod.predict_proba(
        pool.learner, pool.dataset.features[pool.unlabeled]
    )
    ent = -np.sum(probs * np.log(np.clip(probs, 1e-300, None)), axis=1)
    return Query(indices=_top_b_by_score(pool.unlabeled, ent, b))


def qbc_query(pool, b, rng, committee_size=QBC_COMMITTEE_SIZE):
    """Vote entropy over a committee trained on bootstrap resamples of L."""
    if committee_size < 2:
        raise ValueError("committee_size must be >= 2")
    _require_unlabeled(pool)
    labeled = np.asarray(pool.labeled)
    U = pool.dataset.features[pool.unlabeled]
    votes = np.zeros((len(pool.unlabeled), pool.dataset.n_classes))
    for member in range(committee_size):
        boot = rng.choice(labeled, size=labeled.size, replace=True)
        cfg = learner_mod.TrainConfig(
            epochs=pool.learner_cfg.epochs,
            minibatch_size=pool.learner_cfg.minibatch_size,
            learning_rate=pool.learner_cfg.learning_rate,
            seed=pool.learner_cfg.seed + member + 1,
        )
        clf = learner_mod.fit(pool.learner, _labeled_subset(pool, boot), cfg)
        preds = learner_mod.predict(clf, U)
        votes[np.arange(preds.size), preds] += 1
    frac = votes / committee_size
    with np.errstate(divide="ignore", invalid="ignore"):
        ve = -np.nansum(np.where(frac > 0, frac * np.log(frac), 0.0), axis=1)
    return Query(indices=_top_b_by_score(pool.unlabeled, ve, b))


def gd_query(pool, b, rng=None):
    """Greedy diversity: repeatedly take the unlabeled sample with the
    largest average distance to the (virtually growing) labeled set."""
    _require_unlabeled(pool)
    X = pool.dataset.features
    metric = encoding.metric_for(X.shape[1])
    labeled = list(pool.labeled)
    remaining = list(pool.unlabeled)
    chosen = []
    for _ in range(min(b, len(remaining))):
        rem = np.asarray(remaining)
        dl = mean_distances(X[rem], X[np.asarray(labeled)], metric)
        pick = int(rem[np.lexsort((rem, -dl))[0]])
        chosen.append(pick)
        labeled.append(pick)
        remaining.remove(pick)
    return Query(indices=sorted(chosen))
