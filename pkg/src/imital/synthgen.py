"""Synthetic classification dataset generation.

Datasets are built by placing cluster centroids on the vertices of a
hypercube with side length 2**class_sep, filling each cluster with
standard-normal samples, mixing through a random rotation and min-max
scaling every feature to [0, 1].  Generation parameters are drawn from
wide distributions so the resulting datasets cover many shapes and
difficulties.

Note on class_sep: larger values spread the clusters further apart, which
makes the literal geometry *easier* to classify, not harder.  The parameter
is implemented literally (side = 2**class_sep); see README.
"""

import csv
import time
from dataclasses import dataclass, asdict

import numpy as np

from .errors import EmptyDataset, InfeasibleSplit, IoError, TimeoutRetryExhausted

# generation bounds
N_SAMPLES_RANGE = (100, 5000)
N_FEATURES_RANGE = (2, 100)
N_CLASSES_RANGE = (2, 10)
CLUSTERS_RANGE = (1, 10)
CLASS_SEP_RANGE = (0.0, 10.0)
NOISE_PARETO_SHAPE = 5.0

GENERATION_TIMEOUT_SECONDS = 10.0
MAX_GENERATION_RETRIES = 5


@dataclass
class SynthParams:
    n_samples: int
    n_features: int
    n_classes: int
    clusters_per_class: int
    class_weights: tuple
    noise_fraction: float
    class_sep: float
    seed: int

    def validate(self):
        lo, hi = N_SAMPLES_RANGE
        if not lo <= self.n_samples <= hi:
            raise ValueError(f"n_samples {self.n_samples} outside [{lo}, {hi}]")
        lo, hi = N_FEATURES_RANGE
        if not lo <= self.n_features <= hi:
            raise ValueError(f"n_features {self.n_features} outside [{lo}, {hi}]")
        lo, hi = N_CLASSES_RANGE
        if not lo <= self.n_classes <= hi:
            raise ValueError(f"n_classes {self.n_classes} outside [{lo}, {hi}]")
        lo, hi = CLUSTERS_RANGE
        if not lo <= self.clusters_per_class <= hi:
            raise ValueError(f"clusters_per_class outside [{lo}, {hi}]")
        w = np.asarray(self.class_weights, dtype=np.float64)
        if w.size != self.n_classes or (w < 0).any():
            raise ValueError("class_weights must be n_classes non-negative entries")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"class_weights sum {w.sum()} != 1")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ValueError("noise_fraction outside [0, 1]")
        if not CLASS_SEP_RANGE[0] <= self.class_sep <= CLASS_SEP_RANGE[1]:
            raise ValueError("class_sep outside [0, 10]")

    def to_record(self):
        """Flat key=value line for campaign logs."""
        d = asdict(self)
        d["class_weights"] = ";".join(repr(float(w)) for w in self.class_weights)
        return " ".join(f"{k}={d[k]}" for k in d)


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def validate(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be 2-d, labels 1-d")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features/labels row mismatch")
        if not np.isfinite(self.features).all():
            raise ValueError("non-finite feature values")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.n_classes
        ):
            raise ValueError("labels outside [0, n_classes)")


def sample_params(rng, *, max_samples=None, max_features=None, max_classes=None):
    """Draw one parameter set; optional caps shrink the ranges for desk-scale runs."""
    n_hi = min(max_samples or N_SAMPLES_RANGE[1], N_SAMPLES_RANGE[1])
    f_hi = min(max_features or N_FEATURES_RANGE[1], N_FEATURES_RANGE[1])
    c_hi = min(max_classes or N_CLASSES_RANGE[1], N_CLASSES_RANGE[1])
    n_samples = int(rng.integers(N_SAMPLES_RANGE[0], n_hi + 1))
    n_features = int(rng.integers(N_FEATURES_RANGE[0], f_hi + 1))
    n_classes = int(rng.integers(N_CLASSES_RANGE[0], c_hi + 1))
    clusters = int(rng.integers(CLUSTERS_RANGE[0], CLUSTERS_RANGE[1] + 1))
    weights = rng.dirichlet(np.ones(n_classes))
    weights = weights / weights.sum()
    # pareto(shape 5, scale 1): excess over the scale, read as percent
    noise = float(np.clip(rng.pareto(NOISE_PARETO_SHAPE), 0.0, 100.0) / 100.0)
    class_sep = float(rng.uniform(*CLASS_SEP_RANGE))
    seed = int(rng.integers(0, 2**63 - 1))
    return SynthParams(
        n_samples=n_samples,
        n_features=n_features,
        n_classes=n_classes,
        clusters_per_class=clusters,
        class_weights=tuple(float(w) for w in weights),
        noise_fraction=noise,
        class_sep=class_sep,
        seed=seed,
    )


def _class_counts(weights, n_samples, min_one=True):
    """Largest-remainder allocation; min_one forces every slot non-empty
    (used for classes, not clusters, and needs n_samples >= len(weights))."""
    w = np.asarray(weights, dtype=np.float64)
    raw = w * n_samples
    counts = np.floor(raw).astype(np.int64)
    rem = raw - counts
    for i in np.argsort(-rem)[: n_samples - counts.sum()]:
        counts[i] += 1
    while min_one and n_samples >= counts.size and (counts == 0).any():
        counts[np.argmin(counts)] += 1
        counts[np.argmax(counts)] -= 1
    return counts


def _pick_vertices(n_needed, n_features, rng):
    """Distinct hypercube vertices in {0,1}^f; uniform interior points once
    the vertex budget is exhausted (random-polytope fallback)."""
    n_vertices = 2.0**n_features
    chosen = []
    seen = set()
    if n_needed <= n_vertices:
        if n_features <= 20:
            all_idx = rng.choice(int(n_vertices), size=n_needed, replace=False)
            bits = ((all_idx[:, None] >> np.arange(n_features)) & 1).astype(np.float64)
            return bits
        while len(chosen) < n_needed:
            v = rng.integers(0, 2, size=n_features)
            key = v.tobytes()
            if key not in seen:
                seen.add(key)
                chosen.append(v.astype(np.float64))
        return np.array(chosen)
    if n_features <= 20:
        idx = np.arange(int(n_vertices))
        bits = ((idx[:, None] >> np.arange(n_features)) & 1).astype(np.float64)
        extra = rng.uniform(0.0, 1.0, size=(n_needed - int(n_vertices), n_features))
        return np.vstack([bits, extra])
    # unreachable for in-range params (2**21 > 100 clusters) but kept safe
    return rng.uniform(0.0, 1.0, size=(n_needed, n_features))


def _generate_once(params, rng):
    n_clusters = params.n_classes * params.clusters_per_class
    side = 2.0**params.class_sep
    centroids = _pick_vertices(n_clusters, params.n_features, rng) * side
    counts = _class_counts(params.class_weights, params.n_samples)
    rows = []
    labels = []
    for cls in range(params.n_classes):
        cluster_counts = _class_counts(
            np.ones(params.clusters_per_class) / params.clusters_per_class,
            counts[cls],
            min_one=False,
        )
        for c, cnt in enumerate(cluster_counts):
            centroid = centroids[cls * params.clusters_per_class + c]
            rows.append(centroid + rng.standard_normal((cnt, params.n_features)))
            labels.extend([cls] * cnt)
    X = np.vstack(rows)
    y = np.array(labels, dtype=np.int64)
    perm = rng.permutation(params.n_samples)
    X, y = X[perm], y[perm]
    # random orthonormal mixing (distance-preserving)
    Q, _ = np.linalg.qr(rng.standard_normal((params.n_features, params.n_features)))
    X = X @ Q
    y = _flip_labels(y, params.noise_fraction, params.n_classes, rng)
    X = minmax_scale(X)
    return Dataset(features=X, labels=y, n_classes=params.n_classes)


def _flip_labels(y, noise_fraction, n_classes, rng):
    n_flip = int(round(noise_fraction * y.size))
    if n_flip == 0:
        return y
    y = y.copy()
    idx = rng.choice(y.size, size=n_flip, replace=False)
    offsets = rng.integers(1, n_classes, size=n_flip)
    y[idx] = (y[idx] + offsets) % n_classes
    return y


def minmax_scale(X):
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (X - lo) / span


def generate(params, *, timeout=GENERATION_TIMEOUT_SECONDS, max_retries=MAX_GENERATION_RETRIES):
    """Generate a dataset; retries with freshly sampled params on timeout or
    when a class ends up empty."""
    params.validate()
    current = params
    for attempt in range(max_retries + 1):
        start = time.monotonic()
        rng = np.random.default_rng(current.seed)
        while time.monotonic() - start < timeout:
            ds = _generate_once(current, rng)
            if len(np.unique(ds.labels)) == current.n_classes:
                ds.validate()
                return ds
        if attempt < max_retries:
            current = sample_params(np.random.default_rng((params.seed, attempt + 1)))
    raise TimeoutRetryExhausted(
        f"gave up after {max_retries} retries (seed {params.seed})"
    )


def split(dataset, ratio, rng, *, max_retries=1000):
    """Disjoint row partition with every class on both sides.

    Train gets floor(ratio * n) rows.  Raises InfeasibleSplit when a class
    has fewer than 2 samples.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    n = dataset.n_samples
    _, counts = np.unique(dataset.labels, return_counts=True)
    if len(counts) < dataset.n_classes or (counts < 2).any():
        raise InfeasibleSplit("every class needs at least 2 samples")
    n_train = int(np.floor(ratio * n))
    for _ in range(max_retries):
        perm = rng.permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        if (
            len(np.unique(dataset.labels[tr])) == dataset.n_classes
            and len(np.unique(dataset.labels[te])) == dataset.n_classes
        ):
            train = Dataset(dataset.features[tr], dataset.labels[tr], dataset.n_classes)
            test = Dataset(dataset.features[te], dataset.labels[te], dataset.n_classes)
            return train, test
    raise InfeasibleSplit(f"no stratified split found in {max_retries} tries")


def save_csv(dataset, path):
    """CSV with header f0,...,fN,label."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{i}" for i in range(dataset.n_features)] + ["label"])
            for row, lab in zip(dataset.features, dataset.labels):
                writer.writerow([repr(float(v)) for v in row] + [int(lab)])
    except OSError as exc:
        raise IoError(f"cannot write dataset to {path}: {exc}") from exc


def load_csv(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[-1] != "label":
                raise IoError(f"{path}: expected header ending in 'label'")
            feats, labs = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    feats.append([float(v) for v in row[:-1]])
                    labs.append(int(row[-1]))
                except ValueError as exc:
                    raise IoError(f"{path}:{lineno}: bad value ({exc})") from exc
    except OSError as exc:
        raise IoError(f"cannot read dataset from {path}: {exc}") from exc
    if not feats:
        raise EmptyDataset(f"{path} holds no data rows")
    X = np.asarray(feats, dtype=np.float64)
    y = np.asarray(labs, dtype=np.int64)
    if y.min() < 0:
        raise IoError(f"{path}: negative label")
    ds = Dataset(features=minmax_scale(X), labels=y, n_classes=int(y.max()) + 1)
    ds.validate()
    return ds
