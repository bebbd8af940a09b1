import numpy as np
import pytest

from imital import learner, synthgen


def make_blobs(n=120, n_features=2, n_classes=2, sep=6.0, seed=0):
    """Well-separated Gaussian blobs, min-max scaled like generated data."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for cls in range(n_classes):
        per = n // n_classes + (1 if cls < n % n_classes else 0)
        center = np.zeros(n_features)
        center[0] = cls * sep
        rows.append(center + rng.standard_normal((per, n_features)))
        labels.extend([cls] * per)
    X = np.vstack(rows)
    y = np.array(labels, dtype=np.int64)
    perm = rng.permutation(y.size)
    return synthgen.Dataset(
        synthgen.minmax_scale(X[perm]), y[perm], n_classes
    )


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def fast_cfg():
    return learner.TrainConfig(epochs=15, minibatch_size=32, seed=0)
