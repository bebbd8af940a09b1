"""The classifier trained on the labeled set each cycle, plus metrics."""

from dataclasses import dataclass

import numpy as np

from . import nnet
from .errors import EmptyDataset, EmptyTrainingSet, IoError

DEFAULT_LAYOUT = (100, 100)

WEIGHT_MAGIC = "imital-weights"


@dataclass
class TrainConfig:
    epochs: int = 50
    minibatch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    warm_start: bool = False

    def validate(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class Classifier:
    net: nnet.MLP
    n_classes: int

    @property
    def n_features(self):
        return self.net.layout[0]


def init(n_features, n_classes, layout=DEFAULT_LAYOUT, seed=0):
    if n_features < 1 or n_classes < 2:
        raise ValueError("need n_features >= 1 and n_classes >= 2")
    widths = (n_features, *layout, n_classes)
    return Classifier(net=nnet.init_mlp(widths, seed), n_classes=n_classes)


def fit(classifier, train, config):
    """Train a fresh copy on the dataset; the input classifier is untouched.

    Cold-start by default: weights are re-initialized from config.seed so a
    fit is a pure function of (data, config).
    """
    config.validate()
    if train.n_samples == 0:
        raise EmptyTrainingSet("cannot fit on an empty dataset")
    if train.labels.max() >= classifier.n_classes:
        raise ValueError("label outside classifier output width")
    net = (
        classifier.net
        if config.warm_start
        else nnet.init_mlp(classifier.net.layout, config.seed)
    )
    T = nnet.one_hot(train.labels, classifier.n_classes)
    trained, _ = nnet.train_mlp(
        net,
        train.features,
        T,
        epochs=config.epochs,
        minibatch_size=config.minibatch_size,
        learning_rate=config.learning_rate,
        seed=config.seed,
    )
    return Classifier(net=trained, n_classes=classifier.n_classes)


def predict_proba(classifier, features):
    """Class probabilities; accepts a single row or a matrix."""
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    P = nnet.forward(classifier.net, features)
    return P[0] if single else P


def predict(classifier, features):
    # argmax ties resolve to the lowest class id (numpy argmax convention)
    P = nnet.forward(classifier.net, np.atleast_2d(features))
    return P.argmax(axis=1)


def accuracy(classifier, data):
    if data.n_samples == 0:
        raise EmptyDataset("accuracy of an empty dataset is undefined")
    return float(np.mean(predict(classifier, data.features) == data.labels))


def macro_f1(classifier, data):
    """Unweighted mean of per-class F1; undefined per-class F1 counts as 0."""
    if data.n_samples == 0:
        raise EmptyDataset("macro F1 of an empty dataset is undefined")
    preds = predict(classifier, data.features)
    return macro_f1_from_predictions(preds, data.labels, data.n_classes)


def macro_f1_from_predictions(preds, labels, n_classes):
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    scores = []
    for cls in range(n_classes):
        tp = np.sum((preds == cls) & (labels == cls))
        fp = np.sum((preds == cls) & (labels != cls))
        fn = np.sum((preds != cls) & (labels == cls))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def save_weights(classifier, path, extra_header=()):
    """Header line (layout, seed, extras) + raw little-endian float64 blocks."""
    fields = [
        WEIGHT_MAGIC,
        "layout=" + ",".join(str(w) for w in classifier.net.layout),
        f"seed={classifier.net.seed}",
        *extra_header,
    ]
    try:
        with open(path, "wb") as fh:
            fh.write((" ".join(fields) + "\n").encode("ascii"))
            for W, b in zip(classifier.net.weights, classifier.net.biases):
                fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write weights to {path}: {exc}") from exc


def _parse_weight_header(line, path):
    parts = line.split()
    if not parts or parts[0] != WEIGHT_MAGIC:
        raise IoError(f"{path}: not a weight file")
    header = {}
    for tok in parts[1:]:
        key, _, val = tok.partition("=")
        header[key] = val
    if "layout" not in header or "seed" not in header:
        raise IoError(f"{path}: missing layout/seed in header")
    return header


def load_weights(path):
    """Returns (MLP, header dict).  Bit-exact inverse of save_weights."""
    try:
        with open(path, "rb") as fh:
            header = _parse_weight_header(
                fh.readline().decode("ascii").strip(), path
            )
            layout = tuple(int(w) for w in header["layout"].split(","))
            net = nnet.init_mlp(layout, int(header["seed"]))
            for i, (fan_in, fan_out) in enumerate(zip(layout[:-1], layout[1:])):
                wb = fh.read(fan_in * fan_out * 8)
                bb = fh.read(fan_out * 8)
                if len(wb) + len(bb) != (fan_in + 1) * fan_out * 8:
                    raise IoError(f"{path}: truncated weight block {i}")
                net.weights[i] = np.frombuffer(wb, dtype="<f8").reshape(fan_in, fan_out).copy()
                net.biases[i] = np.frombuffer(bb, dtype="<f8").copy()
            if fh.read(1):
                raise IoError(f"{path}: trailing bytes after weights")
    except OSError as exc:
        raise IoError(f"cannot read weights from {path}: {exc}") from exc
    return net, header


def save_classifier(classifier, path):
    save_weights(classifier, path, extra_header=(f"n_classes={classifier.n_classes}",))


def load_classifier(path):
    net, header = load_weights(path)
    n_classes = int(header.get("n_classes", net.layout[-1]))
    if n_classes != net.layout[-1]:
        raise IoError(f"{path}: n_classes header disagrees with layout")
    return Classifier(net=net, n_classes=n_classes)
