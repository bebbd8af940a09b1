"""Listwise ranking policy: network, behavioral-cloning trainer, query."""

from dataclasses import dataclass, field

import numpy as np

from . import alcore, encoding, learner as learner_mod, nnet
from .errors import EmptyCorpus, EmptyPool, InconsistentK, IoError

DEFAULT_LAYOUT = (100, 100)

APPLICATION_J = 2
TRAINING_J = 10
DEFAULT_K = 20

ORDERING_TAG = "u1desc"


@dataclass
class PolicyNet:
    net: nnet.MLP
    k: int


@dataclass
class CloneConfig:
    epochs: int = 100
    minibatch_size: int = 64
    learning_rate: float = 1e-3
    validation_fraction: float = 0.1
    seed: int = 0
    loss: str = "ce"  # "mse" fits the raw reward vector instead
    patience: int = 10

    def validate(self):
        if self.epochs < 1 or self.minibatch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs/minibatch >= 1 and learning_rate > 0 required")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.loss not in ("ce", "mse"):
            raise ValueError("loss must be 'ce' or 'mse'")


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    top1_accuracy: float = 0.0


def init_policy(k, layout=DEFAULT_LAYOUT, seed=0):
    if k < 1:
        raise ValueError("k must be >= 1")
    widths = (encoding.TUPLE_WIDTH * k, *layout, k)
    return PolicyNet(net=nnet.init_mlp(widths, seed), k=k)


def policy_forward(net, encoded):
    """Softmax scores over the k candidate positions."""
    values = encoded.values if isinstance(encoded, encoding.EncodedState) else encoded
    return nnet.forward(net.net, np.asarray(values, dtype=np.float64))[0]


def rewards_to_targets(rewards):
    """Min-shift and sum-normalize; all-equal rewards become uniform.

    The transform preserves the reward ordering and is invariant to adding a
    constant and to positive rescaling of the shifted rewards.
    """
    r = np.asarray(rewards, dtype=np.float64)
    shifted = r - r.min()
    total = shifted.sum()
    if total <= 0.0:
        return np.full(r.size, 1.0 / r.size)
    return shifted / total


def _corpus_matrices(records, loss):
    k = records[0].encoded.k
    for rec in records:
        if rec.encoded.k != k or rec.rewards.size != k:
            raise InconsistentK("corpus mixes different k values")
    X = np.stack([rec.encoded.values for rec in records])
    if loss == "mse":
        T = np.stack([rec.rewards for rec in records])
    else:
        T = np.stack([rewards_to_targets(rec.rewards) for rec in records])
    return X, T, k


def top1_imitation_accuracy(net, records):
    """Fraction of records where the policy argmax hits the reward argmax."""
    X = np.stack([rec.encoded.values for rec in records])
    scores = nnet.forward(net.net, X)
    hits = [
        int(np.argmax(s) == np.argmax(rec.rewards))
        for s, rec in zip(scores, records)
    ]
    return float(np.mean(hits))


def train_policy(records, cfg, layout=DEFAULT_LAYOUT):
    """Behavioral cloning on simulation records; returns (PolicyNet, report)."""
    cfg.validate()
    if not records:
        raise EmptyCorpus("no simulation records to train on")
    X, T, k = _corpus_matrices(records, cfg.loss)
    net = init_policy(k, layout=layout, seed=cfg.seed)
    n = X.shape[0]
    val = None
    if cfg.validation_fraction > 0.0 and n >= 2:
        n_val = max(1, int(round(cfg.validation_fraction * n)))
        order = np.random.default_rng(cfg.seed).permutation(n)
        vi, ti = order[:n_val], order[n_val:]
        if ti.size == 0:
            ti, vi = order, order[:0]
            val = None
        else:
            val = (X[vi], T[vi])
    else:
        ti = np.arange(n)
    trained, history = nnet.train_mlp(
        net.net,
        X[ti],
        T[ti],
        epochs=cfg.epochs,
        minibatch_size=cfg.minibatch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        loss=cfg.loss,
        val=val,
        patience=cfg.patience if val is not None else 0,
    )
    policy = PolicyNet(net=trained, k=k)
    report = TrainReport(
        train_loss=history["train_loss"],
        val_loss=history["val_loss"],
        top1_accuracy=top1_imitation_accuracy(policy, records),
    )
    return policy, report


def imital_query(pool, net, j, k, b, rng):
    """Pre-select, encode, score with the policy, take the b highest scores.

    Padded positions can never be selected; score ties break toward the
    earlier (more uncertain) candidate position.
    """
    if net.k != k:
        raise InconsistentK(f"policy k={net.k} but query k={k}")
    if not pool.unlabeled:
        raise EmptyPool("no unlabeled samples left")
    candidates = encoding.pre_select(pool, j, k, rng)
    encoded = encoding.encode_state(pool, candidates, pool.learner)
    scores = policy_forward(net, encoded)
    n_real = candidates.indices.size
    order = np.lexsort((np.arange(n_real), -scores[:n_real]))
    chosen = candidates.indices[order[: min(b, n_real)]]
    return alcore.Query(indices=sorted(int(i) for i in chosen))


def save_policy(policy, path):
    learner_mod.save_weights(
        learner_mod.Classifier(net=policy.net, n_classes=policy.k),
        path,
        extra_header=(
            f"k={policy.k}",
            f"ordering={ORDERING_TAG}",
            f"metric_threshold={encoding.METRIC_FEATURE_THRESHOLD}",
        ),
    )


def load_policy(path):
    """Rejects files whose encoding tags disagree with this build."""
    net, header = learner_mod.load_weights(path)
    if "k" not in header:
        raise IoError(f"{path}: missing k header (not a policy file)")
    k = int(header["k"])
    if net.layout[0] != encoding.TUPLE_WIDTH * k or net.layout[-1] != k:
        raise IoError(f"{path}: layout does not match k={k}")
    if header.get("ordering") != ORDERING_TAG:
        raise IoError(f"{path}: candidate-ordering tag mismatch")
    if int(header.get("metric_threshold", -1)) != encoding.METRIC_FEATURE_THRESHOLD:
        raise IoError(f"{path}: metric-threshold tag mismatch")
    return PolicyNet(net=net, k=k)
