"""Small feed-forward network core shared by the classifier and the policy.

Plain numpy: relu hidden layers, softmax output, cross-entropy (or optional
mean-squared-error) loss, Adam updates.  Everything is deterministic given the
seeds that are passed in; no global random state is touched.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass
class MLP:
    layout: tuple
    seed: int
    weights: list = field(repr=False, default=None)
    biases: list = field(repr=False, default=None)


def init_mlp(layout, seed):
    """He-style fan-in-scaled initialization, biases zero."""
    layout = tuple(int(w) for w in layout)
    if len(layout) < 2 or any(w < 1 for w in layout):
        raise ValueError(f"bad layout {layout}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layout[:-1], layout[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MLP(layout=layout, seed=int(seed), weights=weights, biases=biases)


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(mlp, X):
    """Softmax outputs for a batch, shape (n, layout[-1])."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != mlp.layout[0]:
        raise DimensionMismatch(
            f"input width {X.shape[1]} != expected {mlp.layout[0]}"
        )
    h = X
    for W, b in zip(mlp.weights[:-1], mlp.biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
    return softmax(h @ mlp.weights[-1] + mlp.biases[-1])


def loss_and_grads(mlp, X, T, loss="ce"):
    """Mean loss over the batch and gradients w.r.t. every weight and bias.

    T holds one target distribution per row (one-hot for hard labels).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    n = X.shape[0]
    acts = [X]
    h = X
    for W, b in zip(mlp.weights[:-1], mlp.biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    logits = h @ mlp.weights[-1] + mlp.biases[-1]
    P = softmax(logits)
    eps = 1e-12
    if loss == "ce":
        value = -np.sum(T * np.log(P + eps)) / n
        # softmax + CE with distribution targets: dL/dlogits = (sum(T)*P - T)/n
        tsum = T.sum(axis=1, keepdims=True)
        delta = (tsum * P - T) / n
    elif loss == "mse":
        value = np.sum((P - T) ** 2) / n
        g = 2.0 * (P - T) / n
        delta = P * (g - np.sum(g * P, axis=1, keepdims=True))
    else:
        raise ValueError(f"unknown loss {loss!r}")
    grads_w = [None] * len(mlp.weights)
    grads_b = [None] * len(mlp.biases)
    for layer in range(len(mlp.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ mlp.weights[layer].T) * (acts[layer] > 0.0)
    return value, grads_w, grads_b


def get_flat_params(mlp):
    return np.concatenate(
        [a.ravel() for pair in zip(mlp.weights, mlp.biases) for a in pair]
    )


def set_flat_params(mlp, flat):
    pos = 0
    for arrs in zip(mlp.weights, mlp.biases):
        for a in arrs:
            a[...] = flat[pos : pos + a.size].reshape(a.shape)
            pos += a.size
    if pos != flat.size:
        raise ValueError("parameter vector size mismatch")


def clone(mlp):
    return MLP(
        layout=mlp.layout,
        seed=mlp.seed,
        weights=[W.copy() for W in mlp.weights],
        biases=[b.copy() for b in mlp.biases],
    )


def train_mlp(
    mlp,
    X,
    T,
    *,
    epochs,
    minibatch_size,
    learning_rate,
    seed,
    loss="ce",
    val=None,
    patience=0,
):
    """Adam minibatch training; returns (trained mlp, history).

    history: {"train_loss": [...], "val_loss": [...]}, one entry per epoch
    (val_loss only when a (X_val, T_val) pair is given).  With patience > 0
    and validation data, stops after `patience` epochs without a new best
    validation loss and restores the best parameters.
    """
    if epochs < 1 or minibatch_size < 1 or learning_rate <= 0:
        raise ValueError("epochs/minibatch_size >= 1 and learning_rate > 0 required")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    n = X.shape[0]
    mlp = clone(mlp)
    rng = np.random.default_rng(seed)
    bs = min(minibatch_size, n)
    params = list(mlp.weights) + list(mlp.biases)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, adam_eps = 0.9, 0.999, 1e-8
    step = 0
    history = {"train_loss": [], "val_loss": []}
    best_val = np.inf
    best_params = None
    stale = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            value, gw, gb = loss_and_grads(mlp, X[idx], T[idx], loss=loss)
            epoch_loss += value
            n_batches += 1
            step += 1
            grads = gw + gb
            for p, mp, vp, g in zip(params, m, v, grads):
                mp *= b1
                mp += (1 - b1) * g
                vp *= b2
                vp += (1 - b2) * g * g
                mhat = mp / (1 - b1**step)
                vhat = vp / (1 - b2**step)
                p -= learning_rate * mhat / (np.sqrt(vhat) + adam_eps)
        history["train_loss"].append(epoch_loss / n_batches)
        if val is not None:
            vloss, _, _ = loss_and_grads(mlp, val[0], val[1], loss=loss)
            history["val_loss"].append(vloss)
            if vloss < best_val - 1e-12:
                best_val = vloss
                best_params = get_flat_params(mlp)
                stale = 0
            else:
                stale += 1
                if patience > 0 and stale >= patience:
                    break
    if best_params is not None and patience > 0:
        set_flat_params(mlp, best_params)
    return mlp, history


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    T = np.zeros((labels.size, n_classes))
    T[np.arange(labels.size), labels] = 1.0
    return T
