"""Small fully-connected ReLU network with hand-written backpropagation.

The network maps a length-``N`` series to ``C`` logits (classification) or a
single score (regression).  A :class:`ModelHandle` couples parameters with an
input domain; a ``"frequency"`` handle feeds its input through
:func:`upcheck.spectral.synthesize` first, so the same trained weights can be
explained with respect to real half-spectrum parameters.

Weights are stored as ``(fan_in, fan_out)`` matrices, activations as row
batches.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .spectral import synthesis_adjoint, synthesize

__all__ = [
    "ParamsFormatError",
    "ParamsVersionError",
    "TrainingError",
    "MlpParams",
    "TrainConfig",
    "ModelHandle",
    "init_params",
    "forward",
    "predict",
    "input_gradient",
    "param_gradients",
    "loss_and_grads",
    "train",
    "save_params",
    "load_params",
    "wrap_frequency",
    "PARAMS_VERSION",
    "ADAM_DEFAULTS",
]

PARAMS_VERSION = 1
ADAM_DEFAULTS = {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8}


class ParamsFormatError(ValueError):
    """Corrupt or malformed parameter file."""


class ParamsVersionError(ParamsFormatError):
    """Parameter file written with an unsupported format version."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss)."""

    def __init__(self, epoch, message):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass
class MlpParams:
    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    task: str = "classification"

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    def copy(self):
        return MlpParams(list(self.layer_sizes), [w.copy() for w in self.weights],
                         [b.copy() for b in self.biases], self.task)

    def __eq__(self, other):
        if not isinstance(other, MlpParams):
            return NotImplemented
        return (self.layer_sizes == other.layer_sizes and self.task == other.task
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases)))


@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    task: str = "classification"
    optimizer: str = "sgd"
    weight_decay: float = 0.0

    def validate(self):
        if not (self.learning_rate > 0 and self.epochs > 0 and self.batch_size > 0):
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.task not in ("classification", "regression"):
            raise ValueError(f"task must be 'classification' or 'regression', got {self.task!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        return self


@dataclass(frozen=True)
class ModelHandle:
    params: MlpParams
    input_domain: str = "time"

    def __post_init__(self):
        if self.input_domain not in ("time", "frequency"):
            raise ValueError(f"input_domain must be 'time' or 'frequency', got {self.input_domain!r}")

    def __call__(self, x):
        """Model outputs for ``x`` (a single input or a batch of rows)."""
        return forward(self, x)[0]


def init_params(layer_sizes, seed=0, task="classification"):
    """Uniform ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))`` weights and biases.

    ``layer_sizes`` is ``[n_inputs, hidden..., n_outputs]`` and needs at least
    one hidden layer.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 3:
        raise ValueError("need at least one hidden layer: [n_in, hidden..., n_out]")
    if min(sizes) < 1:
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    if task == "regression" and sizes[-1] != 1:
        raise ValueError("regression models have a single output")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(sizes, weights, biases, task)


def _as_batch(h, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != h.params.n_inputs:
        raise ValueError(f"expected inputs of length {h.params.n_inputs}, got shape {x.shape}")
    return X, single


def _mlp_forward(p, X):
    acts = [X]
    a = X
    last = len(p.weights) - 1
    for i, (W, b) in enumerate(zip(p.weights, p.biases)):
        z = a @ W + b
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts


def forward(h, x):
    """Evaluate the model.

    Returns
    -------
    outputs : ndarray
        Logits ``(C,)`` / ``(B, C)``; regression outputs keep the trailing
        axis of size one.
    cache : list of ndarray
        Layer activations (time-domain input first) used by the backward pass.
    """
    X, single = _as_batch(h, x)
    if h.input_domain == "frequency":
        X = synthesize(X)
    acts = _mlp_forward(h.params, X)
    out = acts[-1]
    return (out[0] if single else out), acts


def predict(h, x):
    """Class index (classification) or scalar output (regression)."""
    out = h(x)
    if h.params.task == "regression":
        return out[..., 0]
    return np.argmax(out, axis=-1)


def _backward(p, acts, d_out):
    """Backpropagate ``d_out`` (gradient w.r.t. outputs) through the MLP.

    Returns gradients w.r.t. the time-domain input and every weight/bias.
    """
    dW = [None] * len(p.weights)
    db = [None] * len(p.biases)
    delta = d_out
    for i in range(len(p.weights) - 1, -1, -1):
        dW[i] = acts[i].T @ delta
        db[i] = delta.sum(axis=0)
        delta = delta @ p.weights[i].T
        if i > 0:
            delta = delta * (acts[i] > 0)
    return delta, dW, db


def input_gradient(h, x, target=0):
    """Gradient of output ``target`` w.r.t. the handle's input.

    For frequency handles this is the synthesis adjoint of the time-domain
    gradient.  Accepts one input or a batch of rows.
    """
    n_out = h.params.n_outputs
    if not (isinstance(target, (int, np.integer)) and 0 <= target < n_out):
        raise ValueError(f"target must be an output index in [0, {n_out}), got {target!r}")
    X, single = _as_batch(h, x)
    Xt = synthesize(X) if h.input_domain == "frequency" else X
    acts = _mlp_forward(h.params, Xt)
    d_out = np.zeros_like(acts[-1])
    d_out[:, target] = 1.0
    g, _, _ = _backward(h.params, acts, d_out)
    if h.input_domain == "frequency":
        g = synthesis_adjoint(g)
    return g[0] if single else g


def _loss(p, out, y):
    if p.task == "regression":
        r = out[:, 0] - y
        return float(np.mean(r * r)), (2.0 / len(y)) * r[:, None]
    z = out - out.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    idx = np.arange(len(y))
    loss = -float(np.mean(logp[idx, y]))
    d = np.exp(logp)
    d[idx, y] -= 1.0
    return loss, d / len(y)


def loss_and_grads(p, X, y):
    """Mean loss over the batch and its parameter gradients ``(loss, dW, db)``."""
    acts = _mlp_forward(p, np.asarray(X, dtype=float))
    loss, d_out = _loss(p, acts[-1], np.asarray(y))
    _, dW, db = _backward(p, acts, d_out)
    return loss, dW, db


def param_gradients(h, x, target=0):
    """Gradients of output ``target`` w.r.t. weights and biases, summed over a batch."""
    X, _ = _as_batch(h, x)
    Xt = synthesize(X) if h.input_domain == "frequency" else X
    acts = _mlp_forward(h.params, Xt)
    d_out = np.zeros_like(acts[-1])
    d_out[:, target] = 1.0
    _, dW, db = _backward(h.params, acts, d_out)
    return dW, db


def _evaluate(p, X, y):
    out = _mlp_forward(p, X)[-1]
    if p.task == "regression":
        return {"mse": float(np.mean((out[:, 0] - y) ** 2)), "n": int(len(y))}
    target_logit = out[np.arange(len(y)), y]
    return {"accuracy": float(np.mean(np.argmax(out, axis=1) == y)), "n": int(len(y)),
            "mean_target_logit": float(np.mean(target_logit)),
            "std_target_logit": float(np.std(target_logit))}


def train(data, cfg: Optional[TrainConfig] = None, layer_sizes=None, hidden=(256, 128, 64)):
    """Fit an MLP by minibatch gradient descent.

    Parameters
    ----------
    data : SynthDataset or tuple
        A synthetic dataset (trained on its ``train`` split, evaluated on every
        validation group) or ``(X, y)`` / ``(X, y, {name: (X_val, y_val)})``.
    cfg : TrainConfig
    layer_sizes : list of int, optional
        Overrides ``[N, *hidden, C]``.

    Returns
    -------
    params : MlpParams
    metrics : dict
        Per-epoch loss, final train/validation metrics and the optimiser
        settings used.

    Raises
    ------
    TrainingError
        If the loss becomes non-finite.
    """
    cfg = (cfg or TrainConfig()).validate()
    X, y, val = _unpack_data(data)
    if len(X) == 0:
        raise ValueError("no training data")
    if cfg.task == "classification":
        if not np.issubdtype(y.dtype, np.integer) and not np.all(y == np.round(y)):
            raise ValueError("classification needs integer labels")
        y = y.astype(int)
        n_out = int(y.max()) + 1
    else:
        y = y.astype(float)
        n_out = 1
    sizes = list(layer_sizes) if layer_sizes else [X.shape[1], *hidden, n_out]
    p = init_params(sizes, seed=cfg.seed, task=cfg.task)
    rng = np.random.default_rng([cfg.seed, 1])

    state = [np.zeros_like(a) for a in p.weights + p.biases]
    state2 = [np.zeros_like(a) for a in p.weights + p.biases]
    b1, b2, eps = ADAM_DEFAULTS["beta1"], ADAM_DEFAULTS["beta2"], ADAM_DEFAULTS["eps"]
    step = 0
    losses = []
    # overflow shows up as a non-finite loss, reported as TrainingError below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(X))
            total = 0.0
            for start in range(0, len(X), cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                loss, dW, db = loss_and_grads(p, X[idx], y[idx])
                if not np.isfinite(loss):
                    raise TrainingError(epoch, "loss is not finite")
                total += loss * len(idx)
                step += 1
                if cfg.weight_decay:
                    dW = [g + cfg.weight_decay * W for g, W in zip(dW, p.weights)]
                for k, (param, grad) in enumerate(zip(p.weights + p.biases, dW + db)):
                    if cfg.optimizer == "sgd":
                        param -= cfg.learning_rate * grad
                    else:
                        state[k] = b1 * state[k] + (1 - b1) * grad
                        state2[k] = b2 * state2[k] + (1 - b2) * grad * grad
                        m_hat = state[k] / (1 - b1 ** step)
                        v_hat = state2[k] / (1 - b2 ** step)
                        param -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            epoch_loss = total / len(X)
            if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(w)) for w in p.weights):
                raise TrainingError(epoch, "loss is not finite")
            losses.append(epoch_loss)

    metrics = {
        "epoch_loss": losses,
        "train": _evaluate(p, X, y),
        "validation": {name: _evaluate(p, Xv, yv) for name, (Xv, yv) in val.items()},
        "config": {"learning_rate": cfg.learning_rate, "epochs": cfg.epochs,
                   "batch_size": cfg.batch_size, "seed": cfg.seed, "task": cfg.task,
                   "optimizer": cfg.optimizer, "weight_decay": cfg.weight_decay,
                   "layer_sizes": sizes},
    }
    if cfg.optimizer == "adam":
        metrics["config"]["adam"] = dict(ADAM_DEFAULTS)
    return p, metrics


def _unpack_data(data):
    if hasattr(data, "arrays"):
        X, y = data.arrays("train")
        val = {name: data.arrays(name) for name in ("both", "time-only", "freq-only")
               if len(data.group(name))}
        return X, y, val
    if len(data) == 3:
        X, y, val = data
    else:
        (X, y), val = data, {}
    return np.asarray(X, dtype=float), np.asarray(y), {k: (np.asarray(a, float), np.asarray(b))
                                                        for k, (a, b) in val.items()}


def save_params(p, path):
    """Write parameters as versioned JSON (floats round-trip exactly)."""
    doc = {"version": PARAMS_VERSION, "layer_sizes": list(p.layer_sizes), "task": p.task,
           "weights": [w.tolist() for w in p.weights], "biases": [b.tolist() for b in p.biases]}
    Path(path).write_text(json.dumps(doc) + "\n")


def load_params(path):
    """Read parameters written by :func:`save_params`.

    Raises
    ------
    ParamsVersionError
        Unknown ``version`` field.
    ParamsFormatError
        Anything else malformed.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParamsFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ParamsFormatError(f"{path}: missing version header")
    if doc["version"] != PARAMS_VERSION:
        raise ParamsVersionError(f"{path}: unsupported parameter file version {doc['version']!r}")
    try:
        sizes = [int(s) for s in doc["layer_sizes"]]
        weights = [np.array(w, dtype=float) for w in doc["weights"]]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
        task = doc.get("task", "classification")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParamsFormatError(f"{path}: malformed parameters ({exc})") from exc
    if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
        raise ParamsFormatError(f"{path}: layer count does not match layer_sizes")
    for W, b, fi, fo in zip(weights, biases, sizes[:-1], sizes[1:]):
        if W.shape != (fi, fo) or b.shape != (fo,):
            raise ParamsFormatError(f"{path}: parameter shapes do not match layer_sizes {sizes}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ParamsFormatError(f"{path}: non-finite parameters")
    return MlpParams(sizes, weights, biases, task)


def wrap_frequency(h):
    """Frequency-domain view of a time-domain handle (same weights)."""
    if h.input_domain != "time":
        raise ValueError("wrap_frequency expects a time-domain handle")
    return replace(h, input_domain="frequency")
