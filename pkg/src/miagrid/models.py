"""Toy classifiers trained from scratch with Adam or DP-Adam.

Two architectures: a linear softmax classifier and a one-hidden-layer tanh
MLP, both on cross-entropy loss. The DP variant clips per-example gradients,
adds Gaussian noise to the clipped sum, and averages before the Adam update.
All training is a pure function of (arch, dataset, hypers, seed).
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TrainingDivergedError
from .seeding import rng_for, stable_seed

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

LOGIT_CLAMP = 1e-12

_KINDS = ("linear", "mlp")


@dataclass(frozen=True)
class Architecture:
    kind: str
    dim: int
    classes: int
    hidden_units: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown architecture kind {self.kind!r}")
        if self.dim < 1 or self.classes < 2:
            raise ConfigError("architecture needs dim >= 1 and classes >= 2")
        if self.kind == "mlp" and self.hidden_units < 1:
            raise ConfigError("mlp architecture needs hidden_units >= 1")

    @property
    def param_count(self) -> int:
        if self.kind == "linear":
            return self.dim * self.classes + self.classes
        h = self.hidden_units
        return self.dim * h + h + h * self.classes + self.classes


@dataclass(frozen=True)
class HyperParams:
    """Training configuration; clip_norm and noise_multiplier are both set (DP)
    or both absent (non-DP)."""

    learning_rate: float
    batch_size: int
    epochs: int
    clip_norm: float | None = None
    noise_multiplier: float | None = None

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if (self.clip_norm is None) != (self.noise_multiplier is None):
            raise ConfigError(
                "clip_norm and noise_multiplier must be both present or both absent"
            )
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.noise_multiplier is not None and not self.noise_multiplier >= 0:
            raise ConfigError(
                f"noise_multiplier must be >= 0, got {self.noise_multiplier}"
            )

    @property
    def is_dp(self) -> bool:
        return self.clip_norm is not None


class Model:
    """Trained weights plus a digest binding them to their training inputs."""

    __slots__ = ("arch", "weights", "train_hash")

    def __init__(self, arch: Architecture, weights: np.ndarray, train_hash: str):
        self.arch = arch
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (arch.param_count,):
            raise ConfigError(
                f"weight vector has {self.weights.shape} entries, "
                f"expected ({arch.param_count},)"
            )
        self.train_hash = train_hash


def _layers(arch: Architecture, w: np.ndarray):
    """Views into the flat weight vector, layer by layer."""
    d, c = arch.dim, arch.classes
    if arch.kind == "linear":
        return w[: d * c].reshape(d, c), w[d * c :]
    h = arch.hidden_units
    off = 0
    w1 = w[off : off + d * h].reshape(d, h)
    off += d * h
    b1 = w[off : off + h]
    off += h
    w2 = w[off : off + h * c].reshape(h, c)
    off += h * c
    b2 = w[off:]
    return w1, b1, w2, b2


def init_weights(arch: Architecture, seed: int) -> np.ndarray:
    """Scaled-uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    rng = rng_for(seed, "init")
    if arch.kind == "linear":
        shapes = [(arch.dim, arch.classes), (arch.classes,)]
        fans = [arch.dim, arch.dim]
    else:
        h = arch.hidden_units
        shapes = [(arch.dim, h), (h,), (h, arch.classes), (arch.classes,)]
        fans = [arch.dim, arch.dim, h, h]
    parts = []
    for shape, fan in zip(shapes, fans):
        bound = 1.0 / np.sqrt(fan)
        parts.append(rng.uniform(-bound, bound, size=shape).ravel())
    return np.concatenate(parts)


def forward_logits(arch: Architecture, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    if arch.kind == "linear":
        W, b = _layers(arch, w)
        return X @ W + b
    w1, b1, w2, b2 = _layers(arch, w)
    return np.tanh(X @ w1 + b1) @ w2 + b2


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_confidence(model: Model, features) -> np.ndarray:
    """Probability vector(s) for one feature vector or a batch."""
    X = np.asarray(features, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.arch.dim:
        raise ConfigError(
            f"feature dimension {X.shape[1]} does not match arch.dim {model.arch.dim}"
        )
    probs = softmax(forward_logits(model.arch, model.weights, X))
    return probs[0] if single else probs


def _forward_full(arch, w, X):
    """Forward pass keeping the hidden activations needed for backprop."""
    if arch.kind == "linear":
        return forward_logits(arch, w, X), None
    w1, b1, w2, b2 = _layers(arch, w)
    H = np.tanh(X @ w1 + b1)
    return H @ w2 + b2, H


def _per_example_nll(P, y):
    return -np.log(np.clip(P[np.arange(len(y)), y], 1e-300, None))


def loss_and_grad(arch: Architecture, w: np.ndarray, X, y):
    """Mean cross-entropy loss and its gradient (flat vector)."""
    n = len(y)
    Z, H = _forward_full(arch, w, X)
    P = softmax(Z)
    loss = float(_per_example_nll(P, y).mean())
    dZ = P.copy()
    dZ[np.arange(n), y] -= 1.0
    dZ /= n
    if arch.kind == "linear":
        return loss, np.concatenate([(X.T @ dZ).ravel(), dZ.sum(axis=0)])
    w1, b1, w2, b2 = _layers(arch, w)
    gW2 = H.T @ dZ
    gb2 = dZ.sum(axis=0)
    dA = (dZ @ w2.T) * (1.0 - H * H)
    gW1 = X.T @ dA
    gb1 = dA.sum(axis=0)
    return loss, np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])


def per_example_grads(arch: Architecture, w: np.ndarray, X, y):
    """Per-example losses (n,) and gradients (n, param_count)."""
    n = len(y)
    Z, H = _forward_full(arch, w, X)
    P = softmax(Z)
    losses = _per_example_nll(P, y)
    dZ = P.copy()
    dZ[np.arange(n), y] -= 1.0
    if arch.kind == "linear":
        gW = np.einsum("ni,nc->nic", X, dZ).reshape(n, -1)
        return losses, np.concatenate([gW, dZ], axis=1)
    w1, b1, w2, b2 = _layers(arch, w)
    gW2 = np.einsum("nh,nc->nhc", H, dZ).reshape(n, -1)
    dA = (dZ @ w2.T) * (1.0 - H * H)
    gW1 = np.einsum("ni,nh->nih", X, dA).reshape(n, -1)
    return losses, np.concatenate([gW1, dA, gW2, dZ], axis=1)


def clip_per_example(grads: np.ndarray, clip_norm: float) -> np.ndarray:
    """Scale each row to L2 norm at most clip_norm."""
    norms = np.linalg.norm(grads, axis=1, keepdims=True)
    return grads * np.minimum(1.0, clip_norm / np.maximum(norms, 1e-300))


def train_hash(arch: Architecture, dataset, hypers: HyperParams, seed: int) -> str:
    h = hashlib.sha256()
    h.update(repr((arch, hypers, seed)).encode())
    h.update(np.ascontiguousarray(dataset.ids).tobytes())
    return h.hexdigest()


def train(arch: Architecture, dataset, hypers: HyperParams, seed: int) -> Model:
    """Run `epochs` passes of minibatch (DP-)Adam on cross-entropy loss."""
    n = len(dataset)
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    X, y = dataset.features, dataset.labels
    if X.shape[1] != arch.dim or y.max() >= arch.classes:
        raise ConfigError("dataset does not match the architecture's dim/classes")
    batch = min(hypers.batch_size, n)

    w = init_weights(arch, seed)
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    rng_batches = rng_for(seed, "batches")
    rng_noise = rng_for(seed, "noise")
    step = 0
    for _ in range(hypers.epochs):
        perm = rng_batches.permutation(n)
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            if hypers.is_dp:
                losses, G = per_example_grads(arch, w, X[idx], y[idx])
                loss = float(losses.mean())
                g = clip_per_example(G, hypers.clip_norm).sum(axis=0)
                sigma = hypers.noise_multiplier * hypers.clip_norm
                if sigma > 0:
                    g = g + rng_noise.normal(0.0, sigma, size=g.shape)
                g /= len(idx)
            else:
                loss, g = loss_and_grad(arch, w, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(step)
            step += 1
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
            m_hat = m / (1.0 - ADAM_BETA1**step)
            v_hat = v / (1.0 - ADAM_BETA2**step)
            w = w - hypers.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return Model(arch, w, train_hash(arch, dataset, hypers, seed))


def logit_score(p):
    """log(p / (1-p)) with p clamped to [1e-12, 1 - 1e-12]."""
    p = np.clip(np.asarray(p, dtype=np.float64), LOGIT_CLAMP, 1.0 - LOGIT_CLAMP)
    out = np.log(p) - np.log1p(-p)
    return float(out) if out.ndim == 0 else out


def true_class_logit_scores(model: Model, dataset) -> np.ndarray:
    """Logit-scaled confidence of the true class for every sample in the set."""
    probs = predict_confidence(model, dataset.features)
    return logit_score(probs[np.arange(len(dataset)), dataset.labels])


_MAGIC = b"MGM1"
_KIND_TAGS = {"linear": 0, "mlp": 1}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


def model_to_bytes(model: Model) -> bytes:
    """Flat little-endian record: header, weights as f64, then train_hash."""
    arch = model.arch
    header = _MAGIC + struct.pack(
        "<BIIIQ",
        _KIND_TAGS[arch.kind],
        arch.dim,
        arch.classes,
        arch.hidden_units,
        model.weights.size,
    )
    return (
        header
        + model.weights.astype("<f8").tobytes()
        + bytes.fromhex(model.train_hash)
    )


def model_from_bytes(data: bytes) -> Model:
    if data[:4] != _MAGIC:
        raise ConfigError("not a serialized model record")
    tag, dim, classes, hidden, n_w = struct.unpack_from("<BIIIQ", data, 4)
    arch = Architecture(_TAG_KINDS[tag], dim, classes, hidden)
    off = 4 + struct.calcsize("<BIIIQ")
    weights = np.frombuffer(data, dtype="<f8", count=n_w, offset=off).copy()
    digest = data[off + 8 * n_w :].hex()
    return Model(arch, weights, digest)
