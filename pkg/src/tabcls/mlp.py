"""One-hidden-layer MLP classifier (500 tanh units, softmax output) trained
with minibatch Adam on cross-entropy.

Training is deterministic given (X, y, config): Glorot init and per-epoch
batch orders come from one seeded generator, and parameters are bitwise
reproducible per kernel backend. All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""


@dataclass
class MlpParams:
    """Model parameters. W1: (hidden, d), b1: (hidden,), W2: (k, hidden), b2: (k,)."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        h, d = self.W1.shape
        k, h2 = self.W2.shape
        if self.b1.shape != (h,) or h2 != h or self.b2.shape != (k,):
            raise ConfigError(
                f"inconsistent parameter shapes: W1 {self.W1.shape}, b1 {self.b1.shape}, "
                f"W2 {self.W2.shape}, b2 {self.b2.shape}"
            )
        for name in ("W1", "b1", "W2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ConfigError(f"non-finite values in {name}")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[0]

    def save(self, path: str | Path) -> None:
        """Write parameters as an .npz archive (shape headers included)."""
        np.savez(path, W1=self.W1, b1=self.b1, W2=self.W2, b2=self.b2)

    @classmethod
    def load(cls, path: str | Path) -> "MlpParams":
        with np.load(path) as archive:
            return cls(archive["W1"], archive["b1"], archive["W2"], archive["b2"])


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 200
    seed: int = 0
    patience: int = 10
    tolerance: float = 1e-4

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.tolerance <= 0:
            raise ConfigError("learning_rate, epsilon and tolerance must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 0:
            raise ConfigError("batch_size/patience must be >= 1, max_epochs >= 0")


def init_params(
    input_dim: int, n_classes: int, hidden_size: int = 500, seed: int = 0
) -> MlpParams:
    """Seeded Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (input_dim + hidden_size))
    lim2 = np.sqrt(6.0 / (hidden_size + n_classes))
    return MlpParams(
        W1=rng.uniform(-lim1, lim1, size=(hidden_size, input_dim)),
        b1=np.zeros(hidden_size),
        W2=rng.uniform(-lim2, lim2, size=(n_classes, hidden_size)),
        b2=np.zeros(n_classes),
    )


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities softmax(W2 tanh(W1 x + b1) + b2); rows sum to 1."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != params.input_dim:
        raise ConfigError(
            f"input dim {batch.shape[1]} does not match model dim {params.input_dim}"
        )
    probs = kernels.mlp_forward_probs(
        params.W1.T.copy(), params.b1, params.W2.T.copy(), params.b2, batch
    )
    return probs[0] if single else probs


def loss(params: MlpParams, X: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-probability of the true classes."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    return kernels.mlp_nll(params.W1.T.copy(), params.b1, params.W2.T.copy(), params.b2, X, y)


def predict(params: MlpParams, x: np.ndarray) -> np.ndarray | int:
    """Argmax class index; ties break to the lowest index."""
    probs = forward(params, x)
    return int(np.argmax(probs)) if probs.ndim == 1 else np.argmax(probs, axis=1)


def train(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    n_classes: int | None = None,
    hidden_size: int = 500,
) -> MlpParams:
    """Adam-train the MLP; deterministic given the config seed.

    Stops at ``max_epochs`` or once the epoch loss has improved by less than
    ``tolerance`` for ``patience`` consecutive epochs.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ConfigError(f"bad training shapes X {X.shape}, y {y.shape}")
    n, d = X.shape
    k = int(n_classes) if n_classes is not None else int(y.max()) + 1
    if y.min() < 0 or y.max() >= k:
        raise ConfigError("labels must lie in 0..n_classes-1")

    rng = np.random.default_rng(cfg.seed)
    lim1 = np.sqrt(6.0 / (d + hidden_size))
    lim2 = np.sqrt(6.0 / (hidden_size + k))
    w1 = np.ascontiguousarray(rng.uniform(-lim1, lim1, size=(hidden_size, d)).T)
    b1 = np.zeros(hidden_size)
    w2 = np.ascontiguousarray(rng.uniform(-lim2, lim2, size=(k, hidden_size)).T)
    b2 = np.zeros(k)
    moments = [np.zeros_like(arr) for arr in (w1, b1, w2, b2, w1, b1, w2, b2)]

    step = 0
    best = np.inf
    stale = 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        nll_sum, step = kernels.mlp_adam_epoch(
            w1, b1, w2, b2, *moments,
            X, y, order, cfg.batch_size, step,
            cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
        )
        epoch_loss = nll_sum / n
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {epoch} "
                f"(lr={cfg.learning_rate}, batch={cfg.batch_size}, seed={cfg.seed})"
            )
        if best - epoch_loss < cfg.tolerance:
            stale += 1
        else:
            stale = 0
        best = min(best, epoch_loss)
        if stale >= cfg.patience:
            break
    return MlpParams(W1=w1.T.copy(), b1=b1, W2=w2.T.copy(), b2=b2)


def gradient_check(
    params: MlpParams,
    X: np.ndarray,
    y: np.ndarray,
    h: float = 1e-5,
    n_checks: int = 64,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central finite-difference
    gradients over a random parameter subset."""
    if not 1e-6 <= h <= 1e-4:
        raise ConfigError(f"step size h={h} outside [1e-6, 1e-4]")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    arrays = {
        "w1": np.ascontiguousarray(params.W1.T),
        "b1": params.b1.copy(),
        "w2": np.ascontiguousarray(params.W2.T),
        "b2": params.b2.copy(),
    }
    _, gw1, gb1, gw2, gb2 = kernels.mlp_gradients(
        arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"], X, y
    )
    grads = {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}

    rng = np.random.default_rng(seed)
    names = list(arrays)
    sizes = np.array([arrays[name].size for name in names], dtype=np.float64)
    worst = 0.0
    for _ in range(n_checks):
        name = names[rng.choice(len(names), p=sizes / sizes.sum())]
        flat = int(rng.integers(arrays[name].size))
        target = arrays[name].reshape(-1)
        saved = target[flat]
        target[flat] = saved + h
        up = kernels.mlp_nll(arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"], X, y)
        target[flat] = saved - h
        down = kernels.mlp_nll(arrays["w1"], arrays["b1"], arrays["w2"], arrays["b2"], X, y)
        target[flat] = saved
        numeric = (up - down) / (2.0 * h)
        analytic = grads[name].reshape(-1)[flat]
        err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst
