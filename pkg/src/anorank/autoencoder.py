"""Attention-gated autoencoder scored by reconstruction error.

The model learns a compact representation of normal rows and flags
deviation through the squared reconstruction error e(x) = ||x - x_hat||^2.
A per-feature soft gate alpha(x) = logistic(Wa x + ba) in (0,1)^d is
multiplied into the input before encoding, letting the model focus on
informative features; the gate is trained jointly with encoder/decoder.

Pipeline (all dense numpy, float64):

    alpha = logistic(Wa x + ba)          gate, d -> d
    x*    = x (*) alpha                  element-wise
    z     = tanh(We x* + be)             encoder, d -> k (k << d),
                                         optional tanh hidden layer
    x_hat = logistic(Wd z + bd)          decoder, mirror of encoder

Training is plain mini-batch gradient descent on the mean reconstruction
error, with gradients derived by hand (see _gradients). Everything is
deterministic given the seeds, which the active-learning loop relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from anorank.binvec import BinaryMatrix
from anorank.errors import ConfigError, ContractError, DimensionError, TrainingError

CHECKPOINT_VERSION = 1


def _logistic(x: np.ndarray) -> np.ndarray:
    # split form avoids overflow in exp for large |x|
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class ModelDims:
    """Input width d, latent width k (k < d), optional encoder hidden width."""

    d: int
    k: int
    hidden: int | None = None

    def __post_init__(self):
        if not 1 <= self.k < self.d:
            raise ConfigError(f"need 1 <= k < d, got k={self.k}, d={self.d}")
        if self.hidden is not None and self.hidden < 1:
            raise ConfigError(f"hidden width must be >= 1, got {self.hidden}")


def default_latent_dim(d: int) -> int:
    """Default bottleneck: d/8 rounded up, at least 2, always below d."""
    return max(1, min(d - 1, max(2, math.ceil(d / 8))))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    weight_init_scale: float = 1.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.weight_init_scale > 0:
            raise ConfigError(f"weight_init_scale must be > 0, got {self.weight_init_scale}")


@dataclass(frozen=True)
class ModelParams:
    """All trainable arrays. enc/dec tuples hold one layer, or two with a hidden width."""

    dims: ModelDims
    seed: int
    attn_w: np.ndarray  # (d, d)
    attn_b: np.ndarray  # (d,)
    enc_w: tuple[np.ndarray, ...]
    enc_b: tuple[np.ndarray, ...]
    dec_w: tuple[np.ndarray, ...]
    dec_b: tuple[np.ndarray, ...]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """(name, array) pairs in the documented checkpoint order."""
        named = [("attn_w", self.attn_w), ("attn_b", self.attn_b)]
        for i, (w, b) in enumerate(zip(self.enc_w, self.enc_b)):
            named += [(f"enc_w{i}", w), (f"enc_b{i}", b)]
        for i, (w, b) in enumerate(zip(self.dec_w, self.dec_b)):
            named += [(f"dec_w{i}", w), (f"dec_b{i}", b)]
        return named

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for _, a in self.named_arrays())


def _layer_sizes(dims: ModelDims) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """(out, in) shapes of encoder and decoder layers."""
    if dims.hidden is None:
        return [(dims.k, dims.d)], [(dims.d, dims.k)]
    return (
        [(dims.hidden, dims.d), (dims.k, dims.hidden)],
        [(dims.hidden, dims.k), (dims.d, dims.hidden)],
    )


def init(dims: ModelDims, seed: int, weight_init_scale: float = 1.0) -> ModelParams:
    """Seeded init: weights uniform in [-s, s] with s = scale/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(seed)

    def draw(out_n: int, in_n: int) -> np.ndarray:
        s = weight_init_scale / math.sqrt(in_n)
        return rng.uniform(-s, s, size=(out_n, in_n))

    enc_sizes, dec_sizes = _layer_sizes(dims)
    attn_w = draw(dims.d, dims.d)
    enc_w = tuple(draw(o, i) for o, i in enc_sizes)
    dec_w = tuple(draw(o, i) for o, i in dec_sizes)
    return ModelParams(
        dims=dims,
        seed=seed,
        attn_w=attn_w,
        attn_b=np.zeros(dims.d),
        enc_w=enc_w,
        enc_b=tuple(np.zeros(o) for o, _ in enc_sizes),
        dec_w=dec_w,
        dec_b=tuple(np.zeros(o) for o, _ in dec_sizes),
    )


# ---------------------------------------------------------------------------
# forward / scoring


def _check_width(params: ModelParams, x: np.ndarray) -> None:
    if x.shape[-1] != params.dims.d:
        raise DimensionError(f"input width {x.shape[-1]} != model d={params.dims.d}")


def _forward_batch(params: ModelParams, x: np.ndarray):
    """Returns (x_hat, acts) where acts holds every intermediate activation.

    acts = (alpha, x_star, enc_outs, dec_outs); enc_outs[-1] is the latent z,
    dec_outs[-1] is x_hat.
    """
    alpha = _logistic(x @ params.attn_w.T + params.attn_b)
    x_star = x * alpha
    enc_outs = []
    h = x_star
    for w, b in zip(params.enc_w, params.enc_b):
        h = np.tanh(h @ w.T + b)
        enc_outs.append(h)
    dec_outs = []
    last = len(params.dec_w) - 1
    for i, (w, b) in enumerate(zip(params.dec_w, params.dec_b)):
        pre = h @ w.T + b
        h = _logistic(pre) if i == last else np.tanh(pre)
        dec_outs.append(h)
    return h, (alpha, x_star, enc_outs, dec_outs)


def attention(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Gate vector alpha(x) in (0,1)^d for one input row."""
    x = np.asarray(x, dtype=np.float64)
    _check_width(params, x)
    return _logistic(x @ params.attn_w.T + params.attn_b)


def forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One row through gate, encoder and decoder: returns (x_hat, z, alpha)."""
    x = np.asarray(x, dtype=np.float64)
    _check_width(params, x)
    x_hat, (alpha, _, enc_outs, _) = _forward_batch(params, x[None, :])
    return x_hat[0], enc_outs[-1][0], alpha[0]


def reconstruction_error(params: ModelParams, x: np.ndarray) -> float:
    """Squared reconstruction error ||x - x_hat||^2 of one row."""
    x = np.asarray(x, dtype=np.float64)
    _check_width(params, x)
    x_hat, _ = _forward_batch(params, x[None, :])
    diff = x - x_hat[0]
    return float(diff @ diff)


def batch_errors(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Per-row squared reconstruction errors for a (n, d) batch."""
    x = np.asarray(x, dtype=np.float64)
    _check_width(params, x)
    x_hat, _ = _forward_batch(params, x)
    return ((x - x_hat) ** 2).sum(axis=1)


def score_all(params: ModelParams, matrix: BinaryMatrix, ids) -> dict[int, float]:
    """Reconstruction error for each requested row id; order-independent."""
    id_arr = np.fromiter(ids, dtype=np.int64)
    if id_arr.size == 0:
        return {}
    id_arr.sort()
    rows = matrix.to_dense()[id_arr].astype(np.float64)
    errs = batch_errors(params, rows)
    return {int(i): float(e) for i, e in zip(id_arr, errs)}


# ---------------------------------------------------------------------------
# training


def mean_loss(params: ModelParams, x: np.ndarray) -> float:
    """Mean squared reconstruction error over a (n, d) batch."""
    return float(batch_errors(params, x).mean())


def _gradients(params: ModelParams, x: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss over the batch and its gradient for every parameter array.

    Backpropagates through decoder, encoder and the attention gate:
    the logistic output layer contributes x_hat(1-x_hat), tanh layers (1-a^2),
    and the gate path picks up d(x*)/d(alpha) = x.
    """
    n = x.shape[0]
    x_hat, (alpha, x_star, enc_outs, dec_outs) = _forward_batch(params, x)
    diff = x_hat - x
    loss = float((diff**2).sum() / n)

    grads: dict[str, np.ndarray] = {}
    # decoder, last layer is logistic
    delta = (2.0 / n) * diff * x_hat * (1.0 - x_hat)
    for i in range(len(params.dec_w) - 1, -1, -1):
        layer_in = dec_outs[i - 1] if i > 0 else enc_outs[-1]
        grads[f"dec_w{i}"] = delta.T @ layer_in
        grads[f"dec_b{i}"] = delta.sum(axis=0)
        delta = delta @ params.dec_w[i]
        if i > 0:  # upstream activation is tanh
            delta = delta * (1.0 - layer_in**2)
    # encoder, all tanh
    for i in range(len(params.enc_w) - 1, -1, -1):
        delta = delta * (1.0 - enc_outs[i] ** 2)
        layer_in = enc_outs[i - 1] if i > 0 else x_star
        grads[f"enc_w{i}"] = delta.T @ layer_in
        grads[f"enc_b{i}"] = delta.sum(axis=0)
        delta = delta @ params.enc_w[i]
    # attention gate: x* = x (*) logistic(pre)
    delta_alpha = delta * x
    delta_pre = delta_alpha * alpha * (1.0 - alpha)
    grads["attn_w"] = delta_pre.T @ x
    grads["attn_b"] = delta_pre.sum(axis=0)
    return loss, grads


def gradients(params: ModelParams, x: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Public wrapper of _gradients with input checks."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected (n, d) batch, got ndim={x.ndim}")
    _check_width(params, x)
    return _gradients(params, x)


def train(params: ModelParams, rows: np.ndarray, cfg: TrainConfig) -> ModelParams:
    """Mini-batch gradient descent on the mean reconstruction error.

    Deterministic for a fixed cfg.seed (fixed shuffling sequence); the input
    params are left untouched and updated copies are returned.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ContractError("training needs a nonempty (n, d) row batch")
    _check_width(params, rows)

    arrays = {name: a.copy() for name, a in params.named_arrays()}
    current = _rebuild(params, arrays)  # updates mutate these arrays in place
    rng = np.random.default_rng(cfg.seed)
    n = rows.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = rows[order[start : start + cfg.batch_size]]
            loss, grads = _gradients(current, batch)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            for name in arrays:
                arrays[name] -= cfg.learning_rate * grads[name]
    if not current.all_finite():
        raise TrainingError("non-finite weights after training")
    return current


def _rebuild(template: ModelParams, arrays: dict[str, np.ndarray]) -> ModelParams:
    n_enc = len(template.enc_w)
    n_dec = len(template.dec_w)
    return replace(
        template,
        attn_w=arrays["attn_w"],
        attn_b=arrays["attn_b"],
        enc_w=tuple(arrays[f"enc_w{i}"] for i in range(n_enc)),
        enc_b=tuple(arrays[f"enc_b{i}"] for i in range(n_enc)),
        dec_w=tuple(arrays[f"dec_w{i}"] for i in range(n_dec)),
        dec_b=tuple(arrays[f"dec_b{i}"] for i in range(n_dec)),
    )


# ---------------------------------------------------------------------------
# checkpointing


def save_checkpoint(params: ModelParams, path: str) -> None:
    """Write a versioned .npz holding dims, init seed and all weight arrays."""
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "d": params.dims.d,
        "k": params.dims.k,
        "hidden": -1 if params.dims.hidden is None else params.dims.hidden,
        "seed": params.seed,
    }
    np.savez(path, **{k: np.asarray(v) for k, v in meta.items()}, **dict(params.named_arrays()))


def load_checkpoint(path: str) -> ModelParams:
    """Inverse of save_checkpoint; round-trips bit-exactly."""
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        hidden = int(data["hidden"])
        dims = ModelDims(int(data["d"]), int(data["k"]), None if hidden < 0 else hidden)
        n_layers = 1 if dims.hidden is None else 2
        return ModelParams(
            dims=dims,
            seed=int(data["seed"]),
            attn_w=data["attn_w"],
            attn_b=data["attn_b"],
            enc_w=tuple(data[f"enc_w{i}"] for i in range(n_layers)),
            enc_b=tuple(data[f"enc_b{i}"] for i in range(n_layers)),
            dec_w=tuple(data[f"dec_w{i}"] for i in range(n_layers)),
            dec_b=tuple(data[f"dec_b{i}"] for i in range(n_layers)),
        )
