"""Preconditioned denoiser, its training objective, and checkpoint I/O.

The denoiser is

    D(x, sigma) = c_skip(sigma) * x + c_out(sigma) * F([c_in(sigma) * x, c_noise(sigma)])

with F a small encoder-decoder perceptron that sees the noise level as one
extra input coordinate. The coefficients keep F's input and regression
target at unit scale across noise levels:

    c_skip = sd^2 / (sigma^2 + sd^2)        c_out = sigma * sd / sqrt(sigma^2 + sd^2)
    c_in   = 1 / sqrt(sigma^2 + sd^2)       c_noise = ln(sigma) / 4

where sd is the standard deviation of the training features. Training draws
sigma log-normally, corrupts each vector with N(0, sigma^2 I), and regresses
the denoised output onto the clean vector.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import nn
from .errors import ConfigError, DimensionError, FormatError, TrainingError
from .features import FeatureDataset, LABEL_ID

# reverse-process noise range; training sigmas are unbounded log-normal draws
SIGMA_MIN = 0.002
SIGMA_MAX = 80.0

MODEL_MAGIC = b"RDAM"
MODEL_VERSION = 1
_ACT_TO_TAG = {"linear": 0, "relu": 1, "silu": 2, "tanh": 3}
_TAG_TO_ACT = {v: k for k, v in _ACT_TO_TAG.items()}


@dataclass(frozen=True)
class Preconditioning:
    """Coefficient family parameterized by the training-data std."""

    sigma_data: float

    def __post_init__(self):
        if not (self.sigma_data > 0 and np.isfinite(self.sigma_data)):
            raise ConfigError(f"sigma_data must be a positive real, got {self.sigma_data}")


def precondition_coeffs(sigma, precond: Preconditioning):
    """(c_skip, c_out, c_in, c_noise) at noise level sigma (scalar or array)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if not (np.all(sigma > 0) and np.all(np.isfinite(sigma))):
        raise ConfigError("sigma must be positive and finite")
    sd = precond.sigma_data
    total = sigma**2 + sd**2
    c_skip = sd**2 / total
    c_out = sigma * sd / np.sqrt(total)
    c_in = 1.0 / np.sqrt(total)
    c_noise = np.log(sigma) / 4.0
    return c_skip, c_out, c_in, c_noise


@dataclass
class DenoiserParams:
    """Network plus preconditioning; the trained artifact of this module."""

    net: nn.Mlp
    precond: Preconditioning

    def __post_init__(self):
        if self.net.input_dim != self.net.output_dim + 1:
            raise DimensionError(
                f"denoiser net must map dim+1 -> dim, got "
                f"{self.net.input_dim} -> {self.net.output_dim}"
            )

    @property
    def feature_dim(self) -> int:
        return self.net.output_dim


@dataclass(frozen=True)
class NoiseLevelSampler:
    """Log-normal training noise levels: sigma = exp(p_mean + p_std * z)."""

    p_mean: float = -0.05
    p_std: float = 1.5

    def __post_init__(self):
        if self.p_std < 0:
            raise ConfigError("p_std must be non-negative")

    def sample(self, rng: np.random.Generator, n: int | None = None):
        z = rng.standard_normal() if n is None else rng.standard_normal(n)
        return np.exp(self.p_mean + self.p_std * z)


def sample_noise_level(sampler: NoiseLevelSampler, rng: np.random.Generator) -> float:
    return float(sampler.sample(rng))


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 2e-4
    seed: int = 0
    loss_weighting: str = "edm_weighted"  # or "plain_l2"
    hidden_dims: tuple[int, ...] | None = None  # None: (l//2, l//4, l//2)
    activation: str = "silu"
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lr_schedule: str = "constant"  # or "cosine"
    sigma_data: float | None = None  # None: pooled std of the training features
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.loss_weighting not in ("edm_weighted", "plain_l2"):
            raise ConfigError(f"unknown loss_weighting {self.loss_weighting!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.activation not in nn.ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.sigma_data is not None and self.sigma_data <= 0:
            raise ConfigError("sigma_data override must be positive")


def default_dims(feature_dim: int, hidden: tuple[int, ...] | None) -> list[int]:
    if hidden is None:
        hidden = (max(feature_dim // 2, 1), max(feature_dim // 4, 1), max(feature_dim // 2, 1))
    return [feature_dim + 1, *hidden, feature_dim]


def init_denoiser(
    feature_dim: int,
    cfg: TrainConfig,
    rng: np.random.Generator,
    sigma_data: float,
) -> DenoiserParams:
    dims = default_dims(feature_dim, cfg.hidden_dims)
    activations = [cfg.activation] * (len(dims) - 2) + ["linear"]
    net = nn.mlp_init(dims, activations, rng, dtype=np.dtype(cfg.dtype))
    return DenoiserParams(net=net, precond=Preconditioning(sigma_data=sigma_data))


def _net_input(x: np.ndarray, c_in, c_noise, dtype) -> np.ndarray:
    scaled = c_in[:, None] * x
    cond = np.broadcast_to(c_noise, (x.shape[0],))[:, None]
    return np.concatenate([scaled, cond], axis=1).astype(dtype, copy=False)


def denoise(params: DenoiserParams, x_noisy: np.ndarray, sigma) -> np.ndarray:
    """Apply the preconditioned denoiser to one vector or an (n, dim) batch.

    sigma may be a scalar or a per-row array. Deterministic; output dtype is
    float64 (the coefficients are applied in double).
    """
    x = np.asarray(x_noisy)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.feature_dim:
        raise DimensionError(
            f"denoise: expected vectors of dim {params.feature_dim}, got shape {np.shape(x_noisy)}"
        )
    c_skip, c_out, c_in, c_noise = precondition_coeffs(sigma, params.precond)
    c_skip = np.broadcast_to(np.atleast_1d(c_skip), (x.shape[0],))
    c_out = np.broadcast_to(np.atleast_1d(c_out), (x.shape[0],))
    c_in = np.broadcast_to(np.atleast_1d(c_in), (x.shape[0],))
    c_noise = np.broadcast_to(np.atleast_1d(c_noise), (x.shape[0],))
    f = nn.mlp_forward(params.net, _net_input(x, c_in, c_noise, params.net.dtype))
    out = c_skip[:, None] * x + c_out[:, None] * f
    return out[0] if single else out


def _loss_terms(params: DenoiserParams, clean, sigmas, noise, weighting):
    """Loss and per-row upstream gradient w.r.t. the network output.

    clean (n, d), sigmas (n,), noise (n, d) standard-normal draws that get
    scaled by sigma. Returns (loss, net_input, upstream) with upstream sized
    so that summing row gradients yields the batch-mean gradient.
    """
    n = clean.shape[0]
    eps = sigmas[:, None] * noise
    x = clean + eps
    c_skip, c_out, c_in, c_noise = precondition_coeffs(sigmas, params.precond)
    u = _net_input(x, c_in, c_noise, params.net.dtype)
    f = nn.mlp_forward(params.net, u)
    d = c_skip[:, None] * x + c_out[:, None] * f
    r = d - clean
    if weighting == "edm_weighted":
        sd = params.precond.sigma_data
        lam = (sigmas**2 + sd**2) / (sigmas * sd) ** 2
        terms = lam * np.sum(r * r, axis=1)
        upstream = (2.0 / n) * (lam * c_out)[:, None] * r
    else:  # plain_l2: unsquared norm, unit weight
        norms = np.sqrt(np.sum(r * r, axis=1))
        terms = norms
        safe = np.maximum(norms, np.finfo(np.float64).tiny)
        upstream = (1.0 / n) * (c_out / safe)[:, None] * r
    loss = float(np.mean(terms))
    if not np.isfinite(loss):
        bad = int(np.flatnonzero(~np.isfinite(terms))[0])
        raise TrainingError(
            f"non-finite loss term for batch row {bad} (sigma={sigmas[bad]:.6g})"
        )
    return loss, u, upstream


def training_loss(
    params: DenoiserParams,
    batch: np.ndarray,
    sampler: NoiseLevelSampler,
    rng: np.random.Generator,
    weighting: str = "edm_weighted",
) -> tuple[float, list[np.ndarray]]:
    """Denoising loss over a batch plus gradients for every network parameter.

    Per sample: draw sigma from the sampler and a Gaussian corruption of that
    std, denoise, and penalize the deviation from the clean vector
    (squared and sigma-weighted in edm_weighted mode, plain L2 norm otherwise).
    """
    batch = np.asarray(batch)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise DimensionError("training_loss: batch must be a non-empty (n, dim) array")
    if batch.shape[1] != params.feature_dim:
        raise DimensionError(
            f"training_loss: batch dim {batch.shape[1]} != model dim {params.feature_dim}"
        )
    sigmas = np.asarray(sampler.sample(rng, batch.shape[0]), dtype=np.float64)
    noise = rng.standard_normal(batch.shape)
    loss, u, upstream = _loss_terms(params, batch, sigmas, noise, weighting)
    grads, _ = nn.mlp_backward(params.net, u, upstream)
    return loss, grads


def pooled_std(features: np.ndarray) -> float:
    """Per-coordinate population variances, averaged, square-rooted."""
    var = np.var(np.asarray(features, dtype=np.float64), axis=0)
    return float(np.sqrt(np.mean(var)))


def train(
    dataset: FeatureDataset,
    cfg: TrainConfig,
    sampler: NoiseLevelSampler | None = None,
    on_epoch=None,
) -> tuple[DenoiserParams, list[float]]:
    """Fit the denoiser on an ID-only training split.

    Fully seeded: identical dataset, config and sampler give bit-identical
    parameters. Returns the trained params and the per-epoch mean losses;
    on_epoch(epoch_index, mean_loss) fires after each epoch.
    """
    if dataset.split != "train":
        raise ConfigError(f"train expects the train split, got {dataset.split!r}")
    if dataset.n == 0:
        raise ConfigError("train: dataset is empty")
    if dataset.labels is not None and not np.all(dataset.labels == LABEL_ID):
        raise ConfigError("train: training split must contain only ID-labeled vectors")
    sampler = sampler or NoiseLevelSampler()

    if cfg.sigma_data is not None:
        sigma_data = float(cfg.sigma_data)
    else:
        sigma_data = pooled_std(dataset.features)
        if not sigma_data > 0:
            raise TrainingError("training features are constant; sigma_data would be 0")
        # keep the in-memory value identical to what the checkpoint stores
        sigma_data = float(np.float32(sigma_data))

    rng = np.random.default_rng(cfg.seed)
    params = init_denoiser(dataset.dim, cfg, rng, sigma_data)
    flat = params.net.parameters()
    names = params.net.parameter_names()
    state = nn.adamw_init(
        flat,
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        weight_decay=cfg.weight_decay,
    )
    data = dataset.features.astype(np.dtype(cfg.dtype), copy=False)
    n = data.shape[0]
    n_batches = (n + cfg.batch_size - 1) // cfg.batch_size
    total_steps = max(cfg.epochs * n_batches, 1)
    history: list[float] = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for b in range(n_batches):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            batch = data[idx]
            try:
                loss, grads = training_loss(params, batch, sampler, rng, cfg.loss_weighting)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch} batch {b}: {exc}") from None
            if cfg.lr_schedule == "cosine":
                lr = cfg.learning_rate * 0.5 * (1.0 + np.cos(np.pi * step / total_steps))
            else:
                lr = None
            try:
                flat, state = nn.adamw_step(flat, grads, state, names=names, learning_rate=lr)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch} batch {b}: {exc}") from None
            params = replace(params, net=params.net.with_parameters(flat))
            loss_sum += loss * len(idx)
            step += 1
        mean_loss = loss_sum / n
        history.append(mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
    return params, history


def save_model(params: DenoiserParams, destination) -> int:
    """Write a checkpoint; returns the number of bytes written."""
    blob = MODEL_MAGIC + struct.pack(
        "<III", MODEL_VERSION, params.feature_dim, len(params.net.layers)
    )
    for layer in params.net.layers:
        rows, cols = layer.w.shape
        blob += struct.pack("<IIB", rows, cols, _ACT_TO_TAG[layer.activation])
        blob += np.ascontiguousarray(layer.w, dtype="<f4").tobytes()
        blob += np.ascontiguousarray(layer.b, dtype="<f4").tobytes()
    blob += struct.pack("<f", params.precond.sigma_data)
    Path(destination).write_bytes(blob)
    return len(blob)


def load_model(source) -> DenoiserParams:
    path = Path(source)
    blob = path.read_bytes()
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated checkpoint header")
    if blob[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: magic mismatch, expected {MODEL_MAGIC!r}, got {blob[:4]!r}")
    version, feature_dim, layer_count = struct.unpack("<III", blob[4:16])
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    offset = 16
    layers = []
    for i in range(layer_count):
        if offset + 9 > len(blob):
            raise FormatError(f"{path}: truncated at layer {i} header")
        rows, cols, tag = struct.unpack("<IIB", blob[offset : offset + 9])
        offset += 9
        if tag not in _TAG_TO_ACT:
            raise FormatError(f"{path}: layer {i} has unknown activation tag {tag}")
        need = (rows * cols + rows) * 4
        if offset + need > len(blob):
            raise FormatError(f"{path}: truncated at layer {i} parameters")
        w = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=offset)
        offset += rows * cols * 4
        b = np.frombuffer(blob, dtype="<f4", count=rows, offset=offset)
        offset += rows * 4
        layers.append(
            nn.DenseLayer(
                w.reshape(rows, cols).astype(np.float32),
                b.astype(np.float32),
                _TAG_TO_ACT[tag],
            )
        )
    if offset + 4 > len(blob):
        raise FormatError(f"{path}: missing sigma_data")
    (sigma_data,) = struct.unpack("<f", blob[offset : offset + 4])
    offset += 4
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
    try:
        net = nn.Mlp(layers)
        params = DenoiserParams(net=net, precond=Preconditioning(sigma_data=float(sigma_data)))
    except (ConfigError, DimensionError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if params.feature_dim != feature_dim:
        raise FormatError(
            f"{path}: header declares feature dim {feature_dim}, layers give {params.feature_dim}"
        )
    return params
