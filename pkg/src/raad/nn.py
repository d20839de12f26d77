"""Minimal dense-network substrate: forward pass, reverse-mode gradients, AdamW.

Only the fixed feed-forward topology used by the denoiser is differentiated.
Everything is plain numpy; models carry their own dtype so the same code runs
in float32 for training and float64 for gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, TrainingError

ACTIVATIONS = ("linear", "relu", "silu", "tanh")


def _sigmoid(z):
    # split by sign to stay overflow-free in both tails
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activation_forward(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "linear":
        return z
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "silu":
        return z * _sigmoid(z)
    if tag == "tanh":
        return np.tanh(z)
    raise ConfigError(f"unknown activation {tag!r}")


def activation_grad(tag: str, z: np.ndarray) -> np.ndarray:
    """d activation / d z, evaluated elementwise at z."""
    if tag == "linear":
        return np.ones_like(z)
    if tag == "relu":
        return (z > 0).astype(z.dtype)
    if tag == "silu":
        s = _sigmoid(z)
        return s * (1.0 + z * (1.0 - s))
    if tag == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    raise ConfigError(f"unknown activation {tag!r}")


@dataclass
class DenseLayer:
    """One affine layer: y = activation(w @ x + b), weight shape (out, in)."""

    w: np.ndarray
    b: np.ndarray
    activation: str = "linear"


class Mlp:
    """A feed-forward stack of DenseLayers with chained dimensions."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ConfigError("Mlp needs at least one layer")
        for i, layer in enumerate(layers):
            if layer.activation not in ACTIVATIONS:
                raise ConfigError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.w.ndim != 2 or layer.b.ndim != 1:
                raise DimensionError(f"layer {i}: weight must be 2-d and bias 1-d")
            if layer.w.shape[0] != layer.b.shape[0]:
                raise DimensionError(
                    f"layer {i}: weight rows {layer.w.shape[0]} != bias size {layer.b.shape[0]}"
                )
            if i > 0 and layer.w.shape[1] != layers[i - 1].w.shape[0]:
                raise DimensionError(
                    f"layer {i}: input dim {layer.w.shape[1]} does not chain with "
                    f"previous output dim {layers[i - 1].w.shape[0]}"
                )
            if not (np.isfinite(layer.w).all() and np.isfinite(layer.b).all()):
                raise ConfigError(f"layer {i}: non-finite parameters")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].w.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].w.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].w.dtype

    def astype(self, dtype) -> "Mlp":
        return Mlp(
            [
                DenseLayer(l.w.astype(dtype), l.b.astype(dtype), l.activation)
                for l in self.layers
            ]
        )

    def copy(self) -> "Mlp":
        return self.astype(self.dtype)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, layer order, weight before bias."""
        out = []
        for layer in self.layers:
            out.append(layer.w)
            out.append(layer.b)
        return out

    def parameter_names(self) -> list[str]:
        out = []
        for i in range(len(self.layers)):
            out.append(f"layers[{i}].w")
            out.append(f"layers[{i}].b")
        return out

    def with_parameters(self, params: list[np.ndarray]) -> "Mlp":
        """Rebuild the model from a flat parameter list (inverse of parameters)."""
        if len(params) != 2 * len(self.layers):
            raise DimensionError("parameter list length does not match layer count")
        layers = []
        for i, layer in enumerate(self.layers):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != layer.w.shape or b.shape != layer.b.shape:
                raise DimensionError(f"layer {i}: parameter shape mismatch")
            layers.append(DenseLayer(w, b, layer.activation))
        return Mlp(layers)


def mlp_init(
    dims: list[int],
    activations: list[str],
    rng: np.random.Generator,
    dtype=np.float32,
) -> Mlp:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero.

    dims = [in, h1, ..., out]; activations has one tag per layer.
    """
    if len(dims) < 2:
        raise ConfigError("dims needs at least an input and an output size")
    if len(activations) != len(dims) - 1:
        raise ConfigError("need one activation per layer")
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        if fan_in < 1 or fan_out < 1:
            raise ConfigError("layer sizes must be positive")
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype)
        b = np.zeros(fan_out, dtype=dtype)
        layers.append(DenseLayer(w, b, act))
    return Mlp(layers)


def _as_batch(x: np.ndarray, dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"{what}: expected vectors of dim {dim}, got shape {x.shape}")
    return x, single


def mlp_forward(model: Mlp, x: np.ndarray) -> np.ndarray:
    """Evaluate the network. Accepts a single vector or a (n, dim) batch."""
    xb, single = _as_batch(x, model.input_dim, "mlp_forward")
    if not np.isfinite(xb).all():
        raise ConfigError("mlp_forward: non-finite input")
    a = xb.astype(model.dtype, copy=False)
    for layer in model.layers:
        z = a @ layer.w.T + layer.b
        a = activation_forward(layer.activation, z)
    return a[0] if single else a


def _forward_cached(model: Mlp, xb: np.ndarray):
    """Forward over a batch, keeping pre-activations for the backward pass."""
    a = xb
    inputs, preacts = [], []
    for layer in model.layers:
        inputs.append(a)
        z = a @ layer.w.T + layer.b
        preacts.append(z)
        a = activation_forward(layer.activation, z)
    return a, inputs, preacts


def mlp_backward(
    model: Mlp, x: np.ndarray, upstream_grad: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients of <upstream_grad, mlp_forward(x)> w.r.t. parameters and x.

    For batched inputs the batch rows are summed, i.e. the result is the
    gradient of sum_i <upstream_grad[i], forward(x[i])>.

    Returns (param_grads, input_grad) with param_grads matching
    model.parameters() order.
    """
    xb, single = _as_batch(x, model.input_dim, "mlp_backward input")
    gb, gsingle = _as_batch(upstream_grad, model.output_dim, "mlp_backward upstream")
    if single != gsingle or xb.shape[0] != gb.shape[0]:
        raise DimensionError("mlp_backward: input and upstream batch shapes disagree")
    xb = xb.astype(model.dtype, copy=False)
    gb = gb.astype(model.dtype, copy=False)

    _, inputs, preacts = _forward_cached(model, xb)
    grads: list[np.ndarray] = [None] * (2 * len(model.layers))
    delta = gb
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        delta = delta * activation_grad(layer.activation, preacts[i])
        grads[2 * i] = delta.T @ inputs[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ layer.w
    dx = delta[0] if single else delta
    return grads, dx


@dataclass
class OptimizerState:
    """AdamW accumulator state; one moment buffer per parameter tensor."""

    step_count: int
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01


def adamw_init(
    params: list[np.ndarray],
    learning_rate: float = 2e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
    weight_decay: float = 0.01,
) -> OptimizerState:
    if learning_rate <= 0:
        raise ConfigError("learning_rate must be positive")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ConfigError("betas must lie in [0, 1)")
    return OptimizerState(
        step_count=0,
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        weight_decay=weight_decay,
    )


def adamw_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: OptimizerState,
    names: list[str] | None = None,
    learning_rate: float | None = None,
) -> tuple[list[np.ndarray], OptimizerState]:
    """One decoupled-weight-decay adaptive update.

    Weight decay is applied to the parameters directly, not folded into the
    gradient. Returns fresh parameter arrays and the advanced state;
    `learning_rate` overrides the state's rate for this step (schedules).
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise DimensionError("adamw_step: params/grads/state lengths disagree")
    lr = state.learning_rate if learning_rate is None else learning_rate
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    new_params, new_m, new_v = [], [], []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionError(f"adamw_step: shape mismatch for parameter {i}")
        if not np.isfinite(g).all():
            name = names[i] if names else f"parameter {i}"
            raise TrainingError(f"non-finite gradient for {name}")
        m = b1 * state.first_moment[i] + (1.0 - b1) * g
        v = b2 * state.second_moment[i] + (1.0 - b2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p_new = p - lr * state.weight_decay * p
        p_new = p_new - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        new_params.append(p_new.astype(p.dtype, copy=False))
        new_m.append(m.astype(p.dtype, copy=False))
        new_v.append(v.astype(p.dtype, copy=False))
    new_state = OptimizerState(
        step_count=t,
        first_moment=new_m,
        second_moment=new_v,
        learning_rate=state.learning_rate,
        beta1=b1,
        beta2=b2,
        epsilon=state.epsilon,
        weight_decay=state.weight_decay,
    )
    return new_params, new_state
