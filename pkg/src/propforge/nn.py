"""Minimal dense-network engine: affine/ReLU stacks, mean-squared-error
training with reverse-mode gradients, Adam updates and a one-step learning
rate schedule.  Everything is plain numpy and deterministic under a seed."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    output_dim: int
    hidden_layers: int
    hidden_width: int
    seed: int = 0

    def __post_init__(self):
        for name in ("input_dim", "output_dim", "hidden_layers", "hidden_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    def layer_dims(self):
        return ([self.input_dim]
                + [self.hidden_width] * self.hidden_layers
                + [self.output_dim])


@dataclass(frozen=True)
class TrainSchedule:
    epochs: int
    batch_size: int
    lr_initial: float = 1e-3
    lr_drop_epoch: int | None = None   # None: drop at epochs // 2
    lr_drop_factor: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr_initial <= 0:
            raise ValueError("epochs, batch_size and lr_initial must be positive")
        if self.lr_drop_epoch is not None and self.lr_drop_epoch > self.epochs:
            raise ValueError("lr_drop_epoch must not exceed epochs")

    def lr_at(self, epoch: int) -> float:
        drop = self.epochs // 2 if self.lr_drop_epoch is None else self.lr_drop_epoch
        return self.lr_initial * (self.lr_drop_factor if epoch >= drop else 1.0)


@dataclass
class MlpModel:
    config: MlpConfig
    weights: list = field(default_factory=list)  # (fan_in, fan_out) per layer
    biases: list = field(default_factory=list)   # (fan_out,) per layer

    def parameters(self):
        return self.weights + self.biases

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


def init_model(config: MlpConfig) -> MlpModel:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims()
    model = MlpModel(config=config)
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        model.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        model.biases.append(np.zeros(fan_out))
    return model


def forward(model: MlpModel, x) -> np.ndarray:
    """Affine/ReLU stack with an identity output layer.

    Accepts a single input vector or a (batch, input_dim) matrix.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != model.config.input_dim:
        raise ValueError(
            f"input dim mismatch: expected {model.config.input_dim}, got {h.shape[1]}"
        )
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h[0] if single else h


def backward(model: MlpModel, inputs, targets):
    """Mean-squared-error loss and its gradients for a batch.

    Loss is the mean of squared errors over batch and output dimensions.
    Returns (loss, grads) with grads as (weight_grads, bias_grads) lists
    matching the model layout.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if x.shape[1] != model.config.input_dim or t.shape[1] != model.config.output_dim:
        raise ValueError(
            f"shape mismatch: inputs {x.shape}, targets {t.shape} for config "
            f"{model.config.input_dim}->{model.config.output_dim}"
        )
    if x.shape[0] != t.shape[0]:
        raise ValueError("inputs and targets must have the same batch size")

    last = len(model.weights) - 1
    activations = [x]
    pre = []
    h = x
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        activations.append(h)

    diff = activations[-1] - t
    loss = float(np.mean(diff**2))
    delta = 2.0 * diff / diff.size

    weight_grads = [None] * len(model.weights)
    bias_grads = [None] * len(model.biases)
    for i in range(last, -1, -1):
        weight_grads[i] = activations[i].T @ delta
        bias_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (pre[i - 1] > 0)
    return loss, (weight_grads, bias_grads)


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def adam_init(model: MlpModel) -> AdamState:
    params = model.parameters()
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: list, grads: list, lr: float):
    """Bias-corrected Adam update, in place on params and state."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and state must have matching layouts")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g**2
        p -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)


def train(model: MlpModel, inputs, targets, schedule: TrainSchedule, seed: int,
          batch_hook=None) -> list:
    """Mini-batch MSE training; returns the per-epoch mean loss history.

    Batches are reshuffled every epoch; the final partial batch is kept.
    Fully deterministic given (model init, data, schedule, seed).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    n = x.shape[0]
    if n == 0:
        raise ValueError("training dataset must be non-empty")
    rng = np.random.default_rng(seed)
    state = adam_init(model)
    params = model.parameters()
    batch = min(schedule.batch_size, n)
    history = []
    for epoch in range(schedule.epochs):
        lr = schedule.lr_at(epoch)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            if batch_hook is not None:
                loss, grads = batch_hook(model, x[idx], t[idx], rng)
            else:
                loss, grads = backward(model, x[idx], t[idx])
            adam_step(state, params, grads[0] + grads[1], lr)
            total += loss * len(idx)
        history.append(total / n)
    return history


def grad_check(model: MlpModel, x, t, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    _, grads = backward(model, x, t)
    analytic = grads[0] + grads[1]
    worst = 0.0
    for p, g in zip(model.parameters(), analytic):
        flat = p.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up, _ = backward(model, x, t)
            flat[k] = orig - h
            down, _ = backward(model, x, t)
            flat[k] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(numeric), abs(g.reshape(-1)[k]), 1e-6)
            worst = max(worst, abs(numeric - g.reshape(-1)[k]) / denom)
    return worst
