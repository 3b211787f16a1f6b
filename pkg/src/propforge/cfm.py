"""Conditional flow matching engine.

A label-conditioned vector field is regressed onto per-sample straight-line
displacement targets; generation integrates the learned field from Gaussian
noise to a design vector with fixed-step RK4.  The field network takes the
concatenation (state, time, normalized labels) as input.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint, nn
from .config import NetTrainParams
from .dataset import LabeledDataset, NormStats, fit_norm
from .geometry import BLADE_COUNTS, DesignVector, _CONTINUOUS_RANGES
from .hydro import LABEL_FIELDS

DESIGN_DIM = 6
LABEL_DIM = 3
FIELD_INPUT_DIM = DESIGN_DIM + 1 + LABEL_DIM

DEFAULT_FLOW_STEPS = 100
CLAMP_EPS = 1e-6


class FlowIntegrationError(RuntimeError):
    """Raised when the flow state stops being finite during integration."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite flow state at integration step {step}")


@dataclass(frozen=True)
class TargetSpec:
    """Per-label generation targets; unset labels are free."""

    eta_star: float | None = None
    j_star: float | None = None
    kt_star: float | None = None

    def __post_init__(self):
        if all(getattr(self, name) is None for name in LABEL_FIELDS):
            raise ValueError("at least one target label must be set")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in LABEL_FIELDS
                if getattr(self, name) is not None}

    def targeted_indices(self):
        return [k for k, name in enumerate(LABEL_FIELDS)
                if getattr(self, name) is not None]


@dataclass
class CfmModel:
    net: nn.MlpModel           # (design + time + labels) -> displacement field
    norm: NormStats
    label_min: np.ndarray      # raw-label training envelope, shape (3,)
    label_max: np.ndarray
    params: NetTrainParams | None = None
    loss_history: list = field(default_factory=list)

    def field_at(self, x, t, labels):
        """Vector field evaluated on a (n, 6) state batch at scalar time t."""
        x = np.atleast_2d(x)
        cols = np.column_stack([x, np.full(len(x), t), np.atleast_2d(labels)])
        return nn.forward(self.net, cols)


@dataclass
class GenerationReport:
    designs: list                   # DesignVector per sample
    clamped_flags: np.ndarray       # (n, 6) bool, per design dimension
    sampled_conditions: np.ndarray  # (n, 3) raw label vectors actually used
    spec: TargetSpec | None = None
    seed: int | None = None

    def to_csv(self) -> str:
        header = ("n_blades,P,w_rp,w_c,w_rc,camber,"
                  "cond_eta_star,cond_j_star,cond_kt_star,clamped_dims")
        from .geometry import DESIGN_FIELDS
        lines = [header]
        for design, flags, cond in zip(self.designs, self.clamped_flags,
                                       self.sampled_conditions):
            clamped = "|".join(name for name, f in zip(DESIGN_FIELDS, flags) if f)
            lines.append(",".join(
                [str(design.n_blades), repr(design.P), repr(design.w_rp),
                 repr(design.w_c), repr(design.w_rc), repr(design.camber)]
                + [repr(float(v)) for v in cond] + [clamped]
            ))
        return "\n".join(lines) + "\n"


def path_point(x0, x1, t):
    """Linear interpolation x_t = t*x1 + (1-t)*x0 between noise and data."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    return t * np.asarray(x1, dtype=float) + (1.0 - t) * np.asarray(x0, dtype=float)


def draw_flow_batch(x1, rng):
    """Sample the per-example noise/time pairs for one training batch.

    Returns (x0, t, x_t, u) with x0 ~ N(0, I), t ~ U(0, 1) and the
    straight-line displacement target u = x1 - x0.
    """
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    if len(x1) == 0:
        raise ValueError("batch must be non-empty")
    x0 = rng.standard_normal(x1.shape)
    t = rng.random(len(x1))
    return x0, t, path_point(x0, x1, t), x1 - x0


def flow_match_loss(field, x1, labels, rng) -> float:
    """Regression loss of an arbitrary field callable on one drawn batch:
    the batch mean of the squared displacement-error norm."""
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    x0, t, xt, target = draw_flow_batch(x1, rng)
    predicted = np.stack([
        np.asarray(field(xt[i], float(t[i]), labels[i]), dtype=float)
        for i in range(len(xt))
    ])
    return float(np.mean(np.sum((predicted - target) ** 2, axis=1)))


def cfm_batch_loss(net: nn.MlpModel, x1, labels, rng):
    """Flow-matching regression loss for one batch of normalized designs.

    Per sample: x0 ~ N(0, I), t ~ U(0, 1), state x_t = t*x1 + (1-t)*x0,
    regression target x1 - x0.  Returns (loss, (weight_grads, bias_grads)).
    """
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    _, t, xt, target = draw_flow_batch(x1, rng)
    inputs = np.column_stack([xt, t, labels])
    # Loss is the batch mean of the squared displacement-error norm, i.e. the
    # element-wise MSE scaled by the design dimension.
    loss, (wg, bg) = nn.backward(net, inputs, target)
    scale = float(DESIGN_DIM)
    return loss * scale, ([g * scale for g in wg], [g * scale for g in bg])


def train_cfm(train: LabeledDataset, params: NetTrainParams, seed: int = 0,
              norm: NormStats | None = None) -> CfmModel:
    """Train the conditional field on a labeled dataset.

    Noise and time draws are resampled fresh for every batch of every epoch.
    The learning rate drops once, by default at half the configured epochs.
    """
    if len(train) == 0:
        raise ValueError("training dataset must be non-empty")
    norm = fit_norm(train) if norm is None else norm
    x1 = norm.normalize_designs(train.design_matrix())
    raw_labels = train.label_matrix()
    labels = norm.normalize_labels(raw_labels)
    seeds = np.random.default_rng(seed).integers(2**31, size=2)
    net = nn.init_model(nn.MlpConfig(FIELD_INPUT_DIM, DESIGN_DIM,
                                     params.hidden_layers, params.hidden_width,
                                     seed=int(seeds[0])))
    schedule = nn.TrainSchedule(
        epochs=params.epochs, batch_size=params.batch_size,
        lr_initial=params.lr_initial, lr_drop_epoch=params.lr_drop_epoch,
        lr_drop_factor=params.lr_drop_factor,
    )
    history = nn.train(net, x1, labels, schedule, seed=int(seeds[1]),
                       batch_hook=cfm_batch_loss)
    return CfmModel(
        net=net, norm=norm,
        label_min=raw_labels.min(axis=0), label_max=raw_labels.max(axis=0),
        params=params, loss_history=history,
    )


def integrate_flow(field, x0, labels, steps: int = DEFAULT_FLOW_STEPS) -> np.ndarray:
    """Classic fixed-step RK4 of dx/dt = field(x, t, labels) from t=0 to t=1.

    `field` may be a CfmModel.field_at-style callable or any stub with the
    same signature; x0 is a single point or a (n, 6) batch.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    h = 1.0 / steps
    for step in range(steps):
        t = step * h
        k1 = field(x, t, labels)
        k2 = field(x + 0.5 * h * k1, t + 0.5 * h, labels)
        k3 = field(x + 0.5 * h * k2, t + 0.5 * h, labels)
        k4 = field(x + h * k3, t + h, labels)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FlowIntegrationError(step)
    return x if np.asarray(x0).ndim > 1 else x[0]


def decode_design(x_norm, norm: NormStats):
    """Denormalize a generated point into a valid design vector.

    The blade count is rounded to the nearest admissible value and the
    continuous variables are clamped to their ranges; any adjustment beyond
    CLAMP_EPS is flagged per dimension.
    """
    raw = norm.denormalize_designs(np.asarray(x_norm, dtype=float))
    flags = np.zeros(DESIGN_DIM, dtype=bool)
    blades = int(np.clip(np.rint(raw[0]), BLADE_COUNTS[0], BLADE_COUNTS[-1]))
    flags[0] = abs(raw[0] - blades) > CLAMP_EPS
    values = {}
    for k, (name, (lo, hi)) in enumerate(_CONTINUOUS_RANGES.items(), start=1):
        clipped = float(np.clip(raw[k], lo, hi))
        flags[k] = abs(clipped - raw[k]) > CLAMP_EPS
        values[name] = clipped
    return DesignVector(n_blades=blades, **values), flags


def generate_for_conditions(model: CfmModel, conditions,
                            steps: int = DEFAULT_FLOW_STEPS, rng=None):
    """Generate one design per raw-label condition row.

    Returns (designs, clamp_flags, endpoints) where endpoints are the raw
    normalized flow endpoints before decoding.
    """
    rng = np.random.default_rng(rng)
    conditions = np.atleast_2d(np.asarray(conditions, dtype=float))
    x0 = rng.standard_normal((len(conditions), DESIGN_DIM))
    labels_norm = model.norm.normalize_labels(conditions)
    x1 = integrate_flow(model.field_at, x0, labels_norm, steps=steps)
    designs, flags = [], []
    for row in np.atleast_2d(x1):
        design, flag = decode_design(row, model.norm)
        designs.append(design)
        flags.append(flag)
    return designs, np.array(flags), np.atleast_2d(x1)


def sample_conditions(model: CfmModel, spec: TargetSpec, n: int, rng) -> np.ndarray:
    """Complete the condition rows: free labels are drawn uniformly from the
    training label envelope, targeted labels are held fixed."""
    conditions = rng.uniform(model.label_min, model.label_max, size=(n, LABEL_DIM))
    for k, name in enumerate(LABEL_FIELDS):
        value = getattr(spec, name)
        if value is None:
            continue
        if not (model.label_min[k] <= value <= model.label_max[k]):
            warnings.warn(
                f"target {name}={value} lies outside the training envelope "
                f"[{model.label_min[k]:.4g}, {model.label_max[k]:.4g}]"
            )
        conditions[:, k] = value
    return conditions


def sample_designs(model: CfmModel, spec: TargetSpec, n: int,
                   steps: int = DEFAULT_FLOW_STEPS, seed: int = 0) -> GenerationReport:
    """Draw n designs for a target specification."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    conditions = sample_conditions(model, spec, n, rng)
    try:
        designs, flags, _ = generate_for_conditions(model, conditions, steps, rng)
    except FlowIntegrationError as exc:
        raise FlowIntegrationError(
            exc.step, f"flow integration diverged at step {exc.step} "
            f"while sampling {n} designs") from exc
    return GenerationReport(designs=designs, clamped_flags=flags,
                            sampled_conditions=conditions, spec=spec, seed=seed)


def save_cfm(model: CfmModel, path):
    arrays = {}
    for i, (w, b) in enumerate(zip(model.net.weights, model.net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    arrays["label_min"] = model.label_min
    arrays["label_max"] = model.label_max
    header = {
        "kind": "cfm-model",
        "config": {
            "input_dim": model.net.config.input_dim,
            "output_dim": model.net.config.output_dim,
            "hidden_layers": model.net.config.hidden_layers,
            "hidden_width": model.net.config.hidden_width,
            "seed": model.net.config.seed,
        },
        "norm": model.norm.to_dict(),
        "train_params": model.params.to_dict() if model.params else None,
    }
    checkpoint.save(path, header, arrays)


def load_cfm(path) -> CfmModel:
    header, arrays = checkpoint.load(path)
    if header.get("kind") != "cfm-model":
        raise ValueError(f"{path}: not a cfm checkpoint")
    cfg = nn.MlpConfig(**header["config"])
    net = nn.MlpModel(config=cfg)
    for i in range(cfg.hidden_layers + 1):
        net.weights.append(arrays[f"w{i}"])
        net.biases.append(arrays[f"b{i}"])
    params = header.get("train_params")
    return CfmModel(
        net=net, norm=NormStats.from_dict(header["norm"]),
        label_min=arrays["label_min"], label_max=arrays["label_max"],
        params=NetTrainParams.from_dict(params) if params else None,
    )
