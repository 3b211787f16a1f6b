"""Forward surrogates: one regressor per performance label, used for fast
validation of generated designs and for pseudo-labeling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import checkpoint, nn
from .config import NetTrainParams
from .dataset import LabeledDataset, NormStats, fit_norm
from .geometry import DesignVector
from .hydro import LABEL_FIELDS, LabelVector

DEFAULT_VALIDITY_TOL = 0.02  # relative error per targeted label


@dataclass
class SurrogateSet:
    models: dict           # label name -> MlpModel (6 -> 1)
    norm: NormStats
    params: NetTrainParams | None = None

    def __post_init__(self):
        missing = [l for l in LABEL_FIELDS if l not in self.models]
        if missing:
            raise ValueError(f"surrogate set is missing models for {missing}")


def train_surrogates(train: LabeledDataset, params: NetTrainParams, seed: int = 0,
                     norm: NormStats | None = None) -> SurrogateSet:
    """Train the three label regressors on normalized designs/labels."""
    if len(train) == 0:
        raise ValueError("training dataset must be non-empty")
    norm = fit_norm(train) if norm is None else norm
    x = norm.normalize_designs(train.design_matrix())
    y = norm.normalize_labels(train.label_matrix())
    seeds = np.random.default_rng(seed).integers(2**31, size=(len(LABEL_FIELDS), 2))
    schedule = nn.TrainSchedule(
        epochs=params.epochs, batch_size=params.batch_size,
        lr_initial=params.lr_initial, lr_drop_epoch=params.lr_drop_epoch,
        lr_drop_factor=params.lr_drop_factor,
    )
    models = {}
    histories = {}
    for k, label in enumerate(LABEL_FIELDS):
        cfg = nn.MlpConfig(6, 1, params.hidden_layers, params.hidden_width,
                           seed=int(seeds[k, 0]))
        model = nn.init_model(cfg)
        histories[label] = nn.train(model, x, y[:, k:k + 1], schedule,
                                    seed=int(seeds[k, 1]))
        models[label] = model
    out = SurrogateSet(models=models, norm=norm, params=params)
    out.loss_histories = histories
    return out


def predict_matrix(surrogates: SurrogateSet, designs) -> np.ndarray:
    """Raw label predictions (no clamping) for a (n, 6) design matrix."""
    x = surrogates.norm.normalize_designs(np.atleast_2d(np.asarray(designs, dtype=float)))
    z = np.column_stack([
        nn.forward(surrogates.models[label], x)[:, 0] for label in LABEL_FIELDS
    ])
    return surrogates.norm.denormalize_labels(z)


def predict_labels(surrogates: SurrogateSet, design: DesignVector) -> LabelVector:
    return LabelVector.from_array(predict_matrix(surrogates, design.to_array()[None, :])[0])


def mre(targets, predictions) -> float:
    """Mean relative error: mean of |t - p| / |t|."""
    t = np.asarray(targets, dtype=float)
    p = np.asarray(predictions, dtype=float)
    if t.shape != p.shape or t.size == 0:
        raise ValueError(f"targets and predictions must match and be non-empty, "
                         f"got {t.shape} vs {p.shape}")
    if np.any(t == 0):
        raise ValueError("mre is undefined for zero targets")
    return float(np.mean(np.abs(t - p) / np.abs(t)))


def validate_designs(surrogates: SurrogateSet, designs, targets: dict,
                     tol: float = DEFAULT_VALIDITY_TOL) -> np.ndarray:
    """Per-design validity: every targeted label predicted within tol
    relative error.  Labels absent from `targets` are free and ignored."""
    names = [name for name, value in targets.items() if value is not None]
    unknown = [n for n in names if n not in LABEL_FIELDS]
    if unknown:
        raise ValueError(f"unknown label names {unknown}; expected {LABEL_FIELDS}")
    if not names:
        raise ValueError("at least one label must be targeted")
    if isinstance(designs, (list, tuple)):
        designs = np.array([d.to_array() for d in designs])
    predicted = predict_matrix(surrogates, designs)
    ok = np.ones(len(predicted), dtype=bool)
    for name in names:
        k = LABEL_FIELDS.index(name)
        target = float(targets[name])
        if target == 0:
            raise ValueError(f"target for {name} must be nonzero")
        ok &= np.abs(predicted[:, k] - target) / abs(target) <= tol
    return ok


def save_surrogates(surrogates: SurrogateSet, path):
    arrays = {}
    configs = {}
    for label in LABEL_FIELDS:
        model = surrogates.models[label]
        configs[label] = {
            "input_dim": model.config.input_dim,
            "output_dim": model.config.output_dim,
            "hidden_layers": model.config.hidden_layers,
            "hidden_width": model.config.hidden_width,
            "seed": model.config.seed,
        }
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            arrays[f"{label}/w{i}"] = w
            arrays[f"{label}/b{i}"] = b
    header = {
        "kind": "surrogate-set",
        "configs": configs,
        "norm": surrogates.norm.to_dict(),
        "train_params": surrogates.params.to_dict() if surrogates.params else None,
    }
    checkpoint.save(path, header, arrays)


def load_surrogates(path) -> SurrogateSet:
    header, arrays = checkpoint.load(path)
    if header.get("kind") != "surrogate-set":
        raise ValueError(f"{path}: not a surrogate checkpoint")
    models = {}
    for label in LABEL_FIELDS:
        cfg = nn.MlpConfig(**header["configs"][label])
        model = nn.MlpModel(config=cfg)
        for i in range(cfg.hidden_layers + 1):
            model.weights.append(arrays[f"{label}/w{i}"])
            model.biases.append(arrays[f"{label}/b{i}"])
        models[label] = model
    params = header.get("train_params")
    return SurrogateSet(
        models=models,
        norm=NormStats.from_dict(header["norm"]),
        params=NetTrainParams.from_dict(params) if params else None,
    )
