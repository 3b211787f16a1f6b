"""Run profiles, storage locations and the key/value config file format.

Two named profiles freeze every hyperparameter: "paper" is the full-scale
setup (hours of CPU time), "desk" is a reduced setup sized so the complete
workflow runs on a laptop.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

DATA_DIR_ENV = "PROPFORGE_DATA_DIR"


@dataclass(frozen=True)
class NetTrainParams:
    hidden_layers: int
    hidden_width: int
    epochs: int
    batch_size: int
    lr_initial: float = 1e-3
    lr_drop_epoch: int | None = None  # None: drop at half the epochs
    lr_drop_factor: float = 0.1

    def to_dict(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "hidden_width": self.hidden_width,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr_initial": self.lr_initial,
            "lr_drop_epoch": self.lr_drop_epoch,
            "lr_drop_factor": self.lr_drop_factor,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetTrainParams":
        return cls(**data)


@dataclass(frozen=True)
class Profile:
    name: str
    dataset_n: int
    train_size: int
    surrogate: NetTrainParams
    cfm: NetTrainParams
    flow_steps: int
    aug_sizes: tuple
    restricted_sizes: tuple
    diversity_n: int


PROFILES = {
    "paper": Profile(
        name="paper",
        dataset_n=3000,
        train_size=2000,
        surrogate=NetTrainParams(hidden_layers=6, hidden_width=500,
                                 epochs=500, batch_size=500, lr_drop_epoch=250),
        cfm=NetTrainParams(hidden_layers=8, hidden_width=500,
                           epochs=10000, batch_size=500, lr_drop_epoch=5000),
        flow_steps=100,
        aug_sizes=(10_000, 100_000),
        restricted_sizes=(100, 200, 300, 400, 500, 1000, 1500, 2000),
        diversity_n=1000,
    ),
    "desk": Profile(
        name="desk",
        dataset_n=700,
        train_size=500,
        surrogate=NetTrainParams(hidden_layers=3, hidden_width=64,
                                 epochs=400, batch_size=128),
        cfm=NetTrainParams(hidden_layers=6, hidden_width=128,
                           epochs=1500, batch_size=128),
        flow_steps=100,
        aug_sizes=(2000,),
        restricted_sizes=(50, 100, 200),
        diversity_n=200,
    ),
}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")


def data_dir(override=None) -> Path:
    """Storage root: explicit override, else $PROPFORGE_DATA_DIR, else ./data."""
    if override:
        return Path(override)
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def parse_config_text(text: str) -> dict:
    """Parse a flat key = value config (comments with '#', comma lists).

    Values become int, float, bool or str; comma-separated values become
    lists.  Dotted keys like "range.P" stay flat.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        out[key] = _parse_value(value)
    return out


def _parse_value(text: str):
    if "," in text:
        return [_parse_value(part.strip()) for part in text.split(",")]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip("\"'")


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())
