"""Dataset factory: Latin-hypercube design sampling, label generation through
the open-water solver, train/test splitting, z-score normalization and CSV
persistence."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry, hydro
from .geometry import BLADE_COUNTS, DESIGN_FIELDS, DesignVector
from .hydro import LABEL_FIELDS, LabelVector

CSV_HEADER = "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed"

PROVENANCE_TAGS = ("simulated", "pseudo")

DEFAULT_RANGES = {
    "P": geometry.PITCH_RANGE,
    "w_rp": geometry.PITCH_POS_RANGE,
    "w_c": geometry.CHORD_RANGE,
    "w_rc": geometry.CHORD_POS_RANGE,
    "camber": geometry.CAMBER_RANGE,
}


class DatasetFormatError(ValueError):
    """Malformed dataset file (bad header, unparseable or invalid row)."""


@dataclass(frozen=True)
class DesignRecord:
    design: DesignVector
    labels: LabelVector
    provenance: str = "simulated"


@dataclass
class NormStats:
    """Per-dimension z-score statistics, fitted on training data only."""

    design_mean: np.ndarray
    design_std: np.ndarray
    label_mean: np.ndarray
    label_std: np.ndarray

    def normalize_designs(self, x):
        return (np.asarray(x, dtype=float) - self.design_mean) / self.design_std

    def denormalize_designs(self, z):
        return np.asarray(z, dtype=float) * self.design_std + self.design_mean

    def normalize_labels(self, x):
        return (np.asarray(x, dtype=float) - self.label_mean) / self.label_std

    def denormalize_labels(self, z):
        return np.asarray(z, dtype=float) * self.label_std + self.label_mean

    def to_dict(self) -> dict:
        return {
            "design_mean": self.design_mean.tolist(),
            "design_std": self.design_std.tolist(),
            "label_mean": self.label_mean.tolist(),
            "label_std": self.label_std.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormStats":
        return cls(**{k: np.asarray(data[k], dtype=float) for k in
                      ("design_mean", "design_std", "label_mean", "label_std")})


@dataclass
class LabeledDataset:
    records: list
    seed: int = 0
    norm: NormStats | None = None

    def __len__(self):
        return len(self.records)

    def design_matrix(self) -> np.ndarray:
        return np.array([r.design.to_array() for r in self.records])

    def label_matrix(self) -> np.ndarray:
        return np.array([r.labels.to_array() for r in self.records])

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset([self.records[i] for i in indices], seed=self.seed)


def lhs_sample(n: int, seed: int, ranges: dict | None = None) -> list[DesignVector]:
    """Latin-hypercube sample of n design vectors.

    Each continuous variable gets exactly one draw per equal-width stratum of
    its range (uniform jitter, independently permuted per dimension).  The
    blade count rides a continuous axis over [0, 4) floored onto the four
    admissible values, which preserves stratification.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    spans = dict(DEFAULT_RANGES)
    if ranges:
        for name, (lo, hi) in ranges.items():
            full = DEFAULT_RANGES[name]
            if not (full[0] <= lo < hi <= full[1]):
                raise ValueError(f"range override for {name} must stay within {full}")
            spans[name] = (float(lo), float(hi))

    rng = np.random.default_rng(seed)
    jitter = rng.random((n, 6))
    strata = np.column_stack([rng.permutation(n) for _ in range(6)])
    cell = (strata + jitter) / n  # in [0, 1) per dimension

    blades = np.array(BLADE_COUNTS)[np.floor(cell[:, 0] * 4).astype(int)]
    designs = []
    for i in range(n):
        values = {name: lo + cell[i, k + 1] * (hi - lo)
                  for k, (name, (lo, hi)) in enumerate(spans.items())}
        designs.append(DesignVector(n_blades=int(blades[i]), **values))
    return designs


def generate_dataset(n: int, seed: int, grid=None, ranges: dict | None = None,
                     progress=None) -> LabeledDataset:
    """Sample, simulate and label n designs.

    Invalid designs (no interior efficiency maximum) are dropped and replaced
    with fresh samples from follow-up LHS batches until n valid records exist,
    capped at 2n attempts total.
    """
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    records = []
    attempts = 0
    batch_seed = seed
    while len(records) < n and attempts < 2 * n:
        want = min(n - len(records), 2 * n - attempts)
        for design in lhs_sample(want, batch_seed, ranges=ranges):
            attempts += 1
            labels = hydro.extract_labels(hydro.simulate_design(design, grid=grid))
            if labels is not None:
                records.append(DesignRecord(design, labels, "simulated"))
            if progress and attempts % 100 == 0:
                progress(len(records), attempts)
            if len(records) >= n:
                break
        batch_seed += 1
    if len(records) < n:
        warnings.warn(
            f"attempt cap reached: {len(records)} of {n} requested records "
            f"after {attempts} simulations"
        )
    return LabeledDataset(records, seed=seed)


def split(dataset: LabeledDataset, n_train: int):
    """Deterministic index split into (train, test)."""
    if not (1 <= n_train < len(dataset)):
        raise ValueError(
            f"n_train must be in [1, {len(dataset) - 1}], got {n_train}"
        )
    train = LabeledDataset(dataset.records[:n_train], seed=dataset.seed)
    test = LabeledDataset(dataset.records[n_train:], seed=dataset.seed)
    return train, test


def fit_norm(train: LabeledDataset) -> NormStats:
    """Z-score statistics over the six design and three label dimensions."""
    if len(train) == 0:
        raise ValueError("cannot fit normalization on an empty dataset")
    designs = train.design_matrix()
    labels = train.label_matrix()
    stats = NormStats(
        design_mean=designs.mean(axis=0), design_std=designs.std(axis=0),
        label_mean=labels.mean(axis=0), label_std=labels.std(axis=0),
    )
    for names, stds in ((DESIGN_FIELDS, stats.design_std), (LABEL_FIELDS, stats.label_std)):
        for name, std in zip(names, stds):
            if std <= 0:
                raise ValueError(f"zero variance in dimension {name}")
    return stats


def _validate_labels(labels: LabelVector):
    if not (0.0 < labels.eta_star < 1.0):
        raise ValueError(f"eta_star must be in (0, 1), got {labels.eta_star}")
    lo, hi = hydro.DEFAULT_GRID[0], hydro.DEFAULT_GRID[-1]
    if not (lo < labels.j_star < hi):
        raise ValueError(f"j_star must be inside ({lo}, {hi}), got {labels.j_star}")
    if not labels.kt_star > 0:
        raise ValueError(f"kt_star must be positive, got {labels.kt_star}")


def save_dataset(dataset: LabeledDataset, path):
    path = Path(path)
    lines = [CSV_HEADER]
    for rec in dataset.records:
        design, labels = rec.design, rec.labels
        lines.append(",".join([
            str(design.n_blades),
            repr(design.P), repr(design.w_rp), repr(design.w_c),
            repr(design.w_rc), repr(design.camber),
            repr(labels.eta_star), repr(labels.j_star), repr(labels.kt_star),
            rec.provenance, str(dataset.seed),
        ]))
    path.write_text("\n".join(lines) + "\n")
    if dataset.norm is not None:
        path.with_suffix(path.suffix + ".norm.json").write_text(
            json.dumps(dataset.norm.to_dict(), sort_keys=True)
        )


def load_dataset(path) -> LabeledDataset:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise DatasetFormatError(
            f"{path}: line 1: expected header {CSV_HEADER!r}"
        )
    records = []
    seed = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise DatasetFormatError(
                f"{path}: line {lineno}: expected 11 columns, got {len(parts)}"
            )
        try:
            design = DesignVector(
                n_blades=int(parts[0]), P=float(parts[1]), w_rp=float(parts[2]),
                w_c=float(parts[3]), w_rc=float(parts[4]), camber=float(parts[5]),
            )
            labels = LabelVector(float(parts[6]), float(parts[7]), float(parts[8]))
            _validate_labels(labels)
            provenance = parts[9]
            if provenance not in PROVENANCE_TAGS:
                raise ValueError(f"unknown provenance tag {provenance!r}")
            seed = int(parts[10])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: line {lineno}: {exc}") from exc
        records.append(DesignRecord(design, labels, provenance))
    dataset = LabeledDataset(records, seed=seed)
    norm_path = path.with_suffix(path.suffix + ".norm.json")
    if norm_path.exists():
        dataset.norm = NormStats.from_dict(json.loads(norm_path.read_text()))
    return dataset
