"""Validation studies: generation accuracy against held-out targets, design
diversity under a fixed target, and surrogate-based data augmentation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cfm as cfm_engine
from . import hydro, surrogate
from .cfm import CfmModel, TargetSpec, generate_for_conditions
from .config import NetTrainParams
from .dataset import DesignRecord, LabeledDataset, lhs_sample
from .hydro import LABEL_FIELDS
from .surrogate import SurrogateSet, mre, train_surrogates


@dataclass
class StudyReport:
    """Outcome of an accuracy or diversity study."""

    n_requested: int
    valid_count: int
    mres: dict                      # label name -> MRE over valid designs
    targets: np.ndarray             # (n_valid, 3) target/condition labels
    achieved: np.ndarray            # (n_valid, 3) re-simulated labels
    designs: list                   # valid DesignVector objects
    config: dict = field(default_factory=dict)

    @property
    def valid_fraction(self) -> float:
        return self.valid_count / self.n_requested if self.n_requested else 0.0


@dataclass
class AugmentationTable:
    """Relative MRE improvements of augmented over restricted training."""

    restricted_sizes: tuple
    aug_sizes: tuple
    improvements: np.ndarray   # (n_sizes, n_aug, 3), percent
    base_mres: np.ndarray      # (n_sizes, 3)
    aug_mres: np.ndarray       # (n_sizes, n_aug, 3)

    def to_csv(self) -> str:
        header = ["d"]
        for aug in self.aug_sizes:
            header += [f"{label}_aug{aug}" for label in LABEL_FIELDS]
        lines = [",".join(header)]
        for i, d in enumerate(self.restricted_sizes):
            cells = [str(d)]
            for a in range(len(self.aug_sizes)):
                cells += [repr(float(v)) for v in self.improvements[i, a]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def relative_improvement(mre_aug: float, mre_base: float) -> float:
    """Percent change of MRE; negative values denote an error reduction."""
    if mre_base <= 0:
        raise ValueError(f"baseline MRE must be positive, got {mre_base}")
    return 100.0 * (mre_aug - mre_base) / mre_base


def resimulate(designs, grid=None):
    """Run each design through the open-water solver; None where invalid."""
    return [hydro.extract_labels(hydro.simulate_design(d, grid=grid)) for d in designs]


def run_accuracy_study(model: CfmModel, test: LabeledDataset,
                       steps: int = cfm_engine.DEFAULT_FLOW_STEPS,
                       seed: int = 0) -> StudyReport:
    """Generate one design per test label vector, re-simulate, and score the
    per-label MRE between targets and achieved labels over valid designs."""
    if len(test) == 0:
        raise ValueError("test dataset must be non-empty")
    conditions = test.label_matrix()
    designs, _, _ = generate_for_conditions(model, conditions, steps=steps,
                                            rng=np.random.default_rng(seed))
    achieved = resimulate(designs)
    keep = [i for i, lab in enumerate(achieved) if lab is not None]
    tgt = conditions[keep]
    got = np.array([achieved[i].to_array() for i in keep]) if keep else np.empty((0, 3))
    mres = {name: (mre(tgt[:, k], got[:, k]) if keep else float("nan"))
            for k, name in enumerate(LABEL_FIELDS)}
    return StudyReport(
        n_requested=len(test), valid_count=len(keep), mres=mres,
        targets=tgt, achieved=got, designs=[designs[i] for i in keep],
        config={"steps": steps, "seed": seed},
    )


def run_diversity_study(model: CfmModel, spec: TargetSpec, n: int,
                        steps: int = cfm_engine.DEFAULT_FLOW_STEPS,
                        seed: int = 0) -> StudyReport:
    """Generate n designs for one fixed target and re-simulate them all."""
    report = cfm_engine.sample_designs(model, spec, n, steps=steps, seed=seed)
    achieved = resimulate(report.designs)
    keep = [i for i, lab in enumerate(achieved) if lab is not None]
    tgt = report.sampled_conditions[keep]
    got = np.array([achieved[i].to_array() for i in keep]) if keep else np.empty((0, 3))
    targeted = spec.targeted_indices()
    mres = {}
    for k, name in enumerate(LABEL_FIELDS):
        if k in targeted and keep:
            mres[name] = mre(tgt[:, k], got[:, k])
        else:
            mres[name] = float("nan")
    return StudyReport(
        n_requested=n, valid_count=len(keep), mres=mres,
        targets=tgt, achieved=got, designs=[report.designs[i] for i in keep],
        config={"steps": steps, "seed": seed, "spec": spec.as_dict(),
                "all_designs": report.designs},
    )


def within_tolerance_fraction(report: StudyReport, indices, rel_tol: float) -> float:
    """Fraction of valid designs whose achieved labels sit within rel_tol of
    the target for every index in `indices`."""
    if report.valid_count == 0:
        return 0.0
    ok = np.ones(report.valid_count, dtype=bool)
    for k in indices:
        t = report.targets[:, k]
        ok &= np.abs(report.achieved[:, k] - t) / np.abs(t) <= rel_tol
    return float(ok.mean())


def build_augmented(surrogates: SurrogateSet, n: int, seed: int) -> LabeledDataset:
    """Pseudo-labeled dataset: LHS designs labeled by the surrogates only."""
    designs = lhs_sample(n, seed)
    matrix = np.array([d.to_array() for d in designs])
    predicted = surrogate.predict_matrix(surrogates, matrix)
    records = [
        DesignRecord(design, hydro.LabelVector.from_array(row), "pseudo")
        for design, row in zip(designs, predicted)
    ]
    return LabeledDataset(records, seed=seed)


def run_augmentation_study(base: LabeledDataset, test: LabeledDataset,
                           restricted_sizes, aug_sizes,
                           surrogate_params: NetTrainParams,
                           cfm_params: NetTrainParams,
                           steps: int = cfm_engine.DEFAULT_FLOW_STEPS,
                           seed: int = 0,
                           progress=None) -> AugmentationTable:
    """Sweep restricted training sizes and augmentation sizes.

    Restricted sets are prefixes of one fixed shuffle of the base set, so
    smaller sets are nested in larger ones.  For each size d the surrogates
    trained on the restriction pseudo-label the augmented sets, a baseline
    flow model is trained on the restriction and one on each augmented set,
    and all are scored with the accuracy study on the common test set.
    """
    restricted_sizes = tuple(restricted_sizes)
    aug_sizes = tuple(aug_sizes)
    if len(base) < max(restricted_sizes):
        raise ValueError(
            f"base dataset has {len(base)} records, need {max(restricted_sizes)}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(base))
    sub_seeds = rng.integers(2**31, size=(len(restricted_sizes), 2 + 2 * len(aug_sizes)))

    base_mres = np.zeros((len(restricted_sizes), 3))
    aug_mres = np.zeros((len(restricted_sizes), len(aug_sizes), 3))
    improvements = np.zeros_like(aug_mres)
    for i, d in enumerate(restricted_sizes):
        restricted = base.subset(order[:d])
        surro = train_surrogates(restricted, surrogate_params, seed=int(sub_seeds[i, 0]))
        baseline = cfm_engine.train_cfm(restricted, cfm_params, seed=int(sub_seeds[i, 1]))
        base_report = run_accuracy_study(baseline, test, steps=steps, seed=seed)
        base_mres[i] = [base_report.mres[name] for name in LABEL_FIELDS]
        if progress:
            progress(f"d={d} baseline mres={base_report.mres}")
        for a, n_aug in enumerate(aug_sizes):
            augmented = build_augmented(surro, n_aug, seed=int(sub_seeds[i, 2 + 2 * a]))
            model = cfm_engine.train_cfm(augmented, cfm_params,
                                         seed=int(sub_seeds[i, 3 + 2 * a]))
            report = run_accuracy_study(model, test, steps=steps, seed=seed)
            aug_mres[i, a] = [report.mres[name] for name in LABEL_FIELDS]
            improvements[i, a] = [
                relative_improvement(aug_mres[i, a, k], base_mres[i, k])
                for k in range(3)
            ]
            if progress:
                progress(f"d={d} aug={n_aug} mres={report.mres}")
    return AugmentationTable(
        restricted_sizes=restricted_sizes, aug_sizes=aug_sizes,
        improvements=improvements, base_mres=base_mres, aug_mres=aug_mres,
    )
