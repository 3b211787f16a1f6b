"""Inverse-design workbench for ship propellers.

Generates labeled training data with a blade-element open-water solver,
trains a conditional flow-matching generator plus forward surrogates, and
exposes the generator through a CLI, an HTTP service and a browser studio.
"""

from .cfm import (
    CfmModel,
    GenerationReport,
    TargetSpec,
    integrate_flow,
    load_cfm,
    sample_designs,
    save_cfm,
    train_cfm,
)
from .dataset import (
    LabeledDataset,
    NormStats,
    fit_norm,
    generate_dataset,
    lhs_sample,
    load_dataset,
    save_dataset,
    split,
)
from .evaluation import (
    build_augmented,
    relative_improvement,
    run_accuracy_study,
    run_augmentation_study,
    run_diversity_study,
)
from .geometry import (
    RADII,
    BladeGeometry,
    DesignVector,
    SectionSpec,
    build_blade,
    eval_distributions,
    export_sections,
)
from .hydro import (
    DEFAULT_GRID,
    LabelVector,
    OpenWaterCurve,
    efficiency,
    extract_labels,
    open_water,
    solve_station,
)
from .surrogate import (
    SurrogateSet,
    load_surrogates,
    mre,
    predict_labels,
    save_surrogates,
    train_surrogates,
    validate_designs,
)

__version__ = "0.1.0"
