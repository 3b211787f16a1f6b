"""Command-line entry point orchestrating the full workflow: dataset
generation, model training, design generation, studies, exports and the
HTTP service.

Every command prints one machine-readable JSON summary line on stdout;
progress goes to stderr.  Exit codes: 0 ok, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cfm as cfm_engine
from . import dataset as dataset_mod
from . import evaluation, geometry, hydro, plots, surrogate
from .config import data_dir as resolve_data_dir
from .config import get_profile, load_config

DATASET_FILE = "dataset.csv"
TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"
SURROGATE_FILE = "surrogates.ckpt"
CFM_FILE = "cfm.ckpt"


class CliError(Exception):
    """User-facing error (bad input, missing artifact); exits with code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _progress(message: str):
    print(message, file=sys.stderr, flush=True)


def _summary(payload: dict):
    print(json.dumps(payload, sort_keys=True))


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CliError(f"{what} not found: {path}")
    return path


def _load_design_file(path) -> geometry.DesignVector:
    data = json.loads(_require(Path(path), "design file").read_text())
    try:
        return geometry.DesignVector(
            n_blades=int(data["n_blades"]), P=float(data["P"]),
            w_rp=float(data["w_rp"]), w_c=float(data["w_c"]),
            w_rc=float(data["w_rc"]), camber=float(data["camber"]),
        )
    except KeyError as exc:
        raise CliError(f"design file is missing field {exc}") from exc
    except ValueError as exc:
        raise CliError(f"invalid design: {exc}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="propforge", description=__doc__)
    parser.add_argument("--data-dir", default=None,
                        help="artifact root (default: $PROPFORGE_DATA_DIR or ./data)")
    parser.add_argument("--profile", choices=["desk", "paper"], default="desk")
    parser.add_argument("--config", default=None,
                        help="key=value config file overriding seeds/sizes/grid")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample, simulate and store a dataset")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=DATASET_FILE)

    p = sub.add_parser("split", help="split the dataset into train/test files")
    p.add_argument("--train", type=int, default=None)
    p.add_argument("--dataset", default=DATASET_FILE)

    p = sub.add_parser("train-surrogates", help="fit the three label regressors")
    p.add_argument("--train-file", default=TRAIN_FILE)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train-cfm", help="fit the conditional flow model")
    p.add_argument("--train-file", default=TRAIN_FILE)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("generate", help="generate designs for target labels")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--j", type=float, default=None)
    p.add_argument("--kt", type=float, default=None)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="generated.csv")

    p = sub.add_parser("simulate", help="open-water curve and labels of one design")
    p.add_argument("--design-file", required=True)
    p.add_argument("--out", default="curve.csv")
    p.add_argument("--plot", default=None, help="optional open-water diagram SVG")

    p = sub.add_parser("export-geometry", help="section table CSV of one design")
    p.add_argument("--design-file", required=True)
    p.add_argument("--out", default="sections.csv")

    p = sub.add_parser("study", help="run a validation study")
    p.add_argument("kind", choices=["accuracy", "diversity", "augmentation"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--j", type=float, default=None)
    p.add_argument("--kt", type=float, default=None)
    p.add_argument("--count", type=int, default=None)

    p = sub.add_parser("serve", help="start the HTTP design service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    return parser


def dispatch(argv=None) -> int:
    args = build_parser().parse_args(argv)
    profile = get_profile(args.profile)
    conf = load_config(args.config) if args.config else {}
    root = resolve_data_dir(args.data_dir or conf.get("data_dir"))
    root.mkdir(parents=True, exist_ok=True)

    def conf_seed(flag, key, default=0):
        return flag if flag is not None else int(conf.get(key, default))

    if args.command == "gen-data":
        n = args.n if args.n is not None else int(conf.get("n_samples", profile.dataset_n))
        seed = conf_seed(args.seed, "seed")
        ranges = _ranges_from_config(conf)
        grid = _grid_from_config(conf)
        _progress(f"sampling and simulating {n} designs (seed {seed})")
        ds = dataset_mod.generate_dataset(
            n, seed, grid=grid, ranges=ranges,
            progress=lambda done, tried: _progress(f"  {done}/{n} valid ({tried} simulated)"),
        )
        out = root / args.out
        dataset_mod.save_dataset(ds, out)
        _summary({"command": "gen-data", "records": len(ds), "seed": seed,
                  "path": str(out)})
        return 0

    if args.command == "split":
        ds = dataset_mod.load_dataset(_require(root / args.dataset, "dataset"))
        n_train = args.train if args.train is not None else int(
            conf.get("train_size", profile.train_size))
        train, test = dataset_mod.split(ds, n_train)
        dataset_mod.save_dataset(train, root / TRAIN_FILE)
        dataset_mod.save_dataset(test, root / TEST_FILE)
        _summary({"command": "split", "train": len(train), "test": len(test),
                  "train_path": str(root / TRAIN_FILE), "test_path": str(root / TEST_FILE)})
        return 0

    if args.command == "train-surrogates":
        train = dataset_mod.load_dataset(_require(root / args.train_file, "training dataset"))
        seed = conf_seed(args.seed, "surrogate_seed")
        _progress(f"training 3 surrogates on {len(train)} records ({profile.name} profile)")
        surro = surrogate.train_surrogates(train, profile.surrogate, seed=seed)
        surrogate.save_surrogates(surro, root / SURROGATE_FILE)
        final = {name: hist[-1] for name, hist in surro.loss_histories.items()}
        _summary({"command": "train-surrogates", "records": len(train), "seed": seed,
                  "final_losses": final, "path": str(root / SURROGATE_FILE)})
        return 0

    if args.command == "train-cfm":
        train = dataset_mod.load_dataset(_require(root / args.train_file, "training dataset"))
        seed = conf_seed(args.seed, "cfm_seed")
        _progress(f"training flow model on {len(train)} records ({profile.name} profile)")
        model = cfm_engine.train_cfm(train, profile.cfm, seed=seed)
        cfm_engine.save_cfm(model, root / CFM_FILE)
        _summary({"command": "train-cfm", "records": len(train), "seed": seed,
                  "final_loss": model.loss_history[-1], "path": str(root / CFM_FILE)})
        return 0

    if args.command == "generate":
        ckpt = root / CFM_FILE
        if not ckpt.exists():
            raise CliError(f"cfm checkpoint not found: {ckpt} (run train-cfm first)")
        model = cfm_engine.load_cfm(ckpt)
        try:
            spec = cfm_engine.TargetSpec(eta_star=args.eta, j_star=args.j, kt_star=args.kt)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        seed = conf_seed(args.seed, "generate_seed")
        steps = args.steps if args.steps is not None else profile.flow_steps
        report = cfm_engine.sample_designs(model, spec, args.count, steps=steps, seed=seed)
        out = root / args.out
        out.write_text(report.to_csv())
        _summary({"command": "generate", "count": len(report.designs),
                  "targets": spec.as_dict(), "seed": seed, "path": str(out),
                  "clamped_designs": int(report.clamped_flags.any(axis=1).sum())})
        return 0

    if args.command == "simulate":
        design = _load_design_file(args.design_file)
        curve = hydro.simulate_design(design)
        labels = hydro.extract_labels(curve)
        out = root / args.out
        out.write_text(hydro.curve_to_csv(curve))
        if args.plot:
            plots.save_svg(plots.open_water_diagram(curve, labels), root / args.plot)
        _summary({"command": "simulate", "path": str(out),
                  "labels": None if labels is None else {
                      "eta_star": labels.eta_star, "j_star": labels.j_star,
                      "kt_star": labels.kt_star},
                  "valid": labels is not None})
        return 0

    if args.command == "export-geometry":
        design = _load_design_file(args.design_file)
        out = root / args.out
        out.write_text(geometry.sections_to_csv(geometry.build_blade(design)))
        _summary({"command": "export-geometry", "path": str(out),
                  "stations": len(geometry.RADII)})
        return 0

    if args.command == "study":
        return _run_study(args, profile, conf, root)

    if args.command == "serve":
        from . import service
        import uvicorn
        app = service.create_app(root)
        _progress(f"serving on {args.host}:{args.port} (data dir {root})")
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    raise CliError(f"unknown command {args.command!r}")


def _ranges_from_config(conf: dict):
    ranges = {}
    for key, value in conf.items():
        if key.startswith("range."):
            name = key.split(".", 1)[1]
            if not isinstance(value, list) or len(value) != 2:
                raise CliError(f"config {key} must be 'lo, hi'")
            ranges[name] = (float(value[0]), float(value[1]))
    return ranges or None


def _grid_from_config(conf: dict):
    if "advance_ratios" in conf:
        return np.asarray(conf["advance_ratios"], dtype=float)
    return None


def _run_study(args, profile, conf, root: Path) -> int:
    seed = args.seed if args.seed is not None else int(conf.get("study_seed", 0))
    if args.kind == "accuracy":
        ckpt = root / CFM_FILE
        if not ckpt.exists():
            raise CliError(f"cfm checkpoint not found: {ckpt} (run train-cfm first)")
        model = cfm_engine.load_cfm(ckpt)
        test = dataset_mod.load_dataset(_require(root / TEST_FILE, "test dataset"))
        report = evaluation.run_accuracy_study(model, test,
                                               steps=profile.flow_steps, seed=seed)
        svg = plots.save_svg(plots.parity_plots(report, "generation accuracy"),
                             root / "accuracy_parity.svg")
        _summary({"command": "study", "kind": "accuracy", "seed": seed,
                  "requested": report.n_requested, "valid": report.valid_count,
                  "mres": report.mres, "parity_plot": str(svg)})
        return 0

    if args.kind == "diversity":
        ckpt = root / CFM_FILE
        if not ckpt.exists():
            raise CliError(f"cfm checkpoint not found: {ckpt} (run train-cfm first)")
        model = cfm_engine.load_cfm(ckpt)
        targets = {"eta_star": args.eta, "j_star": args.j, "kt_star": args.kt}
        if all(v is None for v in targets.values()):
            # mid-envelope default keeps the fixed target feasible
            mid = 0.5 * (model.label_min + model.label_max)
            targets = dict(zip(hydro.LABEL_FIELDS, (float(v) for v in mid)))
        spec = cfm_engine.TargetSpec(**targets)
        n = args.count if args.count is not None else profile.diversity_n
        report = evaluation.run_diversity_study(model, spec, n,
                                                steps=profile.flow_steps, seed=seed)
        p1 = plots.save_svg(plots.parameter_histograms(report.config["all_designs"]),
                            root / "diversity_parameters.svg")
        p2 = None
        if report.valid_count:
            p2 = str(plots.save_svg(
                plots.label_histograms(report.achieved, spec.as_dict()),
                root / "diversity_labels.svg"))
        blade_counts = sorted({d.n_blades for d in report.config["all_designs"]})
        _summary({"command": "study", "kind": "diversity", "seed": seed,
                  "targets": spec.as_dict(), "requested": n,
                  "valid": report.valid_count, "mres": report.mres,
                  "blade_counts": blade_counts,
                  "parameter_histograms": str(p1), "label_histograms": p2})
        return 0

    if args.kind == "augmentation":
        train = dataset_mod.load_dataset(_require(root / TRAIN_FILE, "training dataset"))
        test = dataset_mod.load_dataset(_require(root / TEST_FILE, "test dataset"))
        table = evaluation.run_augmentation_study(
            train, test, profile.restricted_sizes, profile.aug_sizes,
            profile.surrogate, profile.cfm, steps=profile.flow_steps,
            seed=seed, progress=_progress,
        )
        out = root / "augmentation_table.csv"
        out.write_text(table.to_csv())
        svg = plots.save_svg(plots.mre_vs_size(table), root / "mre_vs_size.svg")
        _summary({"command": "study", "kind": "augmentation", "seed": seed,
                  "restricted_sizes": list(table.restricted_sizes),
                  "aug_sizes": list(table.aug_sizes),
                  "table": str(out), "plot": str(svg)})
        return 0

    raise CliError(f"unknown study kind {args.kind!r}")


def main(argv=None) -> int:
    try:
        return dispatch(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (dataset_mod.DatasetFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
