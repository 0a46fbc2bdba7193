"""Command-line interface.

Verbs: bench-synth, bench-dir, rpca-bench, fit, predict, inspect.
Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .classifier import fit_ridge, load_classifier, one_hot, predict_batch, save_classifier
from .data import (
    SynthSpec,
    gen_synthetic,
    load_image_dir,
    load_matrix,
    parse_rate,
    save_matrix,
)
from .errors import DataError, NumericalError
from .graph import normalize_columns, pairwise_sq_dist
from .harness import ExperimentConfig, emit_report, run_experiment, run_rpca_baseline
from .solver import SolverConfig, init_dictionary, lclrrdl_fit, lrr_solve


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_SOLVER_FLAGS = {
    "lambda_": "--lambda",
    "alpha": "--alpha",
    "gamma": "--gamma",
    "beta": "--beta",
    "mu0": "--mu0",
    "rho": "--rho",
    "eps": "--eps",
}


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, help="experiment seed")
    p.add_argument("--out", help="write the report/output to this path")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    for attr, flag in _SOLVER_FLAGS.items():
        p.add_argument(flag, dest=attr, type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--timing", action=argparse.BooleanOptionalAction, default=None,
                   help="record wall-clock training time (breaks byte-level "
                        "report determinism across runs)")


def _add_experiment(p):
    p.add_argument("--per-class-train", dest="per_class_train", type=int)
    p.add_argument("--dict-per-class", dest="dict_items_per_class", type=int)
    p.add_argument("--reps", dest="repetitions", type=int)
    p.add_argument("--no-normalize", dest="normalize", action="store_false", default=None)
    p.add_argument("--rescale-weights", dest="rescale_weights", action="store_true",
                   default=None)


def _add_synth(p):
    p.add_argument("--classes", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--subspace-dim", dest="subspace_dim", type=int)
    p.add_argument("--per-class", dest="samples_per_class", type=int)
    p.add_argument("--corruption", type=float)
    p.add_argument("--magnitude", type=float)


def _add_dir(p):
    p.add_argument("--data-dir", dest="data_dir", help="root directory of PGM classes")
    p.add_argument("--rate", help="downsample rate, e.g. 1, 1/2, 1/4, 1/8, 1/3")


def build_parser():
    parser = _Parser(prog="lclrrdl", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, helptext in [
        ("bench-synth", "benchmark on synthetic union-of-subspaces data"),
        ("bench-dir", "benchmark on a PGM image directory"),
        ("rpca-bench", "run the RPCA-cleaned-dictionary baseline"),
        ("fit", "fit a model on a full dataset and save it"),
        ("predict", "classify samples with a saved model"),
        ("inspect", "dump the residual history of a saved model"),
    ]:
        p = sub.add_parser(verb, help=helptext)
        if verb in ("bench-synth", "bench-dir", "rpca-bench", "fit", "predict"):
            _add_common(p)
        if verb in ("bench-synth", "bench-dir", "rpca-bench"):
            _add_experiment(p)
        if verb in ("bench-synth", "rpca-bench", "fit"):
            _add_synth(p)
        if verb in ("bench-dir", "rpca-bench", "fit", "predict"):
            _add_dir(p)
        if verb == "rpca-bench":
            p.add_argument("--rpca-beta", dest="rpca_beta", type=float,
                           help="RPCA error weight; default 1/sqrt(max(d, n))")
        if verb == "fit":
            p.add_argument("--dict-per-class", dest="dict_items_per_class", type=int)
            p.add_argument("--model-dir", dest="model_dir", required=True)
        if verb == "predict":
            p.add_argument("--model-dir", dest="model_dir", required=True)
        if verb == "inspect":
            p.add_argument("--model-dir", dest="model_dir", required=True)
            p.add_argument("--format", choices=["table", "csv"], default="table")
    return parser


def _load_config_file(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON config {path}: {exc}") from exc


def _merge(base, args, keys):
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    return base


def _solver_from(cfg_dict, args):
    d = dict(cfg_dict.get("solver", {}))
    if "lambda" in d:
        d["lambda_"] = d.pop("lambda")
    _merge(d, args, ["lambda_", "alpha", "gamma", "beta", "mu0", "rho", "eps", "max_iter"])
    if args.seed is not None:
        d.setdefault("seed", args.seed)
    try:
        return SolverConfig(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad solver config: {exc}") from exc


def _synth_from(cfg_dict, args):
    d = {k: v for k, v in cfg_dict.get("dataset", {}).items() if k != "kind"}
    for attr, key in [
        ("classes", "num_classes"), ("dim", "ambient_dim"),
        ("subspace_dim", "subspace_dim"), ("samples_per_class", "samples_per_class"),
        ("corruption", "corruption_fraction"), ("magnitude", "corruption_magnitude"),
    ]:
        v = getattr(args, attr, None)
        if v is not None:
            d[key] = v
    try:
        return SynthSpec(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad synthetic dataset spec: {exc}") from exc


def _dataset_from(cfg_dict, args):
    """Resolve the dataset source: an explicit directory wins over synth flags."""
    file_ds = cfg_dict.get("dataset", {})
    data_dir = getattr(args, "data_dir", None) or (
        file_ds.get("path") if file_ds.get("kind") == "directory" else None
    )
    if data_dir is not None:
        rate = getattr(args, "rate", None) or file_ds.get("downsample_rate", 1.0)
        try:
            parse_rate(rate)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return data_dir, rate
    return _synth_from(cfg_dict, args), 1.0


def _rate_float(rate):
    return 1.0 / parse_rate(rate)


def _experiment_config(args):
    cfg_dict = _load_config_file(args.config) if args.config else {}
    dataset, rate = _dataset_from(cfg_dict, args)
    solver = _solver_from(cfg_dict, args)
    d = {
        "per_class_train": cfg_dict.get("per_class_train", 8),
        "dict_items_per_class": cfg_dict.get("dict_items_per_class", 5),
        "eta": cfg_dict.get("eta", 0.5),
        "repetitions": cfg_dict.get("repetitions", 5),
        "seed": cfg_dict.get("seed", 0),
        "normalize": cfg_dict.get("normalize", True),
        "rescale_weights": cfg_dict.get("rescale_weights", False),
        "timing": cfg_dict.get("timing", False),
        "rpca_beta": cfg_dict.get("rpca_beta"),
    }
    _merge(d, args, [
        "per_class_train", "dict_items_per_class", "eta", "repetitions",
        "seed", "normalize", "rescale_weights", "timing", "rpca_beta",
    ])
    try:
        return ExperimentConfig(
            dataset=dataset,
            downsample_rate=_rate_float(rate),
            solver=solver,
            out_path=args.out,
            **d,
        )
    except ValueError as exc:
        raise UsageError(f"bad experiment config: {exc}") from exc


def _emit(report, args):
    text = emit_report(report, args.format, path=args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"report written to {args.out}")
    return 0


def _cmd_bench_synth(args):
    return _emit(run_experiment(_experiment_config(args)), args)


def _cmd_bench_dir(args):
    cfg = _experiment_config(args)
    if isinstance(cfg.dataset, SynthSpec):
        raise UsageError("bench-dir requires --data-dir (or a directory dataset in --config)")
    return _emit(run_experiment(cfg), args)


def _cmd_rpca_bench(args):
    return _emit(run_rpca_baseline(_experiment_config(args)), args)


def _load_full_dataset(args, cfg_dict):
    dataset, rate = _dataset_from(cfg_dict, args)
    if isinstance(dataset, SynthSpec):
        return gen_synthetic(dataset), 1.0
    return load_image_dir(dataset, rate), _rate_float(rate)


def _cmd_fit(args):
    cfg_dict = _load_config_file(args.config) if args.config else {}
    solver = _solver_from(cfg_dict, args)
    items = args.dict_items_per_class or cfg_dict.get("dict_items_per_class", 5)
    eta = args.eta or cfg_dict.get("eta", 0.5)
    seed = args.seed if args.seed is not None else cfg_dict.get("seed", 0)
    normalize = cfg_dict.get("normalize", True)

    ds, rate = _load_full_dataset(args, cfg_dict)
    X = normalize_columns(ds.X) if normalize else ds.X.copy()
    R = pairwise_sq_dist(X)
    D0, atoms = init_dictionary(X, ds.labels, items, seed)
    fit = lclrrdl_fit(X, R, D0, solver, atom_indices=atoms)
    clf = fit_ridge(fit.Z, one_hot(ds.labels), eta)

    out = Path(args.model_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(fit.D, out / "D.lrmx")
    save_matrix(fit.Z, out / "Z.lrmx")
    save_matrix(fit.E, out / "E.lrmx")
    save_classifier(clf, out)
    with (out / "residuals.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "feasibility_inf", "z_minus_j_inf", "z_minus_l_inf", "mu"])
        for i, (row, mu) in enumerate(zip(fit.residuals, fit.mu_history)):
            writer.writerow([i, repr(float(row[0])), repr(float(row[1])),
                             repr(float(row[2])), repr(float(mu))])
    model_meta = {
        "solver": {
            "lambda": solver.lambda_, "alpha": solver.alpha, "gamma": solver.gamma,
            "beta": solver.beta, "mu0": solver.mu0, "rho": solver.rho,
            "mu_max": solver.mu_max, "eps": solver.eps, "max_iter": solver.max_iter,
            "seed": solver.seed,
        },
        "eta": eta,
        "normalize": normalize,
        "downsample_rate": rate,
        "dict_items_per_class": items,
        "seed": seed,
        "atom_indices": [int(i) for i in atoms],
        "iterations": fit.iterations,
        "converged": fit.converged,
        "dataset": ds.meta,
    }
    (out / "config.json").write_text(json.dumps(model_meta, sort_keys=True, indent=2) + "\n")
    print(
        f"model written to {out} (iterations={fit.iterations}, "
        f"converged={fit.converged}, final residuals={tuple(fit.residuals[-1])})"
    )
    return 0


def _cmd_predict(args):
    model_dir = Path(args.model_dir)
    if not model_dir.is_dir():
        raise DataError(f"{model_dir}: model directory not found")
    meta = json.loads((model_dir / "config.json").read_text())
    sd = dict(meta["solver"])
    sd["lambda_"] = sd.pop("lambda")
    solver = SolverConfig(**sd)
    D = load_matrix(model_dir / "D.lrmx")
    clf = load_classifier(model_dir)

    if not getattr(args, "data_dir", None):
        raise UsageError("predict requires --data-dir")
    rate = args.rate if args.rate is not None else 1.0 / meta.get("downsample_rate", 1.0)
    ds = load_image_dir(args.data_dir, rate)
    X = normalize_columns(ds.X) if meta.get("normalize", True) else ds.X
    if X.shape[0] != D.shape[0]:
        raise DataError(
            f"feature dimension {X.shape[0]} does not match the model's {D.shape[0]}; "
            "check the downsample rate"
        )
    code = lrr_solve(X, D, solver)
    preds = predict_batch(clf, code.Z)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample", "true_label", "predicted_label"])
    ids = ds.sample_ids or [str(i) for i in range(ds.n_samples)]
    for sid, truth, pred in zip(ids, ds.labels, preds):
        writer.writerow([sid, truth, pred])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    acc = 100.0 * float(np.mean(preds == ds.labels))
    print(f"accuracy: {acc:.4f}% on {ds.n_samples} samples", file=sys.stderr)
    return 0


def _cmd_inspect(args):
    model_dir = Path(args.model_dir)
    res_file = model_dir / "residuals.csv"
    if not res_file.is_file():
        raise DataError(f"{res_file}: no residual history found")
    text = res_file.read_text()
    if args.format == "csv":
        sys.stdout.write(text)
        return 0
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    print(f"{header[0]:>9} {header[1]:>14} {header[2]:>14} {header[3]:>14} {header[4]:>12}")
    for row in body:
        print(
            f"{row[0]:>9} {float(row[1]):>14.6e} {float(row[2]):>14.6e} "
            f"{float(row[3]):>14.6e} {float(row[4]):>12.4e}"
        )
    meta = json.loads((model_dir / "config.json").read_text())
    print(f"iterations={meta['iterations']} converged={meta['converged']}")
    return 0


_COMMANDS = {
    "bench-synth": _cmd_bench_synth,
    "bench-dir": _cmd_bench_dir,
    "rpca-bench": _cmd_rpca_bench,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "inspect": _cmd_inspect,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
