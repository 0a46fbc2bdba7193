"""Experiment runner: split, build locality weights, learn the dictionary
and representation, train the ridge classifier, code the test samples and
report accuracy.

Reports are a pure function of (config, seed): wall-clock timing is only
recorded when timing=True, otherwise every train_seconds field is 0.0 so
repeated runs emit byte-identical CSV/JSON.  Set the LCLRRDL_JOBS
environment variable to run independent repetitions in parallel threads.
"""

import csv
import io
import json
import math
import os
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classifier import fit_ridge, one_hot, predict_batch
from .data import Dataset, SynthSpec, gen_synthetic, load_image_dir, split_train_test
from .errors import DataError
from .graph import normalize_columns, pairwise_sq_dist
from .solver import SolverConfig, init_dictionary, lclrrdl_fit, lrr_solve, rpca

ENV_JOBS = "LCLRRDL_JOBS"


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a benchmark run.

    dataset is either a SynthSpec or a path to a PGM class directory.
    """

    dataset: object
    per_class_train: int
    dict_items_per_class: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    eta: float = 0.5
    repetitions: int = 5
    seed: int = 0
    downsample_rate: float = 1.0
    normalize: bool = True
    rescale_weights: bool = False
    timing: bool = False
    rpca_beta: float | None = None
    out_path: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.per_class_train < 1:
            raise ValueError("per_class_train must be >= 1")
        if self.dict_items_per_class < 1:
            raise ValueError("dict_items_per_class must be >= 1")
        if self.dict_items_per_class > self.per_class_train:
            raise ValueError(
                f"dict_items_per_class={self.dict_items_per_class} exceeds "
                f"per_class_train={self.per_class_train}"
            )
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.rpca_beta is not None and self.rpca_beta <= 0:
            raise ValueError("rpca_beta must be > 0")

    def to_dict(self):
        if isinstance(self.dataset, SynthSpec):
            dset = {"kind": "synthetic"}
            dset.update(
                {
                    "num_classes": self.dataset.num_classes,
                    "ambient_dim": self.dataset.ambient_dim,
                    "subspace_dim": self.dataset.subspace_dim,
                    "samples_per_class": self.dataset.samples_per_class,
                    "corruption_fraction": self.dataset.corruption_fraction,
                    "corruption_magnitude": self.dataset.corruption_magnitude,
                    "seed": self.dataset.seed,
                }
            )
        else:
            dset = {
                "kind": "directory",
                "path": str(self.dataset),
                "downsample_rate": self.downsample_rate,
            }
        s = self.solver
        return {
            "dataset": dset,
            "per_class_train": self.per_class_train,
            "dict_items_per_class": self.dict_items_per_class,
            "eta": self.eta,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "normalize": self.normalize,
            "rescale_weights": self.rescale_weights,
            "timing": self.timing,
            "rpca_beta": self.rpca_beta,
            "solver": {
                "lambda": s.lambda_,
                "alpha": s.alpha,
                "gamma": s.gamma,
                "beta": s.beta,
                "mu0": s.mu0,
                "rho": s.rho,
                "mu_max": s.mu_max,
                "eps": s.eps,
                "max_iter": s.max_iter,
                "seed": s.seed,
            },
        }


@dataclass
class RepResult:
    repetition: int
    seed: int
    accuracy_pct: float
    nn_accuracy_pct: float
    train_accuracy_pct: float
    train_seconds: float
    train_iterations: int
    train_converged: bool
    final_residuals: tuple
    test_iterations: int
    test_converged: bool


@dataclass
class Report:
    method: str
    condition: str
    config: dict
    hardware: str
    repetitions: list
    mean_accuracy_pct: float
    mean_nn_accuracy_pct: float
    mean_train_accuracy_pct: float
    mean_train_seconds: float


REPORT_JSON_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": [
        "schema_version", "method", "condition", "config", "hardware",
        "mean_accuracy_pct", "mean_nn_accuracy_pct", "mean_train_accuracy_pct",
        "mean_train_seconds", "repetitions",
    ],
    "properties": {
        "schema_version": {"const": 1},
        "method": {"type": "string"},
        "condition": {"type": "string"},
        "config": {"type": "object"},
        "hardware": {"type": "string"},
        "mean_accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
        "mean_nn_accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
        "mean_train_accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
        "mean_train_seconds": {"type": "number", "minimum": 0},
        "repetitions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": [
                    "repetition", "seed", "accuracy_pct", "nn_accuracy_pct",
                    "train_accuracy_pct", "train_seconds", "train_iterations",
                    "train_converged", "final_residuals", "test_iterations",
                    "test_converged",
                ],
                "properties": {
                    "repetition": {"type": "integer", "minimum": 0},
                    "seed": {"type": "integer"},
                    "accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
                    "nn_accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
                    "train_accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
                    "train_seconds": {"type": "number", "minimum": 0},
                    "train_iterations": {"type": "integer", "minimum": 1},
                    "train_converged": {"type": "boolean"},
                    "final_residuals": {
                        "type": "array", "minItems": 3, "maxItems": 3,
                        "items": {"type": "number"},
                    },
                    "test_iterations": {"type": "integer", "minimum": 1},
                    "test_converged": {"type": "boolean"},
                },
            },
        },
    },
}


def hardware_description():
    return (
        f"{platform.platform()} / {platform.processor() or 'unknown-cpu'} / "
        f"python {platform.python_version()} / numpy {np.__version__}"
    )


def nn_classify(X_train, labels_train, X_test):
    """Nearest neighbour on raw feature columns (squared euclidean)."""
    sq_tr = np.sum(X_train * X_train, axis=0)
    sq_te = np.sum(X_test * X_test, axis=0)
    d2 = sq_te[:, None] + sq_tr[None, :] - 2.0 * (X_test.T @ X_train)
    return np.asarray(labels_train)[np.argmin(d2, axis=1)]


def _rep_seeds(seed, rep):
    """Three independent integer seeds per repetition, stable across runs."""
    state = np.random.SeedSequence([int(seed), int(rep)]).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def _condition_string(cfg):
    if isinstance(cfg.dataset, SynthSpec):
        s = cfg.dataset
        base = (
            f"synth(k={s.num_classes},d={s.ambient_dim},r={s.subspace_dim},"
            f"n/c={s.samples_per_class},corr={s.corruption_fraction}@{s.corruption_magnitude})"
        )
    else:
        base = f"dir({Path(cfg.dataset).name},rate={cfg.downsample_rate})"
    return f"{base} train={cfg.per_class_train} atoms={cfg.dict_items_per_class}"


def _dataset_for_rep(cfg, shared_ds, synth_seed):
    if isinstance(cfg.dataset, SynthSpec):
        return gen_synthetic(replace(cfg.dataset, seed=synth_seed))
    return shared_ds


def _load_shared_dataset(cfg):
    if isinstance(cfg.dataset, SynthSpec):
        return None
    return load_image_dir(cfg.dataset, cfg.downsample_rate)


def _prepare_split(cfg, ds, split_seed):
    train, test = split_train_test(ds, cfg.per_class_train, split_seed)
    if cfg.normalize:
        Xtr = normalize_columns(train.X)
        Xte = normalize_columns(test.X)
    else:
        Xtr = train.X.copy()
        Xte = test.X.copy()
    R = pairwise_sq_dist(Xtr)
    if cfg.rescale_weights and R.max() > 0.0:
        R = R / R.max()
    return train, test, Xtr, Xte, R


def _accuracy(pred, truth):
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(truth)))


def _rep_lclrrdl(cfg, shared_ds, rep):
    synth_seed, split_seed, dict_seed = _rep_seeds(cfg.seed, rep)
    ds = _dataset_for_rep(cfg, shared_ds, synth_seed)
    train, test, Xtr, Xte, R = _prepare_split(cfg, ds, split_seed)
    D0, atoms = init_dictionary(Xtr, train.labels, cfg.dict_items_per_class, dict_seed)

    t0 = time.perf_counter()
    fit = lclrrdl_fit(Xtr, R, D0, cfg.solver, atom_indices=atoms)
    train_seconds = (time.perf_counter() - t0) if cfg.timing else 0.0
    if not fit.converged:
        warnings.warn(
            f"training solve hit max_iter={cfg.solver.max_iter} without "
            f"converging (residuals {tuple(fit.residuals[-1])}); continuing",
            RuntimeWarning,
        )
    clf = fit_ridge(fit.Z, one_hot(train.labels), cfg.eta)
    code = lrr_solve(Xte, fit.D, cfg.solver)
    return RepResult(
        repetition=rep,
        seed=split_seed,
        accuracy_pct=_accuracy(predict_batch(clf, code.Z), test.labels),
        nn_accuracy_pct=_accuracy(nn_classify(Xtr, train.labels, Xte), test.labels),
        train_accuracy_pct=_accuracy(predict_batch(clf, fit.Z), train.labels),
        train_seconds=train_seconds,
        train_iterations=fit.iterations,
        train_converged=fit.converged,
        final_residuals=tuple(float(v) for v in fit.residuals[-1]),
        test_iterations=code.iterations,
        test_converged=code.converged,
    )


def _rep_rpca(cfg, shared_ds, rep):
    synth_seed, split_seed, dict_seed = _rep_seeds(cfg.seed, rep)
    ds = _dataset_for_rep(cfg, shared_ds, synth_seed)
    if not np.any(ds.X):
        raise DataError("degenerate dataset: X is identically zero")
    train, test, Xtr, Xte, _ = _prepare_split(cfg, ds, split_seed)
    beta = cfg.rpca_beta
    if beta is None:
        beta = 1.0 / math.sqrt(max(Xtr.shape))

    t0 = time.perf_counter()
    low_rank = rpca(Xtr, beta, cfg.solver)
    if not np.any(low_rank.A):
        raise DataError("rpca produced an all-zero low-rank component; cannot build a dictionary")
    D, _ = init_dictionary(
        low_rank.A, train.labels, cfg.dict_items_per_class, dict_seed, allow_zero=True
    )
    code_train = lrr_solve(Xtr, D, cfg.solver)
    train_seconds = (time.perf_counter() - t0) if cfg.timing else 0.0

    clf = fit_ridge(code_train.Z, one_hot(train.labels), cfg.eta)
    code_test = lrr_solve(Xte, D, cfg.solver)
    return RepResult(
        repetition=rep,
        seed=split_seed,
        accuracy_pct=_accuracy(predict_batch(clf, code_test.Z), test.labels),
        nn_accuracy_pct=_accuracy(nn_classify(Xtr, train.labels, Xte), test.labels),
        train_accuracy_pct=_accuracy(predict_batch(clf, code_train.Z), train.labels),
        train_seconds=train_seconds,
        train_iterations=low_rank.iterations,
        train_converged=low_rank.converged,
        final_residuals=(float(low_rank.residuals[-1]), 0.0, 0.0),
        test_iterations=code_test.iterations,
        test_converged=code_test.converged,
    )


def _run(cfg, rep_fn, method):
    shared_ds = _load_shared_dataset(cfg)
    jobs = int(os.environ.get(ENV_JOBS, "1"))
    reps = range(cfg.repetitions)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda r: rep_fn(cfg, shared_ds, r), reps))
    else:
        results = [rep_fn(cfg, shared_ds, r) for r in reps]
    mean = lambda key: float(np.mean([getattr(r, key) for r in results]))
    return Report(
        method=method,
        condition=_condition_string(cfg),
        config=cfg.to_dict(),
        hardware=hardware_description(),
        repetitions=results,
        mean_accuracy_pct=mean("accuracy_pct"),
        mean_nn_accuracy_pct=mean("nn_accuracy_pct"),
        mean_train_accuracy_pct=mean("train_accuracy_pct"),
        mean_train_seconds=mean("train_seconds"),
    )


def run_experiment(cfg):
    """Full pipeline benchmark of the joint dictionary-learning method."""
    return _run(cfg, _rep_lclrrdl, "lclrrdl")


def run_rpca_baseline(cfg):
    """Baseline: clean the training matrix with RPCA, pick dictionary atoms
    from the low-rank component, then run the same coding and classifier
    pipeline."""
    return _run(cfg, _rep_rpca, "rpca")


def _report_to_dict(report):
    return {
        "schema_version": 1,
        "method": report.method,
        "condition": report.condition,
        "config": report.config,
        "hardware": report.hardware,
        "mean_accuracy_pct": report.mean_accuracy_pct,
        "mean_nn_accuracy_pct": report.mean_nn_accuracy_pct,
        "mean_train_accuracy_pct": report.mean_train_accuracy_pct,
        "mean_train_seconds": report.mean_train_seconds,
        "repetitions": [
            {
                "repetition": r.repetition,
                "seed": r.seed,
                "accuracy_pct": r.accuracy_pct,
                "nn_accuracy_pct": r.nn_accuracy_pct,
                "train_accuracy_pct": r.train_accuracy_pct,
                "train_seconds": r.train_seconds,
                "train_iterations": r.train_iterations,
                "train_converged": r.train_converged,
                "final_residuals": list(r.final_residuals),
                "test_iterations": r.test_iterations,
                "test_converged": r.test_converged,
            }
            for r in report.repetitions
        ],
    }


def _fmt(v):
    return format(v, ".10g")


def _emit_json(report):
    return json.dumps(_report_to_dict(report), sort_keys=True, indent=2) + "\n"


def _emit_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "condition", "accuracy_pct", "train_seconds"])
    for r in report.repetitions:
        writer.writerow(
            [report.method, f"{report.condition}#rep{r.repetition}",
             _fmt(r.accuracy_pct), _fmt(r.train_seconds)]
        )
    writer.writerow(
        [report.method, f"{report.condition}#mean",
         _fmt(report.mean_accuracy_pct), _fmt(report.mean_train_seconds)]
    )
    return buf.getvalue()


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}{k}.", obj[k], out)
    else:
        out.append((prefix[:-1], obj))


def _emit_table(report):
    lines = [
        f"method    : {report.method}",
        f"condition : {report.condition}",
        f"hardware  : {report.hardware}",
        "config    :",
    ]
    pairs = []
    _flatten("", report.config, pairs)
    lines.extend(f"    {k} = {v}" for k, v in pairs)
    lines.append("")
    header = (
        f"{'rep':>3} {'seed':>11} {'acc%':>9} {'nn%':>9} {'train%':>9} "
        f"{'secs':>9} {'iters':>6} {'conv':>5}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.repetitions:
        lines.append(
            f"{r.repetition:>3} {r.seed:>11} {r.accuracy_pct:>9.4f} "
            f"{r.nn_accuracy_pct:>9.4f} {r.train_accuracy_pct:>9.4f} "
            f"{r.train_seconds:>9.3f} {r.train_iterations:>6} "
            f"{'yes' if r.train_converged else 'no':>5}"
        )
    lines.append("-" * len(header))
    lines.append(f"mean accuracy      : {report.mean_accuracy_pct:.4f}%")
    lines.append(f"mean nn baseline   : {report.mean_nn_accuracy_pct:.4f}%")
    lines.append(f"mean train seconds : {report.mean_train_seconds:.3f}")
    return "\n".join(lines) + "\n"


def emit_report(report, fmt="table", path=None):
    """Render a report as a human table, CSV or JSON.

    The output is byte-stable for a fixed report; with path given it is
    also written to disk.
    """
    if fmt == "json":
        text = _emit_json(report)
    elif fmt == "csv":
        text = _emit_csv(report)
    elif fmt == "table":
        text = _emit_table(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
