"""Locality-constrained low-rank representation with joint dictionary
learning, plus the baseline solvers and classification pipeline built on it.
"""

from .classifier import (
    LabelMatrix,
    LinearClassifier,
    fit_ridge,
    load_classifier,
    one_hot,
    predict,
    predict_batch,
    save_classifier,
)
from .data import (
    Dataset,
    SynthSpec,
    block_downsample,
    gen_synthetic,
    load_image_dir,
    load_matrix,
    occlude_blocks,
    save_matrix,
    split_train_test,
)
from .errors import DataError, MatrixFormatError, NumericalError
from .graph import normalize_columns, pairwise_sq_dist, validate_locality_weights
from .harness import (
    ExperimentConfig,
    Report,
    RepResult,
    emit_report,
    nn_classify,
    run_experiment,
    run_rpca_baseline,
)
from .prox import l21_shrink, soft_threshold, svt, weighted_l1_shrink
from .solver import (
    FitResult,
    RpcaResult,
    SolverConfig,
    SolverState,
    alm_step,
    augmented_lagrangian,
    init_dictionary,
    init_state,
    lclrrdl_fit,
    lrr_solve,
    rpca,
    update_D,
    update_E,
    update_J,
    update_L,
    update_Z,
)

__version__ = "0.1.0"

__all__ = [
    "DataError", "Dataset", "ExperimentConfig", "FitResult", "LabelMatrix",
    "LinearClassifier", "MatrixFormatError", "NumericalError", "RepResult",
    "Report", "RpcaResult", "SolverConfig", "SolverState", "SynthSpec",
    "alm_step", "augmented_lagrangian", "block_downsample", "emit_report",
    "fit_ridge", "gen_synthetic", "init_dictionary", "init_state",
    "l21_shrink", "lclrrdl_fit", "load_classifier", "load_image_dir",
    "load_matrix", "lrr_solve", "nn_classify", "normalize_columns",
    "occlude_blocks", "one_hot", "pairwise_sq_dist", "predict",
    "predict_batch", "rpca", "run_experiment", "run_rpca_baseline",
    "save_classifier", "save_matrix", "soft_threshold", "split_train_test",
    "svt", "update_D", "update_E", "update_J", "update_L", "update_Z",
    "validate_locality_weights", "weighted_l1_shrink",
]
