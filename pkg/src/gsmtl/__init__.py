"""Graph-regularized sparse multi-task least squares with expert-inconsistency weights."""

from .coefficients import CoefficientMatrix
from .consistency import PsiVector, augment_features, compute_psi, inconsistency_score
from .data import (
    MultiTaskDataset,
    SyntheticSpec,
    TaskDataset,
    filter_indeterminate,
    generate_synthetic,
    load_multitask_dataset,
    save_multitask_dataset,
)
from .evaluation import (
    EvalReport,
    accuracy_curve,
    kfold_split,
    mean_abs_diff,
    run_cv,
    within_threshold_accuracy,
)
from .graph import TaskGraph, estimate_structure, graph_penalty, structure_matrix
from .models import (
    Hyperparams,
    graph_sparse_mtl_fit,
    lasso_fit,
    objective_value,
    predict,
    trace_mtl_fit,
)
from .prox import Solution, SolverConfig, apg_solve, singular_value_threshold, soft_threshold

__version__ = "0.1.0"
