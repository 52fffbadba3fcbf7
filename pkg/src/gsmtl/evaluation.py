"""Score metrics, accuracy-vs-threshold curves and k-fold cross-validation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import MultiTaskDataset
from .graph import TaskGraph, estimate_structure
from .models import FeatureScaler, Hyperparams, graph_sparse_mtl_fit, predict
from .prox import SolverConfig

__all__ = [
    "DEFAULT_THRESHOLDS",
    "FoldResult",
    "EvalReport",
    "within_threshold_accuracy",
    "mean_abs_diff",
    "accuracy_curve",
    "kfold_split",
    "run_cv",
    "write_curve_csv",
]

DEFAULT_THRESHOLDS = tuple(round(0.1 * i, 10) for i in range(1, 21))

# score differences are compared with this much slack so that decimal inputs
# like |3.4 - 4.0| are not pushed past a 0.6 threshold by binary rounding
_CMP_EPS = 1e-9


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if pred.shape != truth.shape:
        raise ValueError(f"{pred.size} predictions for {truth.size} true scores")
    if pred.size == 0:
        raise ValueError("need at least one prediction")
    return pred, truth


def within_threshold_accuracy(pred, truth, threshold: float = 1.0) -> float:
    """Fraction of predictions with ``|pred - truth| <= threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth) <= threshold + _CMP_EPS))


def mean_abs_diff(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def accuracy_curve(pred, truth, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> list[tuple[float, float]]:
    thresholds = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    pred, truth = _pair(pred, truth)
    diff = np.abs(pred - truth)
    return [(t, float(np.mean(diff <= t + _CMP_EPS))) for t in thresholds]


def kfold_split(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Shuffle ``range(n)`` and cut it into ``k`` folds whose sizes differ by at most one."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass
class FoldResult:
    fold_index: int
    accuracy: float
    mean_abs_diff: float
    n_test: int
    converged: bool
    iterations: int
    edges: list
    curve: list


@dataclass
class EvalReport:
    target_task: str
    k: int
    seed: int
    per_fold: list[FoldResult]
    aggregate_accuracy: float
    aggregate_mean_abs_diff: float
    curve: list[tuple[float, float]]
    pooled_accuracy: float
    pooled_mean_abs_diff: float
    hyperparams: dict = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return all(f.converged for f in self.per_fold)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["curve"] = [list(p) for p in self.curve]
        for f in doc["per_fold"]:
            f["curve"] = [list(p) for p in f["curve"]]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def write_curve_csv(path, curve) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "accuracy"])
        for t, a in curve:
            w.writerow([repr(float(t)), repr(float(a))])


def run_cv(
    ds: MultiTaskDataset,
    g: TaskGraph | str | None,
    hp: Hyperparams,
    cfg: SolverConfig | None,
    target_task: str,
    k: int = 10,
    seed: int = 0,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    standardize: bool = False,
    corr_threshold: float = 0.9,
    structure_lambda: float | None = None,
) -> EvalReport:
    """k-fold evaluation of the graph-regularized model on one target task.

    ``g="auto"`` re-estimates the task graph inside every fold from the
    training samples only. Standardization statistics are likewise taken
    from the training fold. Psi weights only enter the training objective;
    held-out samples are scored from their plain features.
    """
    m = ds.task_names.index(ds.task(target_task).name)
    if hp.psi_enabled and not ds.has_raters:
        raise ValueError("psi is enabled but some tasks have no rater scores")
    auto = isinstance(g, str)
    if auto and g != "auto":
        raise ValueError(f"graph must be a TaskGraph or 'auto', got {g!r}")
    lam_s = structure_lambda if structure_lambda is not None else (hp.lam or hp.rho2)

    folds = kfold_split(ds.n, k, seed)
    results = []
    all_pred, all_true = [], []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(ds.n), test_idx)
        train, test = ds.take(train_idx), ds.take(test_idx)
        if standardize:
            scaler = FeatureScaler.fit(train)
            train, test = scaler.transform(train), scaler.transform(test)
        graph = estimate_structure(train, lam_s, corr_threshold, cfg) if auto else g
        sol = graph_sparse_mtl_fit(train, graph, hp, cfg)
        pred = predict(sol.W, target_task, test.tasks[m].X)
        truth = test.tasks[m].Y
        all_pred.append(pred)
        all_true.append(truth)
        results.append(
            FoldResult(
                fold_index=i,
                accuracy=within_threshold_accuracy(pred, truth, 1.0),
                mean_abs_diff=mean_abs_diff(pred, truth),
                n_test=int(test_idx.size),
                converged=bool(sol.converged),
                iterations=int(sol.iterations),
                edges=[list(e) for e in sol.W.meta["edges"]],
                curve=accuracy_curve(pred, truth, thresholds),
            )
        )

    curve = [
        (t, float(np.mean([f.curve[j][1] for f in results]))) for j, t in enumerate(thresholds)
    ]
    pred, truth = np.concatenate(all_pred), np.concatenate(all_true)
    return EvalReport(
        target_task=target_task,
        k=k,
        seed=seed,
        per_fold=results,
        aggregate_accuracy=float(np.mean([f.accuracy for f in results])),
        aggregate_mean_abs_diff=float(np.mean([f.mean_abs_diff for f in results])),
        curve=curve,
        pooled_accuracy=within_threshold_accuracy(pred, truth, 1.0),
        pooled_mean_abs_diff=mean_abs_diff(pred, truth),
        hyperparams=hp.to_dict(),
    )
