"""Expert-disagreement weights and the feature augmentation that uses them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import TaskDataset

__all__ = ["PsiVector", "inconsistency_score", "compute_psi", "augment_features"]


@dataclass(frozen=True, eq=False)
class PsiVector:
    task_id: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("psi values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def inconsistency_score(rater_scores) -> float:
    """``exp(sum((x - mean)^2) / (2 var))`` over one sample's rater scores.

    ``var`` is the population variance. Unanimous raters give exactly 1.
    """
    x = np.asarray(rater_scores, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("need at least one rater score")
    if not np.all(np.isfinite(x)):
        raise ValueError("rater scores must be finite")
    dev2 = float(np.sum((x - x.mean()) ** 2))
    var = dev2 / x.size
    if var == 0.0:
        return 1.0
    return math.exp(dev2 / (2.0 * var))


def compute_psi(ds: TaskDataset) -> PsiVector:
    if ds.raters is None:
        raise ValueError(
            f"task {ds.name!r} has no rater scores; supply a raters file or run with psi disabled"
        )
    return PsiVector(ds.task_id, np.array([inconsistency_score(r) for r in ds.raters], dtype=float))


def augment_features(X, psi, enabled: bool = True) -> np.ndarray:
    """Add each sample's psi value to every one of its features."""
    X = np.asarray(X, dtype=float)
    if not enabled:
        return X
    values = psi.values if isinstance(psi, PsiVector) else np.asarray(psi, dtype=float).reshape(-1)
    if values.size != X.shape[0]:
        raise ValueError(f"psi has length {values.size} but X has {X.shape[0]} rows")
    return X + values[:, None]
