"""Sparse, trace-norm and graph-regularized least-squares models.

All losses use ``||X w - y||^2`` with no 1/2 factor, so the gradient of the
data term is ``2 X^T (X w - y)``. Coefficients are stored d x M.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import NamedTuple

import numpy as np

from .coefficients import CoefficientMatrix
from .consistency import augment_features, compute_psi
from .data import MultiTaskDataset
from .graph import TaskGraph, graph_penalty, structure_matrix
from .prox import Solution, SolverConfig, apg_solve, nuclear_norm, singular_value_threshold, soft_threshold

__all__ = [
    "CoefficientMatrix",
    "Hyperparams",
    "ObjectiveTerms",
    "default_hyperparams",
    "lambda_max",
    "lasso_fit",
    "lasso_solve",
    "lasso_objective",
    "trace_mtl_fit",
    "trace_mtl_solve",
    "graph_sparse_mtl_fit",
    "graph_smooth_parts",
    "design_matrices",
    "objective_value",
    "predict",
    "FeatureScaler",
]


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 0.0
    rho: float = 1.0
    rho1: float = 1.0
    rho2: float = 0.0
    psi_enabled: bool = False

    def __post_init__(self):
        for k in ("lam", "rho", "rho1", "rho2"):
            if not getattr(self, k) >= 0:
                raise ValueError(f"{k} must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


class ObjectiveTerms(NamedTuple):
    loss: float
    graph: float
    sparsity: float

    @property
    def total(self) -> float:
        return self.loss + self.graph + self.sparsity


def lambda_max(X, Y) -> float:
    """Smallest l1 weight for which the lasso solution is exactly zero."""
    X = np.asarray(X, dtype=float)
    return float(2.0 * np.max(np.abs(X.T @ np.asarray(Y, dtype=float)), initial=0.0))


def default_hyperparams(ds: MultiTaskDataset, **overrides) -> Hyperparams:
    """lambda = rho2 = 1% of the largest per-task ``lambda_max``; rho = rho1 = 1."""
    lam = 0.01 * max(lambda_max(t.X, t.Y) for t in ds.tasks)
    base = {"lam": lam, "rho": 1.0, "rho1": 1.0, "rho2": lam, "psi_enabled": False}
    base.update({k: v for k, v in overrides.items() if v is not None})
    return Hyperparams(**base)


# --------------------------------------------------------------------------
# single-task lasso


def lasso_objective(X, Y, w, lam: float) -> float:
    r = np.asarray(X) @ np.asarray(w) - np.asarray(Y)
    return float(r @ r + lam * np.abs(w).sum())


def lasso_solve(X, Y, lam: float, cfg: SolverConfig | None = None, w0=None) -> Solution:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty dataset")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")

    def f(w):
        r = X @ w - Y
        return float(r @ r)

    def grad(w):
        return 2.0 * (X.T @ (X @ w - Y))

    w0 = np.zeros(X.shape[1]) if w0 is None else w0
    return apg_solve(
        f, grad, lambda v, s: soft_threshold(v, s * lam), lambda w: lam * float(np.abs(w).sum()), w0, cfg
    )


def lasso_fit(X, Y, lam: float, cfg: SolverConfig | None = None) -> np.ndarray:
    return lasso_solve(X, Y, lam, cfg).W


# --------------------------------------------------------------------------
# multi-task objectives


def _require_shared_d(ds: MultiTaskDataset) -> int:
    d = ds.shared_d
    if d is None:
        raise ValueError("all tasks must share the feature dimension for a joint coefficient matrix")
    return d


def design_matrices(ds: MultiTaskDataset, psi_enabled: bool = False) -> list[np.ndarray]:
    """Per-task feature matrices, psi-augmented when requested."""
    if not psi_enabled:
        return [t.X for t in ds.tasks]
    return [augment_features(t.X, compute_psi(t), True) for t in ds.tasks]


def _loss_and_grad(Xs, Ys, W):
    loss = 0.0
    G = np.empty_like(W)
    for m, (X, Y) in enumerate(zip(Xs, Ys)):
        r = X @ W[:, m] - Y
        loss += float(r @ r)
        G[:, m] = 2.0 * (X.T @ r)
    return loss, G


def trace_mtl_solve(ds: MultiTaskDataset, rho: float, cfg: SolverConfig | None = None) -> Solution:
    d = _require_shared_d(ds)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    Xs = [t.X for t in ds.tasks]
    Ys = [t.Y for t in ds.tasks]
    sol = apg_solve(
        lambda W: _loss_and_grad(Xs, Ys, W)[0],
        lambda W: _loss_and_grad(Xs, Ys, W)[1],
        lambda V, s: singular_value_threshold(V, s * rho),
        lambda W: rho * nuclear_norm(W) if rho else 0.0,
        np.zeros((d, ds.M)),
        cfg,
    )
    W = CoefficientMatrix(sol.W, ds.task_names, {"rho": rho, "model": "trace"})
    return replace(sol, W=W)


def trace_mtl_fit(ds: MultiTaskDataset, rho: float, cfg: SolverConfig | None = None) -> CoefficientMatrix:
    return trace_mtl_solve(ds, rho, cfg).W


def graph_smooth_parts(Xs, Ys, g: TaskGraph, rho1: float):
    """Value and gradient callables for the loss plus ``rho1 * ||W S||_F^2``."""
    L = np.asarray(g.L)

    def value(W):
        loss, _ = _loss_and_grad(Xs, Ys, W)
        return loss + rho1 * float(np.sum((W @ g.S) ** 2))

    def grad(W):
        _, G = _loss_and_grad(Xs, Ys, W)
        return G + 2.0 * rho1 * (W @ L)

    return value, grad


def _check_graph(ds: MultiTaskDataset, g: TaskGraph | None) -> TaskGraph:
    if g is None:
        return structure_matrix(ds.M, [])
    if g.M != ds.M:
        raise ValueError(f"graph has {g.M} nodes but the dataset has {ds.M} tasks")
    return g


def graph_sparse_mtl_fit(
    ds: MultiTaskDataset,
    g: TaskGraph | None,
    hp: Hyperparams,
    cfg: SolverConfig | None = None,
) -> Solution:
    """Fit the psi-augmented, graph-regularized sparse multi-task model.

    Minimizes ``sum_i ||X~_i W_i - Y_i||^2 + rho1 ||W S||_F^2 + rho2 ||W||_1``
    where ``X~_i`` adds each sample's psi weight to its features when
    ``hp.psi_enabled``.
    """
    d = _require_shared_d(ds)
    g = _check_graph(ds, g)
    if ds.n == 0:
        raise ValueError("cannot fit on an empty dataset")
    Xs = design_matrices(ds, hp.psi_enabled)
    Ys = [t.Y for t in ds.tasks]
    value, grad = graph_smooth_parts(Xs, Ys, g, hp.rho1)
    rho2 = hp.rho2
    sol = apg_solve(
        value,
        grad,
        lambda V, s: soft_threshold(V, s * rho2),
        lambda W: rho2 * float(np.abs(W).sum()),
        np.zeros((d, ds.M)),
        cfg,
    )
    meta = {"model": "graph", "edges": [list(e) for e in g.edges]}
    W = CoefficientMatrix(sol.W, ds.task_names, hp.to_dict(), meta)
    return replace(sol, W=W)


def objective_value(W, ds: MultiTaskDataset, g: TaskGraph | None, hp: Hyperparams) -> ObjectiveTerms:
    W = np.asarray(getattr(W, "values", W), dtype=float)
    d = _require_shared_d(ds)
    g = _check_graph(ds, g)
    if W.shape != (d, ds.M):
        raise ValueError(f"W has shape {W.shape}; expected {(d, ds.M)}")
    Xs = design_matrices(ds, hp.psi_enabled)
    loss, _ = _loss_and_grad(Xs, [t.Y for t in ds.tasks], W)
    return ObjectiveTerms(loss, hp.rho1 * graph_penalty(W, g), hp.rho2 * float(np.abs(W).sum()))


def predict(W: CoefficientMatrix, task_name: str, x) -> float | np.ndarray:
    """Score ``x @ W_task``. ``x`` may be one feature vector or an n x d matrix."""
    w = W.column(task_name)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"features have dimension {x.shape[-1]} but the model expects {w.shape[0]}")
    out = x @ w
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# feature standardization


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    """Per-task column means and scales, estimated on training samples only."""

    mean: tuple[np.ndarray, ...]
    scale: tuple[np.ndarray, ...]

    @classmethod
    def fit(cls, ds: MultiTaskDataset) -> "FeatureScaler":
        means, scales = [], []
        for t in ds.tasks:
            mu = t.X.mean(axis=0)
            sd = t.X.std(axis=0)
            means.append(mu)
            scales.append(np.where(sd > 0, sd, 1.0))
        return cls(tuple(means), tuple(scales))

    def transform(self, ds: MultiTaskDataset) -> MultiTaskDataset:
        tasks = tuple(
            replace(t, X=(t.X - mu) / sd) for t, mu, sd in zip(ds.tasks, self.mean, self.scale)
        )
        return MultiTaskDataset(tasks, ds.warnings)

    def transform_task(self, m: int, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean[m]) / self.scale[m]

    def to_dict(self) -> dict:
        return {"mean": [m.tolist() for m in self.mean], "scale": [s.tolist() for s in self.scale]}

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureScaler":
        return cls(
            tuple(np.array(m, dtype=float) for m in doc["mean"]),
            tuple(np.array(s, dtype=float) for s in doc["scale"]),
        )
