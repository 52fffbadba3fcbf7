"""Task graphs: incidence (structure) matrix, Laplacian, penalty and estimation."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "GraphError",
    "TaskGraph",
    "structure_matrix",
    "graph_penalty",
    "graph_penalty_pairwise",
    "graph_penalty_trace",
    "estimate_structure",
    "coefficient_correlation",
]


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TaskGraph:
    M: int
    edges: tuple[tuple[int, int], ...]
    S: np.ndarray
    L: np.ndarray
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"M": self.M, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskGraph":
        return structure_matrix(int(doc["M"]), [tuple(e) for e in doc["edges"]])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "TaskGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def structure_matrix(M: int, edges: Sequence[tuple[int, int]], _warnings=()) -> TaskGraph:
    """Build the M x |E| incidence matrix and the Laplacian ``S @ S.T``.

    Edges are stored as ``(a, b)`` with ``a < b``; the column for that edge
    has +1 at row ``a`` and -1 at row ``b``.
    """
    if M < 1:
        raise GraphError("a task graph needs M >= 1")
    norm = []
    for e in edges:
        a, b = (int(v) for v in e)
        if a == b:
            raise GraphError(f"self-loop on task {a}")
        if not (0 <= a < M and 0 <= b < M):
            raise GraphError(f"edge ({a}, {b}) out of range for M={M}")
        norm.append((min(a, b), max(a, b)))
    if len(set(norm)) != len(norm):
        raise GraphError("duplicate edges")
    S = np.zeros((M, len(norm)))
    for i, (a, b) in enumerate(norm):
        S[a, i] = 1.0
        S[b, i] = -1.0
    L = S @ S.T
    for arr in (S, L):
        arr.setflags(write=False)
    return TaskGraph(M, tuple(norm), S, L, tuple(_warnings))


def _values(W) -> np.ndarray:
    return np.asarray(getattr(W, "values", W), dtype=float)


def _check(W: np.ndarray, g: TaskGraph):
    if W.ndim != 2 or W.shape[1] != g.M:
        raise GraphError(f"W has shape {W.shape}; expected d x {g.M}")


def graph_penalty(W, g: TaskGraph) -> float:
    """``||W S||_F^2`` for W stored d x M."""
    W = _values(W)
    _check(W, g)
    return float(np.sum((W @ g.S) ** 2))


def graph_penalty_pairwise(W, g: TaskGraph) -> float:
    W = _values(W)
    _check(W, g)
    return float(sum(np.sum((W[:, a] - W[:, b]) ** 2) for a, b in g.edges))


def graph_penalty_trace(W, g: TaskGraph) -> float:
    W = _values(W)
    _check(W, g)
    return float(np.trace(W @ g.L @ W.T))


def coefficient_correlation(W: np.ndarray) -> np.ndarray:
    """Pearson correlation between unit-normalized coefficient columns.

    Columns that are zero (or constant, so correlation is undefined) get NaN
    rows and columns.
    """
    W = np.asarray(W, dtype=float)
    norms = np.linalg.norm(W, axis=0)
    Wn = np.divide(W, norms, out=np.zeros_like(W), where=norms > 0)
    C = Wn - Wn.mean(axis=0)
    sd = np.linalg.norm(C, axis=0)
    ok = sd > 0
    C = np.divide(C, sd, out=np.zeros_like(C), where=ok)
    R = C.T @ C
    R[~ok, :] = np.nan
    R[:, ~ok] = np.nan
    return np.clip(R, -1.0, 1.0)


def estimate_structure(ds, lam: float, corr_threshold: float = 0.9, cfg=None) -> TaskGraph:
    """Link tasks whose lasso coefficient vectors are strongly correlated.

    Each task gets its own lasso fit; an edge ``(a, b)`` is created when
    ``|corr(w_a, w_b)| >= corr_threshold``. Tasks whose fit is all zero
    take part in no edge.
    """
    from .models import lasso_fit

    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if not 0 <= corr_threshold <= 1:
        raise ValueError("corr_threshold must lie in [0, 1]")
    if ds.shared_d is None:
        raise GraphError(
            "tasks have different feature dimensions; supply the task graph explicitly"
        )
    W = np.column_stack([lasso_fit(t.X, t.Y, lam, cfg) for t in ds.tasks])
    R = coefficient_correlation(W)
    notes = []
    dead = [ds.tasks[m].name for m in range(ds.M) if np.isnan(R[m, m])]
    if dead:
        msg = f"tasks with degenerate lasso coefficients left out of the graph: {dead}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    edges = [
        (a, b)
        for a in range(ds.M)
        for b in range(a + 1, ds.M)
        if not np.isnan(R[a, b]) and abs(R[a, b]) >= corr_threshold
    ]
    return structure_matrix(ds.M, edges, notes)
