"""Datasets, CSV ingestion, score filtering and synthetic problem generation.

File layout
-----------
features CSV (one per task)  ``id,f0,f1,...,f{d-1}``
scores CSV                   ``id,task,score``
raters CSV                   ``id,task,rater,score`` (several rows per id/task)

Samples are aligned across files by their string id. The sample order of the
first features file defines the dataset order.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .coefficients import CoefficientMatrix

__all__ = [
    "DataError",
    "ParseError",
    "AlignmentError",
    "SchemaError",
    "TaskDataset",
    "MultiTaskDataset",
    "SyntheticSpec",
    "load_multitask_dataset",
    "save_multitask_dataset",
    "filter_indeterminate",
    "generate_synthetic",
    "read_features_csv",
    "write_features_csv",
]


class DataError(ValueError):
    pass


class ParseError(DataError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class AlignmentError(DataError):
    def __init__(self, message: str, ids: Sequence[str] = ()):
        ids = sorted(set(ids))
        if ids:
            message = f"{message}: {', '.join(ids)}"
        super().__init__(message)
        self.ids = ids


class SchemaError(DataError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TaskDataset:
    task_id: int
    name: str
    X: np.ndarray
    Y: np.ndarray
    sample_ids: tuple[str, ...]
    raters: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float).reshape(-1)
        ids = tuple(str(s) for s in self.sample_ids)
        if X.ndim != 2:
            if X.size == 0:
                X = X.reshape(0, 0)
            else:
                raise SchemaError(f"task {self.name!r}: X must be a matrix")
        if not (X.shape[0] == Y.shape[0] == len(ids)):
            raise SchemaError(
                f"task {self.name!r}: {X.shape[0]} feature rows, {Y.shape[0]} "
                f"scores, {len(ids)} sample ids"
            )
        if len(set(ids)) != len(ids):
            raise SchemaError(f"task {self.name!r}: duplicate sample ids")
        raters = self.raters
        if raters is not None:
            raters = tuple(_readonly(np.array(r, dtype=float).reshape(-1)) for r in raters)
            if len(raters) != len(ids):
                raise SchemaError(f"task {self.name!r}: rater lists do not match samples")
            if any(r.size == 0 for r in raters):
                raise SchemaError(f"task {self.name!r}: every rater list needs a score")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "Y", _readonly(Y))
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "raters", raters)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, idx) -> "TaskDataset":
        idx = np.asarray(idx, dtype=int)
        raters = None if self.raters is None else tuple(self.raters[i] for i in idx)
        return replace(
            self,
            X=self.X[idx],
            Y=self.Y[idx],
            sample_ids=tuple(self.sample_ids[i] for i in idx),
            raters=raters,
        )


@dataclass(frozen=True, eq=False)
class MultiTaskDataset:
    tasks: tuple[TaskDataset, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise SchemaError("a dataset needs at least one task")
        ids = tasks[0].sample_ids
        for t in tasks[1:]:
            if t.sample_ids != ids:
                raise AlignmentError(f"task {t.name!r} is not aligned with {tasks[0].name!r}")
        names = [t.name for t in tasks]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate task names")
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def M(self) -> int:
        return len(self.tasks)

    @property
    def n(self) -> int:
        return self.tasks[0].n

    @property
    def sample_ids(self) -> tuple[str, ...]:
        return self.tasks[0].sample_ids

    @property
    def task_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tasks)

    @property
    def shared_d(self) -> int | None:
        """Common feature dimension, or None when tasks differ."""
        ds = {t.d for t in self.tasks}
        return ds.pop() if len(ds) == 1 else None

    @property
    def has_raters(self) -> bool:
        return all(t.raters is not None for t in self.tasks)

    def task(self, name: str) -> TaskDataset:
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(f"unknown task {name!r}; have {list(self.task_names)}")

    def take(self, idx) -> "MultiTaskDataset":
        return MultiTaskDataset(tuple(t.take(idx) for t in self.tasks), self.warnings)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    M: int
    sparsity: float = 0.25
    edges: tuple[tuple[int, int], ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.d, self.M) < 1:
            raise ValueError("n, d and M must be >= 1")
        if not 0 < self.sparsity <= 1:
            raise ValueError("sparsity must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if not (0 <= a < self.M and 0 <= b < self.M):
                raise ValueError(f"edge ({a}, {b}) out of range for M={self.M}")
        object.__setattr__(self, "edges", edges)


# --------------------------------------------------------------------------
# CSV ingestion


def _rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        rows = [(reader.line_num, row) for row in reader if row]
    return path, [h.strip() for h in header], rows


def _float(path, line, text):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(path, line, f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(path, line, f"non-finite value {text!r}")
    return v


def read_features_csv(path) -> tuple[list[str], np.ndarray]:
    path, header, rows = _rows(path)
    if not header or header[0] != "id":
        raise ParseError(path, 1, "features header must start with 'id'")
    expected = [f"f{k}" for k in range(len(header) - 1)]
    if header[1:] != expected:
        raise ParseError(path, 1, "feature columns must be named f0, f1, ... in order")
    d = len(expected)
    ids, X = [], []
    seen = set()
    for line, row in rows:
        if len(row) != d + 1:
            raise ParseError(path, line, f"expected {d + 1} fields, got {len(row)}")
        sid = row[0].strip()
        if sid in seen:
            raise SchemaError(f"{path}:{line}: duplicate sample id {sid!r}")
        seen.add(sid)
        ids.append(sid)
        X.append([_float(path, line, v) for v in row[1:]])
    return ids, np.array(X, dtype=float).reshape(len(ids), d)


def _read_scores(path) -> dict[tuple[str, str], float]:
    path, header, rows = _rows(path)
    if header != ["id", "task", "score"]:
        raise ParseError(path, 1, "scores header must be 'id,task,score'")
    out = {}
    for line, row in rows:
        if len(row) != 3:
            raise ParseError(path, line, f"expected 3 fields, got {len(row)}")
        key = (row[0].strip(), row[1].strip())
        if key in out:
            raise SchemaError(f"{path}:{line}: duplicate score for id {key[0]!r} task {key[1]!r}")
        out[key] = _float(path, line, row[2])
    return out


def _read_raters(path) -> dict[tuple[str, str], list[float]]:
    path, header, rows = _rows(path)
    if header != ["id", "task", "rater", "score"]:
        raise ParseError(path, 1, "raters header must be 'id,task,rater,score'")
    out: dict[tuple[str, str], list[float]] = defaultdict(list)
    seen = set()
    for line, row in rows:
        if len(row) != 4:
            raise ParseError(path, line, f"expected 4 fields, got {len(row)}")
        sid, task, rater = (c.strip() for c in row[:3])
        if (sid, task, rater) in seen:
            raise SchemaError(f"{path}:{line}: rater {rater!r} scored id {sid!r} twice")
        seen.add((sid, task, rater))
        out[(sid, task)].append(_float(path, line, row[3]))
    return dict(out)


def load_multitask_dataset(
    features_paths: Sequence,
    scores_path,
    raters_path=None,
    task_names: Sequence[str] | None = None,
) -> MultiTaskDataset:
    """Load one features file per task plus the scores (and raters) files.

    Task names default to the features file stems. When a raters file is
    given, each task that appears in it takes its targets from the mean of
    the rater scores; other tasks keep the scores file values.
    """
    features_paths = [Path(p) for p in features_paths]
    if not features_paths:
        raise SchemaError("need at least one features file")
    names = list(task_names) if task_names is not None else [p.stem for p in features_paths]
    if len(names) != len(features_paths):
        raise SchemaError("one task name per features file is required")
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate task names {names}")

    loaded = [read_features_csv(p) for p in features_paths]
    ref_ids = loaded[0][0]
    ref_set = set(ref_ids)
    for (ids, _), p in zip(loaded[1:], features_paths[1:]):
        if set(ids) != ref_set:
            raise AlignmentError(
                f"{p} and {features_paths[0]} list different samples", ref_set ^ set(ids)
            )

    scores = _read_scores(scores_path)
    unknown_tasks = {t for _, t in scores} - set(names)
    if unknown_tasks:
        raise SchemaError(f"{scores_path}: scores for unknown tasks {sorted(unknown_tasks)}")
    stray = {i for i, _ in scores} - ref_set
    if stray:
        raise AlignmentError(f"{scores_path} has ids absent from the features files", stray)

    raters = _read_raters(raters_path) if raters_path is not None else {}
    if raters:
        unknown_tasks = {t for _, t in raters} - set(names)
        if unknown_tasks:
            raise SchemaError(f"{raters_path}: raters for unknown tasks {sorted(unknown_tasks)}")
        stray = {i for i, _ in raters} - ref_set
        if stray:
            raise AlignmentError(f"{raters_path} has ids absent from the features files", stray)

    tasks = []
    for m, (name, (ids, X)) in enumerate(zip(names, loaded)):
        order = {sid: j for j, sid in enumerate(ids)}
        X = X[[order[sid] for sid in ref_ids]]
        missing = [sid for sid in ref_ids if (sid, name) not in scores]
        if missing:
            raise AlignmentError(f"{scores_path} has no {name!r} score for ids", missing)
        Y = np.array([scores[(sid, name)] for sid in ref_ids])
        task_raters = None
        if any(t == name for _, t in raters):
            missing = [sid for sid in ref_ids if (sid, name) not in raters]
            if missing:
                raise AlignmentError(f"{raters_path} has no {name!r} ratings for ids", missing)
            task_raters = tuple(np.array(raters[(sid, name)]) for sid in ref_ids)
            Y = np.array([r.mean() for r in task_raters])
        tasks.append(TaskDataset(m, name, X, Y, tuple(ref_ids), task_raters))
    return MultiTaskDataset(tuple(tasks))


def write_features_csv(path, ids: Sequence[str], X: np.ndarray) -> None:
    X = np.asarray(X, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"f{k}" for k in range(X.shape[1])])
        for sid, row in zip(ids, X):
            w.writerow([sid] + [repr(float(v)) for v in row])


def save_multitask_dataset(ds: MultiTaskDataset, out_dir, scores_name: str = "scores.csv") -> dict:
    """Write ``ds`` in the CSV layout; returns the paths written, by role."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features = []
    for t in ds.tasks:
        p = out_dir / f"{t.name}.csv"
        write_features_csv(p, t.sample_ids, t.X)
        features.append(p)
    scores = out_dir / scores_name
    with scores.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "task", "score"])
        for t in ds.tasks:
            for sid, y in zip(t.sample_ids, t.Y):
                w.writerow([sid, t.name, repr(float(y))])
    paths = {"features": features, "scores": scores, "raters": None}
    if any(t.raters is not None for t in ds.tasks):
        raters = out_dir / "raters.csv"
        with raters.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "task", "rater", "score"])
            for t in ds.tasks:
                if t.raters is None:
                    continue
                for sid, r in zip(t.sample_ids, t.raters):
                    for i, s in enumerate(r):
                        w.writerow([sid, t.name, f"r{i}", repr(float(s))])
        paths["raters"] = raters
    return paths


# --------------------------------------------------------------------------
# filtering


def filter_indeterminate(ds: MultiTaskDataset, task_name: str, excluded_score: float = 3.0) -> MultiTaskDataset:
    """Drop every sample whose score on ``task_name`` equals ``excluded_score``.

    The comparison is made after rounding to 6 decimals. Samples are removed
    from all tasks so the dataset stays aligned.
    """
    target = ds.task(task_name)
    hit = np.round(target.Y, 6) == round(float(excluded_score), 6)
    if not hit.any():
        return ds
    keep = np.flatnonzero(~hit)
    out = ds.take(keep)
    if keep.size == 0:
        msg = f"every sample had {task_name}={excluded_score}; dataset is empty"
        out = MultiTaskDataset(out.tasks, ds.warnings + (msg,))
    return out


# --------------------------------------------------------------------------
# synthetic problems


def _components(M: int, edges) -> list[int]:
    parent = list(range(M))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return [find(m) for m in range(M)]


def generate_synthetic(spec: SyntheticSpec) -> tuple[MultiTaskDataset, CoefficientMatrix]:
    """Random sparse multi-task regression problem with known coefficients.

    A random set of ``ceil(sparsity * d)`` feature rows is active for every
    task. Tasks linked (directly or transitively) through ``spec.edges``
    share one coefficient column.
    """
    rng = np.random.default_rng(spec.seed)
    k = math.ceil(spec.sparsity * spec.d)
    support = np.sort(rng.choice(spec.d, size=k, replace=False))
    comp = _components(spec.M, spec.edges)
    W = np.zeros((spec.d, spec.M))
    cols = {}
    for m in range(spec.M):
        if comp[m] not in cols:
            w = np.zeros(spec.d)
            w[support] = rng.standard_normal(k)
            # keep active coefficients clear of zero
            w[support] += np.where(w[support] >= 0, 0.5, -0.5)
            cols[comp[m]] = w
        W[:, m] = cols[comp[m]]

    width = len(str(spec.n - 1))
    ids = tuple(f"s{j:0{width}d}" for j in range(spec.n))
    names = tuple(f"task{m}" for m in range(spec.M))
    tasks = []
    for m in range(spec.M):
        X = rng.standard_normal((spec.n, spec.d))
        Y = X @ W[:, m]
        if spec.noise_sigma > 0:
            Y = Y + spec.noise_sigma * rng.standard_normal(spec.n)
        tasks.append(TaskDataset(m, names[m], X, Y, ids))
    truth = CoefficientMatrix(W, names, meta={"synthetic": True})
    return MultiTaskDataset(tuple(tasks)), truth
