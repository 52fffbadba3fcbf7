from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Per-task linear regressors stored as the columns of a d x M matrix."""

    values: np.ndarray
    task_names: tuple[str, ...]
    hyperparams: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("coefficient values must be a d x M matrix")
        names = tuple(self.task_names)
        if values.shape[1] != len(names):
            raise ValueError(
                f"{values.shape[1]} coefficient columns for {len(names)} task names"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficient matrix has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "task_names", names)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.values.shape[1]

    def column(self, task_name: str) -> np.ndarray:
        try:
            idx = self.task_names.index(task_name)
        except ValueError:
            raise KeyError(f"unknown task {task_name!r}") from None
        return self.values[:, idx]

    def to_dict(self) -> dict:
        out = {
            "task_names": list(self.task_names),
            "d": self.d,
            "columns": [self.values[:, m].tolist() for m in range(self.M)],
            "hyperparams": dict(self.hyperparams),
        }
        out.update(self.meta)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "CoefficientMatrix":
        names = doc["task_names"]
        d = int(doc["d"])
        cols = doc["columns"]
        if len(cols) != len(names):
            raise ValueError("model has a different number of columns and task names")
        if any(len(c) != d for c in cols):
            raise ValueError(f"model columns do not all have length d={d}")
        values = np.array(cols, dtype=float).reshape(len(names), d).T
        meta = {k: v for k, v in doc.items() if k not in ("task_names", "d", "columns", "hyperparams")}
        return cls(values, tuple(names), dict(doc.get("hyperparams", {})), meta)

    def save(self, path) -> None:
        # json writes floats with repr, which round-trips exactly
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CoefficientMatrix":
        return cls.from_dict(json.loads(Path(path).read_text()))
