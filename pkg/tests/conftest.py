import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_csv(tmp_path):
    """Two tasks, three samples, four features, listed in different row orders."""
    ids = ["a", "b", "c"]
    X0 = np.arange(12, dtype=float).reshape(3, 4)
    X1 = -X0 + 0.5
    f0 = write_csv(
        tmp_path / "malignancy.csv",
        ["id", "f0", "f1", "f2", "f3"],
        [[i] + list(r) for i, r in zip(ids, X0)],
    )
    # second file in reverse order: alignment must be by id
    f1 = write_csv(
        tmp_path / "texture.csv",
        ["id", "f0", "f1", "f2", "f3"],
        [[i] + list(r) for i, r in reversed(list(zip(ids, X1)))],
    )
    scores = write_csv(
        tmp_path / "scores.csv",
        ["id", "task", "score"],
        [["a", "malignancy", 2], ["b", "malignancy", 3], ["c", "malignancy", 4],
         ["a", "texture", 5], ["b", "texture", 1], ["c", "texture", 3]],
    )
    return {"features": [f0, f1], "scores": scores, "X0": X0, "X1": X1, "dir": tmp_path}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose the call-phase outcome to fixtures so the acceptance suite can print a verdict
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
