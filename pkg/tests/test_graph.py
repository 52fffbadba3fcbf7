import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmtl.data import MultiTaskDataset, SyntheticSpec, TaskDataset, generate_synthetic
from gsmtl.graph import (
    GraphError,
    TaskGraph,
    coefficient_correlation,
    estimate_structure,
    graph_penalty,
    graph_penalty_pairwise,
    graph_penalty_trace,
    structure_matrix,
)
from gsmtl.models import lasso_fit
from oracles import laplacian_by_degree


def test_single_edge():
    g = structure_matrix(2, [(0, 1)])
    np.testing.assert_array_equal(g.S, [[1], [-1]])
    np.testing.assert_array_equal(g.L, [[1, -1], [-1, 1]])


def test_complete_graph_on_three():
    g = structure_matrix(3, [(0, 1), (0, 2), (1, 2)])
    assert g.S.shape == (3, 3)
    np.testing.assert_array_equal(g.L, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_empty_graph():
    g = structure_matrix(4, [])
    assert g.S.shape == (4, 0)
    np.testing.assert_array_equal(g.L, np.zeros((4, 4)))


def test_edges_are_normalized():
    assert structure_matrix(3, [(2, 0)]).edges == ((0, 2),)


@pytest.mark.parametrize("edges", [[(1, 1)], [(0, 3)], [(-1, 0)], [(0, 1), (1, 0)]])
def test_bad_edges(edges):
    with pytest.raises(GraphError):
        structure_matrix(3, edges)


edge_sets = st.integers(1, 6).flatmap(
    lambda M: st.tuples(
        st.just(M),
        st.sets(st.tuples(st.integers(0, M - 1), st.integers(0, M - 1)).filter(lambda e: e[0] < e[1])),
    )
)


@settings(max_examples=60)
@given(edge_sets)
def test_structure_invariants(case):
    M, edges = case
    g = structure_matrix(M, sorted(edges))
    assert np.all(g.S.sum(axis=0) == 0)
    assert np.all(np.count_nonzero(g.S, axis=0) == 2)
    np.testing.assert_allclose(g.L, g.S @ g.S.T, atol=1e-12)
    np.testing.assert_array_equal(g.L, laplacian_by_degree(M, edges))
    assert np.all(np.linalg.eigvalsh(g.L) >= -1e-10)
    np.testing.assert_allclose(g.L @ np.ones(M), 0, atol=1e-12)


@settings(max_examples=60)
@given(edge_sets, st.integers(0, 2**32 - 1))
def test_penalty_forms_agree(case, seed):
    M, edges = case
    g = structure_matrix(M, sorted(edges))
    W = np.random.default_rng(seed).standard_normal((5, M))
    p = graph_penalty(W, g)
    assert p >= 0
    assert abs(p - graph_penalty_pairwise(W, g)) <= 1e-10 * max(1, p)
    assert abs(p - graph_penalty_trace(W, g)) <= 1e-10 * max(1, p)


def test_penalty_examples():
    g = structure_matrix(2, [(0, 1)])
    assert graph_penalty(np.array([[1.0, 1.0], [2.0, 2.0]]), g) == 0
    assert graph_penalty(np.array([[1.0, 0.0], [0.0, 1.0]]), g) == 2
    assert graph_penalty(np.ones((3, 4)) * 7, structure_matrix(4, [])) == 0
    with pytest.raises(GraphError):
        graph_penalty(np.ones((3, 3)), g)


def test_penalty_zero_iff_connected_columns_equal(rng):
    g = structure_matrix(3, [(0, 2)])
    W = rng.standard_normal((4, 3))
    assert graph_penalty(W, g) > 0
    W[:, 2] = W[:, 0]
    assert graph_penalty(W, g) == 0


def test_json_round_trip(tmp_path):
    g = structure_matrix(4, [(0, 1), (2, 3)])
    g.save(tmp_path / "g.json")
    back = TaskGraph.load(tmp_path / "g.json")
    assert back.M == 4 and back.edges == g.edges
    np.testing.assert_array_equal(back.L, g.L)


def _shared_pair_dataset():
    # tasks 0 and 1 share coefficients; task 2 is independent
    ds, W = generate_synthetic(SyntheticSpec(n=60, d=15, M=3, sparsity=0.4, edges=((0, 1),), seed=11))
    return ds, W


def test_estimate_structure_finds_shared_pair():
    ds, W = _shared_pair_dataset()
    lam = 0.5
    # oracle: correlations computed directly from independent per-task fits
    fits = np.column_stack([lasso_fit(t.X, t.Y, lam) for t in ds.tasks])
    fits /= np.linalg.norm(fits, axis=0)
    R = np.corrcoef(fits.T)
    expected = [(a, b) for a in range(3) for b in range(a + 1, 3) if abs(R[a, b]) >= 0.9]
    assert expected == [(0, 1)]
    assert estimate_structure(ds, lam, 0.9).edges == ((0, 1),)


def test_estimate_structure_threshold_zero_is_complete():
    ds, _ = _shared_pair_dataset()
    assert estimate_structure(ds, 0.5, 0.0).edges == ((0, 1), (0, 2), (1, 2))


def test_estimate_structure_single_task():
    ds, _ = generate_synthetic(SyntheticSpec(n=10, d=4, M=1, seed=0))
    assert estimate_structure(ds, 0.1).edges == ()


def test_estimate_structure_skips_zero_fits():
    ds, _ = _shared_pair_dataset()
    t = ds.tasks[2]
    zeroed = TaskDataset(2, t.name, t.X, np.zeros(t.n), t.sample_ids)
    ds = MultiTaskDataset((ds.tasks[0], ds.tasks[1], zeroed))
    with pytest.warns(RuntimeWarning):
        g = estimate_structure(ds, 0.5, 0.0)
    assert g.edges == ((0, 1),) and g.warnings


def test_estimate_structure_relabel_symmetry():
    ds, _ = _shared_pair_dataset()
    perm = [2, 0, 1]
    relabeled = MultiTaskDataset(
        tuple(TaskDataset(i, ds.tasks[p].name, ds.tasks[p].X, ds.tasks[p].Y, ds.sample_ids) for i, p in enumerate(perm))
    )
    inv = {p: i for i, p in enumerate(perm)}
    got = estimate_structure(relabeled, 0.5, 0.9).edges
    mapped = tuple(sorted(tuple(sorted((inv[a], inv[b]))) for a, b in estimate_structure(ds, 0.5, 0.9).edges))
    assert got == mapped


def test_estimate_structure_needs_equal_d():
    ids = ("a", "b")
    ds = MultiTaskDataset((TaskDataset(0, "x", np.ones((2, 2)), [1, 2], ids), TaskDataset(1, "y", np.ones((2, 3)), [1, 2], ids)))
    with pytest.raises(GraphError):
        estimate_structure(ds, 0.1)


def test_correlation_handles_zero_columns():
    W = np.array([[1.0, 0.0, 2.0], [2.0, 0.0, 4.0], [0.0, 0.0, 0.5]])
    R = coefficient_correlation(W)
    assert np.isnan(R[1, 1]) and np.isnan(R[0, 1])
    assert R[0, 0] == pytest.approx(1.0)
