import numpy as np
import pytest

from dst.errors import (
    DisconnectedError,
    DuplicateEdgeError,
    GraphError,
    NonpositiveWeightError,
    SelfLoopError,
)
from dst.graph import (
    build_graph,
    complete_graph,
    laplacian,
    path_graph,
    read_graph,
    star_graph,
    write_graph,
)

from conftest import random_connected_graph, rng_for


def test_build_p2():
    g = build_graph(2, [(0, 1, 1.0)])
    assert g.n == 2 and g.edges == ((0, 1, 1.0),)


def test_build_k5_table_weights():
    g = complete_graph(5, 1 / 5)
    assert g.m == 10
    assert np.allclose(g.weights(), 0.2)


def test_duplicate_edge_rejected():
    with pytest.raises(DuplicateEdgeError):
        build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 1, 2.0)])
    with pytest.raises(DuplicateEdgeError):
        build_graph(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)])


def test_self_loop_rejected():
    with pytest.raises(SelfLoopError):
        build_graph(3, [(0, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0)])


def test_out_of_range_rejected():
    with pytest.raises(GraphError):
        build_graph(3, [(0, 3, 1.0), (0, 1, 1.0), (1, 2, 1.0)])


def test_disconnected_rejected():
    with pytest.raises(DisconnectedError):
        build_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])


def test_nonpositive_weight_strict_vs_not():
    with pytest.raises(NonpositiveWeightError):
        build_graph(2, [(0, 1, 0.0)])
    with pytest.raises(NonpositiveWeightError):
        build_graph(3, [(0, 1, 1.0), (1, 2, -0.5)], strict=False)
    # zero weight allowed non-strict as long as the positive part spans
    g = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 0.0)], strict=False)
    assert g.m == 3
    with pytest.raises(DisconnectedError):
        build_graph(3, [(0, 1, 1.0), (1, 2, 0.0)], strict=False)


def test_laplacian_p2():
    L = laplacian(path_graph(2))
    assert np.array_equal(L, np.array([[1.0, -1.0], [-1.0, 1.0]]))


def test_laplacian_triangle():
    L = laplacian(complete_graph(3))
    assert np.allclose(np.diag(L), 2.0)
    off = L - np.diag(np.diag(L))
    assert np.allclose(off, -(np.ones((3, 3)) - np.eye(3)))


def test_laplacian_star_weighted_degrees():
    L = laplacian(star_graph(5, 1 / 3))
    assert L[0, 0] == pytest.approx(4 / 3)
    assert np.allclose(np.diag(L)[1:], 1 / 3)


def test_laplacian_row_sums_random():
    rng = rng_for(11)
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(2, 30)))
        L = laplacian(g)
        assert np.max(np.abs(L.sum(axis=1))) <= 1e-12 * max(1.0, np.max(np.abs(L)))
        assert np.array_equal(L, L.T)


def test_graph_file_roundtrip(tmp_path):
    rng = rng_for(12)
    g = random_connected_graph(rng, 9)
    path = tmp_path / "g.txt"
    write_graph(g, path)
    g2 = read_graph(path)
    assert g2.n == g.n
    assert g2.edges == g.edges  # 17 significant digits round-trip exactly


def test_graph_file_malformed(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1\n0 x 1.0\n")
    with pytest.raises(GraphError):
        read_graph(bad)


def test_csr_adjacency_matches_edges():
    rng = rng_for(13)
    g = random_connected_graph(rng, 8)
    ptr, nbr, wts = g.csr_adjacency()
    seen = set()
    for i in range(g.n):
        for a in range(ptr[i], ptr[i + 1]):
            seen.add((min(i, int(nbr[a])), max(i, int(nbr[a])), float(wts[a])))
    assert seen == set(g.edges)
