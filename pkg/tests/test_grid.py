import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridwiener import grid
from gridwiener.errors import CaseError
from gridwiener.grid import GridGraph, generate_graph, load_case, neighbor_sets, write_case

from conftest import DESK_RANGES


def write_csvs(tmp_path, edge_rows, node_rows):
    (tmp_path / "edges.csv").write_text("from,to,susceptance\n" + "".join(f"{r}\n" for r in edge_rows))
    (tmp_path / "nodes.csv").write_text("node,inertia,damping\n" + "".join(f"{r}\n" for r in node_rows))
    return tmp_path


def test_two_node_case_loads(tmp_path):
    g = load_case(write_csvs(tmp_path, ["1,2,1.0"], ["1,1,1", "2,1,1"]))
    assert g.node_count == 2
    assert g.edges == ((0, 1),)
    np.testing.assert_array_equal(g.total_susceptance, [1.0, 1.0])


def test_self_loop_rejected(tmp_path):
    with pytest.raises(CaseError, match="self-loop"):
        load_case(write_csvs(tmp_path, ["1,1,0.5"], ["1,1,1"]))


@pytest.mark.parametrize(
    "edges, nodes, match",
    [
        (["1,2,1.0", "2,1,2.0"], ["1,1,1", "2,1,1"], "duplicate"),
        (["1,2,-1.0"], ["1,1,1", "2,1,1"], "susceptance"),
        (["1,2,1.0"], ["1,0,1", "2,1,1"], "inertia"),
        (["1,2,1.0"], ["1,1,0", "2,1,1"], "damping"),
        (["1,3,1.0"], ["1,1,1", "2,1,1"], "unknown node"),
        (["1,2,1.0"], ["1,1,1", "3,1,1"], "contiguous"),
        (["1,2,1.0"], ["1,1,1", "2,1,1", "3,1,1"], "not connected"),
        (["1,2,abc"], ["1,1,1", "2,1,1"], "row 2"),
    ],
)
def test_validation_errors(tmp_path, edges, nodes, match):
    with pytest.raises(CaseError, match=match):
        load_case(write_csvs(tmp_path, edges, nodes))


def test_bad_header_names_file(tmp_path):
    (tmp_path / "edges.csv").write_text("a,b,c\n1,2,1\n")
    (tmp_path / "nodes.csv").write_text("node,inertia,damping\n1,1,1\n2,1,1\n")
    with pytest.raises(CaseError, match="edges.csv"):
        load_case(tmp_path)


def test_missing_file(tmp_path):
    with pytest.raises(CaseError):
        load_case(tmp_path / "nowhere")


def test_zero_parameters_rejected_not_clamped():
    with pytest.raises(CaseError):
        GridGraph(2, ((0, 1),), (1.0,), (0.0, 1.0), (1.0, 1.0))


def test_graph_is_immutable():
    g = generate_graph("path", 3)
    with pytest.raises(ValueError):
        g.susceptance[0] = 5.0
    with pytest.raises(AttributeError):
        g.node_count = 4


def test_path_shape():
    g = generate_graph("path", 3, seed=123)
    assert g.edges == ((0, 1), (1, 2))
    np.testing.assert_array_equal(g.susceptance, [1.0, 1.0])


def test_cycle_shape():
    assert generate_graph("cycle", 4).edge_set == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_star_shape():
    assert generate_graph("star", 5).edge_set == {(0, k) for k in range(1, 5)}


def _cyclomatic(g):
    return len(g.edges) - g.node_count + 1


def _bfs_connected(g):
    adj = {k: set() for k in range(g.node_count)}
    for i, j in g.edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, queue = {0}, deque([0])
    while queue:
        for v in adj[queue.popleft()] - seen:
            seen.add(v)
            queue.append(v)
    return len(seen) == g.node_count


def test_random_loopy_connected_with_loops():
    g = generate_graph("random_loopy", 8, seed=7)
    assert _bfs_connected(g)
    assert len(g.edges) >= 8
    assert _cyclomatic(g) >= 1


@given(st.sampled_from(grid.GRAPH_KINDS), st.integers(4, 15), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_generated_graphs_valid_and_reproducible(kind, n, seed):
    g = generate_graph(kind, n, seed, **DESK_RANGES)
    assert _bfs_connected(g)
    assert g == generate_graph(kind, n, seed, **DESK_RANGES)
    lo, hi = DESK_RANGES["b_range"]
    assert ((g.susceptance >= lo) & (g.susceptance <= hi)).all()
    if kind != "random_loopy":
        assert g.edges == generate_graph(kind, n, seed + 1, **DESK_RANGES).edges
    else:
        assert len(g.edges) >= n


@pytest.mark.parametrize("kind, n", [("cycle", 2), ("random_loopy", 3), ("path", 1)])
def test_generate_too_small(kind, n):
    with pytest.raises(ValueError):
        generate_graph(kind, n)


def test_neighbor_sets_path():
    ns = neighbor_sets(generate_graph("path", 3))
    assert ns.neighbors[1] == {0, 2}
    assert ns.strict_two_hop(0) == {2}
    assert ns.strict_two_hop_pairs() == {(0, 2)}


def test_neighbor_sets_triangle():
    g = GridGraph(3, ((0, 1), (1, 2), (0, 2)), (1.0, 1.0, 1.0), (1.0,) * 3, (1.0,) * 3)
    ns = neighbor_sets(g)
    assert all(not ns.strict_two_hop(j) for j in range(3))


@given(st.sampled_from(grid.GRAPH_KINDS), st.integers(4, 12), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_neighbor_invariants(kind, n, seed):
    g = generate_graph(kind, n, seed, **DESK_RANGES)
    ns = neighbor_sets(g)
    for j in range(n):
        assert not (ns.neighbors[j] & ns.strict_two_hop(j))
        for i in ns.neighbors[j]:
            assert j in ns.neighbors[i]
        for i in ns.strict_two_hop(j):
            assert j in ns.strict_two_hop(i)
    np.testing.assert_allclose(g.recomputed_total_susceptance(), g.total_susceptance, rtol=1e-15)
    L = g.laplacian()
    np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)


@given(st.integers(4, 10), st.integers(0, 1000), st.randoms(use_true_random=False))
@settings(max_examples=30, deadline=None)
def test_relabel_permutes_laplacian(n, seed, rnd):
    g = generate_graph("random_loopy", n, seed, **DESK_RANGES)
    perm = list(range(n))
    rnd.shuffle(perm)
    h = g.relabel(perm)
    P = np.eye(n)[perm]  # row k has a one in column perm[k]
    np.testing.assert_allclose(h.laplacian(), P.T @ g.laplacian() @ P)
    np.testing.assert_array_equal(h.inertia[perm], g.inertia)


@given(st.sampled_from(grid.GRAPH_KINDS), st.integers(4, 12), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_write_load_roundtrip(tmp_path_factory, kind, n, seed):
    g = generate_graph(kind, n, seed, **DESK_RANGES)
    out = write_case(g, tmp_path_factory.mktemp("case"))
    assert load_case(out) == g


def test_ieee39_bundled_case():
    g = load_case(grid.bundled_case("ieee39"))
    assert g.node_count == 39
    assert len(g.edges) == 46
    # generator buses carry real machine inertia, the rest the small default
    assert np.count_nonzero(g.inertia != 0.01) == 10
    assert (g.inertia[:29] == 0.01).all() and (g.damping[:29] == 0.01).all()
    assert len(neighbor_sets(g).neighbors[24]) == 3


def test_unknown_bundled_case():
    with pytest.raises(CaseError):
        grid.bundled_case("nope")
