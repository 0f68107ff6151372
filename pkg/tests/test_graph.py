from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_graph
from pheat.errors import (
    DuplicateNodeError,
    GraphFileError,
    NonpositiveWeightError,
    NotUnweightedError,
    ParallelEdgeError,
    SelfLoopError,
    UnknownNodeError,
)
from pheat.fixtures import complete, complete_bipartite, get_fixture, path, star
from pheat.graph import (
    Exhaustion,
    boundary_edges,
    build_graph,
    connected_components,
    degree,
    degrees,
    disjoint_union,
    flip_edges,
    format_graph,
    induced_subgraph,
    is_connected,
    line_graph,
    orient_bipartite,
    parse_graph,
    read_graph,
    replace_weights,
    semiregular_bipartite_check,
    two_coloring,
    uniform_local_finiteness_ratio,
    write_graph,
)


def test_p4_basic(p4):
    assert (p4.n_nodes, p4.n_edges) == (4, 3)
    assert p4.edge_ids == [("v1", "v2"), ("v2", "v3"), ("v3", "v4")]
    assert p4.is_unweighted()


def test_arrays_are_read_only(p4):
    with pytest.raises(ValueError):
        p4.a[0] = 5.0


@pytest.mark.parametrize("nodes,edges,exc", [
    (["a", "a"], [], DuplicateNodeError),
    (["a", "b"], [("a", "a")], SelfLoopError),
    (["a", "b"], [("a", "b"), ("b", "a")], ParallelEdgeError),
    (["a", "b"], [("a", "c")], UnknownNodeError),
])
def test_build_errors(nodes, edges, exc):
    with pytest.raises(exc):
        build_graph(nodes, edges)


def test_build_error_names_element():
    with pytest.raises(SelfLoopError, match="b"):
        build_graph(["a", "b"], [("b", "b")])
    with pytest.raises(NonpositiveWeightError):
        build_graph(["a", "b"], [("a", "b")], mu=[0.0])
    with pytest.raises(NonpositiveWeightError):
        build_graph(["a", "b"], [("a", "b")], d=[1.0, -1.0])


def test_canonical_orientation():
    g = build_graph(["a", "b", "c"], [("b", "a"), ("c", "b")], orient="canonical")
    assert g.edge_ids == [("a", "b"), ("b", "c")]


def test_degree(p4):
    assert degree(p4, "v1", "out") == 1
    assert degree(p4, "v1", "in") == 0
    assert degree(p4, "v2", "total") == 2
    with pytest.raises(UnknownNodeError):
        degree(p4, "zz")
    assert degrees(p4).tolist() == [1, 2, 2, 1]


def test_local_finiteness_ratio(p4):
    assert uniform_local_finiteness_ratio(p4) == 2
    assert uniform_local_finiteness_ratio(build_graph(["a", "b"], [("a", "b")], mu=[5.0])) == 5
    assert uniform_local_finiteness_ratio(replace_weights(p4, nu=2.0)) == 1


def test_induced_subgraph(p4):
    h = induced_subgraph(p4, ["v1", "v2", "v3"])
    assert h.edge_ids == [("v1", "v2"), ("v2", "v3")]
    h = induced_subgraph(p4, ["v1", "v3"])
    assert (h.n_nodes, h.n_edges) == (2, 0)
    h = induced_subgraph(p4, p4.node_ids)
    assert h.edge_ids == p4.edge_ids and h.node_ids == p4.node_ids
    with pytest.raises(UnknownNodeError):
        induced_subgraph(p4, ["v9"])


def test_boundary_edges(p4):
    assert boundary_edges(p4, ["v1", "v2"]) == [("v2", "v3")]
    assert boundary_edges(p4, p4.node_ids) == []
    assert len(boundary_edges(star(3), ["c"])) == 3


def test_components():
    assert len(connected_components(path(4))) == 1
    assert len(connected_components(get_fixture("p4_p3").graph)) == 2
    assert len(connected_components(get_fixture("edgeless_5").graph)) == 5
    assert not is_connected(get_fixture("p4_p3").graph)


def test_disjoint_union_prefixes_clash():
    g = disjoint_union(path(2), path(3, "w"))
    assert g.n_nodes == 5 and g.n_edges == 3


def test_line_graph():
    lp = line_graph(path(4))
    assert (lp.n_nodes, lp.n_edges) == (3, 2)
    lk = line_graph(star(3))
    assert (lk.n_nodes, lk.n_edges) == (3, 3)
    ls = line_graph(path(2))
    assert (ls.n_nodes, ls.n_edges) == (1, 0)
    # lower edge index -> higher edge index
    assert lp.edge_ids == [("v1-v2", "v2-v3"), ("v2-v3", "v3-v4")]
    with pytest.raises(NotUnweightedError):
        line_graph(replace_weights(path(3), mu=2.0))


def test_semiregular():
    assert semiregular_bipartite_check(path(4)) is None
    info = semiregular_bipartite_check(complete_bipartite(2, 3))
    assert (info.r, info.s) == (3, 2)
    assert set(info.parts[0]) == {"v1", "v2"}
    assert semiregular_bipartite_check(complete(3)) is None
    assert two_coloring(complete(3)) is None


def test_orient_bipartite_normalises():
    g = flip_edges(complete_bipartite(2, 3), [0, 3])
    info = semiregular_bipartite_check(g)
    og = orient_bipartite(g, info)
    assert all(u in info.parts[0] for u, _ in og.edge_ids)


def test_exhaustion():
    g = path(10)
    ex = Exhaustion(g, (3, 6, 10))
    assert len(ex) == 3
    assert ex.level_nodes(0) == ("v1", "v2", "v3")
    assert ex.level_graph(1).n_edges == 5
    assert ex.is_exhaustive()
    with pytest.raises(ValueError):
        Exhaustion(g, (5, 3))


def test_incidence_signs(p4):
    B = p4.incidence.toarray()
    assert B[:, 0].tolist() == [1, -1, 0, 0]


def test_text_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    g = random_graph(rng, 7)
    write_graph(g, tmp_path / "g.graph")
    h = read_graph(tmp_path / "g.graph")
    assert h.node_ids == g.node_ids and h.edge_ids == g.edge_ids
    for k in ("mu", "nu", "a", "d"):
        assert np.array_equal(getattr(h, k), getattr(g, k))
    assert format_graph(h) == format_graph(g)


@pytest.mark.parametrize("text,line", [
    ("node a 1\nnode b 1\nedge a b 1\nedge b a 1\n", 4),
    ("node a 1\nnode a 1\n", 2),
    ("node a 1\n\nedge a q 1\n", 3),
    ("node a 1\nnode b x\n", 2),
    ("node a 1\nnode b 1\nedge a b -1\n", 3),
    ("node a 1\nbogus\n", 2),
])
def test_parse_errors_have_line_numbers(text, line):
    with pytest.raises(GraphFileError, match=f":{line}:"):
        parse_graph(text, "f")


def test_parse_comments_and_optional_weights():
    g = parse_graph("# header\nnode a 1 2  # nu=1, d=2\nnode b 3\nedge a b 4 5\n")
    assert g.nu.tolist() == [1, 3] and g.d.tolist() == [2, 3]
    assert g.mu.tolist() == [4] and g.a.tolist() == [5]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_handshake(seed, n):
    g = random_graph(np.random.default_rng(seed), n)
    assert np.isclose(degrees(g, "mu").sum(), 2 * g.mu.sum())
    assert len(connected_components(g)) == 1
