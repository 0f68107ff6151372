from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_graph
from pheat.errors import (
    GraphFileError,
    InvalidPartitionError,
    NotABijectionError,
    NotAutomorphismError,
    NotEquitableError,
)
from pheat.fixtures import binary_tree, binary_tree_swaps, cycle, get_fixture, path
from pheat.graph import adjacency, replace_weights
from pheat.operators import energy
from pheat.partitions import (
    NodePermutation,
    Partition,
    averaging_matrix,
    cell_average,
    format_partition,
    format_permutation,
    is_node_automorphism,
    orbit_partition,
    parse_partition,
    parse_permutation,
    permutation_from_cycles,
    quotient_graph,
    verify_almost_equitable,
)


def test_automorphism_examples(p4):
    assert is_node_automorphism(p4, NodePermutation.identity(p4))
    c4 = cycle(4)
    assert is_node_automorphism(c4, permutation_from_cycles(c4, [["v1", "v2", "v3", "v4"]]))
    chk = is_node_automorphism(p4, permutation_from_cycles(p4, [["v1", "v2"]]))
    assert not chk and chk.witness == ("v2", "v3")


def test_automorphism_checks_node_weights(p4):
    g = replace_weights(p4, d=[1.0, 1.0, 1.0, 2.0])
    refl = permutation_from_cycles(g, [["v1", "v4"], ["v2", "v3"]])
    assert not is_node_automorphism(g, refl)


def test_not_a_bijection(p4):
    with pytest.raises(NotABijectionError):
        NodePermutation.from_mapping(p4, {"v1": "v2", "v3": "v2"})


def test_permutation_matrix(p4):
    O = permutation_from_cycles(p4, [["v1", "v4"], ["v2", "v3"]])
    f = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(O.matrix() @ f, O.compose_with(f))
    assert O.compose_with(f).tolist() == [4, 3, 2, 1]


def test_orbits():
    p4 = path(4)
    assert orbit_partition(p4, [NodePermutation.identity(p4)]).cells == (("v1",), ("v2",), ("v3",), ("v4",))
    c4 = cycle(4)
    assert len(orbit_partition(c4, [permutation_from_cycles(c4, [["v1", "v2", "v3", "v4"]])])) == 1
    t = binary_tree(2)
    cells = orbit_partition(t, binary_tree_swaps(t, 2)).cells
    assert sorted(map(len, cells)) == [1, 2, 4]
    with pytest.raises(NotAutomorphismError):
        orbit_partition(p4, [permutation_from_cycles(p4, [["v1", "v2"]])])


def test_invalid_partitions(p4):
    for cells in ((("v1", "v2"), ("v2", "v3", "v4")),  # overlap
                  (("v1",), ("v2",))):  # not covering
        with pytest.raises(InvalidPartitionError):
            Partition(cells).labels(p4)


def test_singletons_equitable():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 6)
    cert = verify_almost_equitable(g, Partition.singletons(g))
    assert cert.ok and cert.equitable
    A = adjacency(g, "a").toarray()
    assert np.allclose(cert.coefficients, A / g.d[:, None])


def test_whole_partition_almost_equitable(p4):
    cert = verify_almost_equitable(p4, Partition.whole(p4))
    assert cert.ok


def test_tree_spheres():
    fx = get_fixture("binary_tree_3")
    cert = verify_almost_equitable(fx.graph, fx.partitions["spheres"])
    assert cert.equitable
    q = quotient_graph(fx.graph, fx.partitions["spheres"], cert)
    assert q.edges == {(0, 1): 2.0, (1, 0): 1.0, (1, 2): 2.0, (2, 1): 1.0, (2, 3): 2.0, (3, 2): 1.0}
    assert q.loops == {}


def test_quotient_examples(p4):
    q = quotient_graph(p4, Partition.singletons(p4))
    assert np.array_equal(q.matrix(), adjacency(p4).toarray())
    c4 = cycle(4)
    q1 = quotient_graph(c4, Partition.whole(c4))
    assert q1.n_nodes == 1 and q1.edges == {} and q1.loops == {0: 2.0}
    # on a non-regular graph the one-cell loop weight is not constant
    with pytest.raises(NotEquitableError):
        quotient_graph(p4, Partition.whole(p4))


def test_comb_rows_almost_but_not_equitable():
    fx = get_fixture("comb_10")
    cert = verify_almost_equitable(fx.graph, fx.partitions["rows"])
    assert cert.ok and not cert.equitable
    with pytest.raises(NotEquitableError):
        quotient_graph(fx.graph, fx.partitions["rows"], cert)


def test_shorting_not_almost_equitable():
    fx = get_fixture("p4")
    cert = verify_almost_equitable(fx.graph, fx.partitions["shorting"])
    assert not cert.ok and cert.witness is not None


def test_cell_average_examples(p4):
    part = get_fixture("p4").partitions["shorting"]
    assert cell_average(p4, part, [1, 2, 3, 4]).tolist() == [1, 2.5, 2.5, 4]
    assert np.array_equal(cell_average(p4, Partition.singletons(p4), [5, 6, 7, 8]), [5, 6, 7, 8])
    assert np.allclose(cell_average(p4, part, np.full(4, 3.3)), 3.3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_properties(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 8)
    lab = rng.integers(0, 3, 8)
    lab[:3] = [0, 1, 2]
    part = Partition(tuple(tuple(g.node_ids[i] for i in np.flatnonzero(lab == k)) for k in range(3)))
    P = averaging_matrix(g, part)
    f, h = rng.standard_normal((2, 8))
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.dot(g.d * (P @ f), h) == pytest.approx(np.dot(g.d * f, P @ h), abs=1e-12)
    assert np.allclose(cell_average(g, part, f), P @ f, atol=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_energy_non_increase_on_equitable(p):
    rng = np.random.default_rng(int(p * 100))
    for name, pname in (("binary_tree_3", "spheres"), ("comb_10", "rows"), ("p4", "reflection")):
        fx = get_fixture(name)
        part = fx.partitions[pname]
        for _ in range(20):
            f = rng.standard_normal(fx.graph.n_nodes)
            assert energy(fx.graph, cell_average(fx.graph, part, f), p) <= energy(fx.graph, f, p) + 1e-12


def test_automorphism_energy_invariance():
    fx = get_fixture("binary_tree_3")
    f = np.random.default_rng(0).standard_normal(15)
    for O in fx.generators["child_swaps"]:
        assert energy(fx.graph, O.compose_with(f), 3.0) == pytest.approx(energy(fx.graph, f, 3.0), rel=1e-14)


def test_partition_text_roundtrip(p4):
    part = get_fixture("p4").partitions["shorting"]
    assert parse_partition(format_partition(part)) == part
    with pytest.raises(GraphFileError, match=":2:"):
        parse_partition("cell 0: v1\ncell zero: v2\n")
    with pytest.raises(GraphFileError, match=":2:"):
        parse_partition("cell 0: v1\ncell 0: v2\n")


def test_permutation_text_roundtrip(p4):
    O = permutation_from_cycles(p4, [["v1", "v4"], ["v2", "v3"]])
    assert parse_permutation(format_permutation(p4, O), p4).perm == O.perm
    assert parse_permutation("v1 -> v4\nv4 -> v1\n", p4).perm == (3, 1, 2, 0)
    with pytest.raises(GraphFileError, match=":1:"):
        parse_permutation("v1 -> v9\n", p4)
