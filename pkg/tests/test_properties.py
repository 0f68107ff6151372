from __future__ import annotations

import csv

import numpy as np
import pytest

from pheat.errors import DisconnectedError, NotAProjectionError
from pheat.fixtures import get_fixture, path
from pheat.partitions import Partition, averaging_matrix
from pheat.properties import (
    PropertyReport,
    check_bipartite_spectrum,
    check_intertwining,
    check_invariance_criterion,
    check_irreducibility_witness,
    check_linf_contraction,
    check_lq_contraction,
    check_order_preservation,
    check_positivity,
    check_range_invariance,
    check_scalar_monotonicity,
    write_reports,
)
from pheat.solver import SolverConfig


def test_invariance_identity_passes(p4):
    assert check_invariance_criterion(p4, 3.0, np.eye(4), samples=10).passed


def test_invariance_shorting_fails_with_index_witness():
    fx = get_fixture("p4")
    P = averaging_matrix(fx.graph, fx.partitions["shorting"])
    for p in (1.5, 2.0, 3.0):
        rep = check_invariance_criterion(fx.graph, p, P, samples=10)
        assert not rep.passed
        assert rep.witness == (1, 2, 3, 4)
        assert "(1, 2, 3, 4)" in rep.summary_line()


def test_invariance_almost_equitable_passes():
    fx = get_fixture("comb_10")
    P = averaging_matrix(fx.graph, fx.partitions["rows"])
    assert check_invariance_criterion(fx.graph, 3.0, P, samples=20).passed


def test_invariance_rejects_non_projection(p4):
    with pytest.raises(NotAProjectionError):
        check_invariance_criterion(p4, 2.0, 2 * np.eye(4))
    with pytest.raises(NotAProjectionError):
        check_invariance_criterion(p4, 2.0, np.eye(3))


def test_submarkovian_on_p4(p4):
    cfg = SolverConfig(3.0, 0.05, 0.5)
    assert check_order_preservation(p4, cfg, 3).passed
    assert check_positivity(p4, cfg, 3).passed
    cfg = SolverConfig(1.5, 0.05, 0.5)
    assert check_linf_contraction(p4, cfg, 3).passed
    assert check_lq_contraction(p4, cfg, 1.0, 3).passed
    assert check_lq_contraction(p4, cfg, 2.0, 3).passed


def test_linf_contraction_matches_two_node_kernel():
    # f0 = (1, 0) vs 0: the sup-distance is (1 + r^n) / 2 with r = 1 / (1 + 2 dt)
    from pheat.solver import solve_heat
    g = path(2)
    dt = 0.01
    traj = solve_heat(g, [1.0, 0.0], SolverConfig(2.0, dt, 1.0))
    sup = np.max(np.abs(traj.states), axis=1)
    n = np.arange(len(sup))
    assert np.allclose(sup, (1 + (1 / (1 + 2 * dt)) ** n) / 2, atol=1e-12)
    assert abs(sup[-1] - (1 + np.exp(-2.0)) / 2) < 1e-2


def test_range_invariance_tree():
    fx = get_fixture("binary_tree_3")
    P = averaging_matrix(fx.graph, fx.partitions["spheres"])
    assert check_range_invariance(fx.graph, SolverConfig(3.0, 0.05, 0.5), P, samples=2).passed


def test_range_invariance_fails_for_shorting():
    fx = get_fixture("p4")
    P = averaging_matrix(fx.graph, fx.partitions["shorting"])
    assert not check_range_invariance(fx.graph, SolverConfig(2.0, 0.05, 0.5), P, samples=2).passed


def test_intertwining_identity_bit_exact(p4):
    rep = check_intertwining(p4, p4, np.eye(4), SolverConfig(3.0, 0.05, 0.5), samples=2, budget=0.0)
    assert rep.passed and rep.max_violation == 0


def test_intertwining_rotation_and_averaging():
    fx = get_fixture("c4")
    cfg = SolverConfig(3.0, 1e-3, 0.2)
    O = fx.generators["rotation"][0]
    assert check_intertwining(fx.graph, fx.graph, O.matrix(), cfg, samples=1, budget=1e-6).passed
    t = get_fixture("binary_tree_3")
    P = averaging_matrix(t.graph, t.partitions["spheres"])
    assert check_intertwining(t.graph, t.graph, P, SolverConfig(2.0, 0.01, 0.5), samples=2,
                              budget=1e-8).passed


def test_intertwining_detects_non_automorphism(p4):
    from pheat.partitions import permutation_from_cycles
    O = permutation_from_cycles(p4, [["v1", "v2"]])
    rep = check_intertwining(p4, p4, O.matrix(), SolverConfig(2.0, 0.05, 0.5), samples=1, budget=1e-6)
    assert not rep.passed


def test_irreducibility_examples():
    rep = check_irreducibility_witness(path(2), 2.0, [["v1"]])
    assert rep.passed
    v0, v1, x = rep.witness["{v1}"]
    assert (v0, v1) == ("v1", "v2") and x == 2.0
    rep = check_irreducibility_witness(path(4), 3.0, [["v1", "v2"]])
    assert rep.passed and rep.witness["{v1,v2}"][2] is not None
    assert check_irreducibility_witness(get_fixture("binary_tree_2").graph, 1.5).passed
    with pytest.raises(DisconnectedError):
        check_irreducibility_witness(get_fixture("p4_p3").graph, 2.0)


def test_scalar_monotonicity_small():
    rep = check_scalar_monotonicity(samples=500, seed=1)
    assert rep.passed and rep.fixtures_tested == 500


def test_bipartite_spectrum():
    assert check_bipartite_spectrum(get_fixture("p4").graph, 3.0, starts=16).passed
    with pytest.raises(ValueError):
        check_bipartite_spectrum(get_fixture("k3").graph, 2.0)


def test_report_bookkeeping_and_csv(tmp_path):
    a = PropertyReport("a")
    a.record("x", -1.0)
    b = PropertyReport("b", budget=0.5)
    b.record("y", 0.25, witness=(1, 2))
    b.record("z", 0.5)
    assert a.passed and not b.passed and b.witness == (1, 2)
    merged = PropertyReport("m").merge(a).merge(b)
    assert merged.fixtures_tested == 3 and len(merged.failures) == 2
    write_reports([a, b], tmp_path / "r.csv", tmp_path / "s.txt")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["property", "fixture", "margin"]
    assert rows[1][:2] == ["a", "all"] and [r[1] for r in rows[2:]] == ["y", "z"]
    assert (tmp_path / "s.txt").read_text().splitlines()[1].startswith("FAIL b")


def test_one_cell_projector_passes(p4):
    P = averaging_matrix(p4, Partition.whole(p4))
    assert check_invariance_criterion(p4, 1.5, P, samples=10).passed
