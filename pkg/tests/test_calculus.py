from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_graph
from pheat.calculus import (
    difference,
    divergence,
    inner,
    norm,
    read_function_csv,
    signless_difference,
    sobolev_norm,
    weighted_norm,
    write_function_csv,
)
from pheat.errors import InvalidExponentError
from pheat.fixtures import path


def test_difference_examples(p4):
    assert difference(p4, [1, 2, 3, 4]).tolist() == [-1, -1, -1]
    assert np.all(difference(p4, np.full(4, 7.3)) == 0)
    x = 0.9
    assert np.allclose(difference(p4, [1, 0.5, 0, x]), [0.5, 0.5, -x])


def test_divergence_examples(p4):
    assert divergence(path(2), [1.0]).tolist() == [1, -1]
    assert divergence(p4, [1, 1, 1]).tolist() == [1, 0, 0, -1]
    assert np.all(divergence(p4, np.zeros(3)) == 0)


def test_signless(p4):
    f = np.array([0.3, -1.2, 2.0, 0.7])
    assert np.array_equal(signless_difference(p4, f, -1.0), difference(p4, f))
    assert signless_difference(path(2), [1, 1], 1.0).tolist() == [2]
    assert signless_difference(p4, [1, -1, 1, -1], 1.0).tolist() == [0, 0, 0]


def test_weighted_norms():
    assert weighted_norm([3, 4], [1, 1], 2) == 5
    assert weighted_norm([1, 1], [2, 3], 1) == 5
    assert weighted_norm([1, 2], [3, 1], math.inf) == 3
    with pytest.raises(InvalidExponentError):
        weighted_norm([1, 2], [1, 1], 0.5)


def test_sobolev_norm(p4):
    assert sobolev_norm(p4, np.full(4, 2.0), 3) == pytest.approx(norm(p4, np.full(4, 2.0)))
    assert sobolev_norm(p4, [1, 2, 3, 4], 2) == pytest.approx(math.sqrt(30) + math.sqrt(3))
    assert sobolev_norm(p4, np.zeros(4), 1.5) == 0


def test_compensated_sum_large_vector():
    x = np.full(100_000, 0.1)
    assert weighted_norm(x, np.ones_like(x), 1) == pytest.approx(10_000.0, rel=1e-14)


def test_csv_roundtrip(tmp_path, p4):
    write_function_csv(tmp_path / "f.csv", p4.node_ids, [0.1, 1 / 3, -2.0, 1e-17])
    assert read_function_csv(tmp_path / "f.csv", p4.node_ids).tolist() == [0.1, 1 / 3, -2.0, 1e-17]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_adjointness(seed, n):
    # <I^T f, u>_{l2} = <f, I u>_{l2}
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    f = rng.standard_normal(g.n_nodes)
    u = rng.standard_normal(g.n_edges)
    assert np.dot(difference(g, f), u) == pytest.approx(np.dot(f, divergence(g, u)), abs=1e-10)
    assert inner(g, f, f) == pytest.approx(norm(g, f) ** 2)
