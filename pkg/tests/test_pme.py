from __future__ import annotations

import numpy as np
import pytest

from pheat.errors import InvalidExponentError, NotSemiregularError, OrientationMismatchError
from pheat.fixtures import complete_bipartite, get_fixture, path, star
from pheat.graph import flip_edges
from pheat.pme import make_setup, pme_residual, pressure_transform, semiregular_identity_check
from pheat.solver import SolverConfig, solve_heat


def test_setup_star():
    setup = make_setup(star(3), 3.0)
    assert (setup.r, setup.s, setup.pi) == (3, 1, 2.0)
    assert (setup.line.n_nodes, setup.line.n_edges) == (3, 3)


def test_setup_errors():
    with pytest.raises(NotSemiregularError):
        make_setup(path(4), 3.0)
    with pytest.raises(InvalidExponentError):
        make_setup(star(3), 1.0)


@pytest.mark.parametrize("g", [star(3), complete_bipartite(2, 3), complete_bipartite(3, 3), path(2)])
def test_semiregular_identity(g):
    assert semiregular_identity_check(g).passed


def test_semiregular_identity_rejects():
    with pytest.raises(NotSemiregularError):
        semiregular_identity_check(get_fixture("k3").graph)


def test_pressure_transform_examples():
    g = path(2)
    setup = make_setup(g, 3.0)
    traj = solve_heat(setup.graph, [2.0, -1.0], SolverConfig(3.0, 0.1, 0.5))
    psi = pressure_transform(traj, setup)
    assert np.allclose(psi.states[:, 0], traj.states[:, 0] - traj.states[:, 1])
    const = solve_heat(setup.graph, [4.0, 4.0], SolverConfig(3.0, 0.1, 0.5))
    assert np.all(pressure_transform(const, setup).states == 0)
    assert np.array_equal(psi.energies, traj.energies)


def test_pressure_transform_orientation_mismatch():
    setup = make_setup(star(3), 3.0)
    other = flip_edges(setup.graph, [0])
    traj = solve_heat(other, [1.0, 0.0, 0.0, 0.0], SolverConfig(3.0, 0.1, 0.2))
    with pytest.raises(OrientationMismatchError):
        pressure_transform(traj, setup)


def test_pme_residual_zero_data():
    setup = make_setup(star(3), 3.0)
    traj = solve_heat(setup.graph, np.zeros(4), SolverConfig(3.0, 0.01, 0.1))
    assert np.all(pme_residual(pressure_transform(traj, setup), setup) == 0)


@pytest.mark.parametrize("name,p", [("star_k13", 3.0), ("star_k13", 2.5), ("k23", 3.0), ("k23", 1.5)])
def test_pme_residual_small(name, p):
    setup = make_setup(get_fixture(name).graph, p)
    f0 = np.random.default_rng(11).standard_normal(setup.graph.n_nodes)
    cfg = SolverConfig(p, 1e-2, 0.5)
    psi = pressure_transform(solve_heat(setup.graph, f0, cfg), setup)
    assert psi.graph is setup.line
    assert np.max(pme_residual(psi, setup)) <= 10 * cfg.inner_tol


def test_pme_residual_with_forcing():
    setup = make_setup(star(3), 3.0)
    force = lambda t: np.array([np.sin(t), 0.0, 1.0, -0.5])  # noqa: E731
    cfg = SolverConfig(3.0, 1e-2, 0.3, forcing=force)
    psi = pressure_transform(solve_heat(setup.graph, [0.5, 0.0, -1.0, 0.2], cfg), setup)
    assert np.max(pme_residual(psi, setup, force)) <= 10 * cfg.inner_tol
    # dropping the forcing term is visible in the residual
    assert np.max(pme_residual(psi, setup)) > 1e-3
