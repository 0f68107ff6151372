"""Pressure transform psi = I^T phi and the porous-medium-type equation on the line graph.

On an (r, s)-semiregular bipartite graph oriented from V1 to V2 one has
I^T I = (r + s) Id - Delta_L with Delta_L = D - A of the line graph, so the
edge function psi of a p-heat trajectory satisfies

    psi' = Delta_L psi^pi - (r + s) psi^pi + I^T F,   psi^pi = |psi|^(pi - 1) psi,

with pi = p - 1.  Backward Euler for phi gives the same identity at the
discrete times, which :func:`pme_residual` measures.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .calculus import difference
from .errors import InvalidExponentError, NotSemiregularError, OrientationMismatchError
from .graph import WeightedGraph, adjacency, degrees, line_graph, orient_bipartite, semiregular_bipartite_check
from .operators import spow
from .properties import PropertyReport
from .solver import Trajectory


@dataclass(frozen=True)
class PmeSetup:
    graph: WeightedGraph  # oriented V1 -> V2
    line: WeightedGraph
    r: int
    s: int
    pi: float


def make_setup(g: WeightedGraph, p: float) -> PmeSetup:
    """Orient ``g`` from V1 to V2 and build its line graph; pi = p - 1."""
    pi = float(p) - 1.0
    if not (pi > 0):
        raise InvalidExponentError(f"need p > 1, got {p!r}")
    info = semiregular_bipartite_check(g)
    if info is None:
        raise NotSemiregularError("graph is not semiregular bipartite")
    og = orient_bipartite(g, info)
    return PmeSetup(og, line_graph(og), info.r, info.s, pi)


def pressure_transform(traj: Trajectory, setup: PmeSetup) -> Trajectory:
    """psi_k = I^T phi_k as node functions on the line graph, same time grid."""
    g = traj.graph
    if not (np.array_equal(g.tails, setup.graph.tails) and np.array_equal(g.heads, setup.graph.heads)):
        raise OrientationMismatchError("trajectory graph is not oriented like the setup graph")
    psi = np.array([difference(g, s) for s in traj.states]).reshape(len(traj), g.n_edges)
    L = setup.line
    diss = np.zeros(len(traj))
    for k in range(1, len(traj)):
        dt = traj.times[k] - traj.times[k - 1]
        diss[k] = float(np.sum(((psi[k] - psi[k - 1]) / dt) ** 2))
    # the phi-energy is (1/p) ||psi||_p^p, so it carries over unchanged
    return Trajectory(L, traj.times.copy(), psi, traj.energies.copy(), diss,
                      psi.sum(axis=1), traj.p, None)


def line_laplacian(setup: PmeSetup) -> np.ndarray:
    L = setup.line
    A = adjacency(L, "mu").toarray()
    return np.diag(degrees(L)) - A


def pme_residual(psi_traj: Trajectory, setup: PmeSetup,
                 forcing: Callable[[float], np.ndarray] | None = None) -> np.ndarray:
    """Per-step l2 residual of the discrete porous-medium-type equation (length K)."""
    lap = line_laplacian(setup)
    rs = setup.r + setup.s
    psi = psi_traj.states
    out = np.zeros(len(psi_traj) - 1)
    for k in range(1, len(psi_traj)):
        dt = psi_traj.times[k] - psi_traj.times[k - 1]
        q = spow(psi[k], setup.pi)
        r = (psi[k] - psi[k - 1]) / dt - lap @ q + rs * q
        if forcing is not None:
            r -= difference(setup.graph, forcing(psi_traj.times[k]))
        out[k - 1] = float(np.sqrt(r @ r))
    return out


def semiregular_identity_check(g: WeightedGraph) -> PropertyReport:
    """I^T I == (r + s) Id - Delta_L entrywise, in integer arithmetic."""
    info = semiregular_bipartite_check(g)
    if info is None:
        raise NotSemiregularError("graph is not semiregular bipartite")
    og = orient_bipartite(g, info)
    B = og.incidence.toarray().astype(np.int64)
    lhs = B.T @ B
    L = line_graph(og)
    A = adjacency(L, "mu").toarray().astype(np.int64)
    rhs = (info.r + info.s) * np.eye(og.n_edges, dtype=np.int64) - (np.diag(A.sum(axis=1)) - A)
    rep = PropertyReport("semiregular_identity", budget=0.0)
    diff = np.abs(lhs - rhs)
    bad = np.argwhere(diff != 0)
    witness = None
    if bad.size:
        i, j = bad[0]
        witness = (L.node_ids[i], L.node_ids[j], int(lhs[i, j]), int(rhs[i, j]))
    rep.record(f"(r,s)=({info.r},{info.s})", float(diff.max()) if diff.size else 0.0, witness)
    return rep
