"""Backward-Euler evolution for the p-heat flow.

Each time step is a proximal (resolvent) step

    u = argmin  1/2 ||u - f||^2_{l2_d} + lam * E_p(u),

solved by damped Newton with Armijo backtracking.  In Dirichlet mode the
minimisation runs over functions vanishing outside a support set; on a
finite graph with the full node set as support this coincides with the
Neumann problem.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import norm
from .errors import InequalityViolated, InnerSolveDiverged
from .graph import Exhaustion, NodeId, WeightedGraph
from .operators import check_exponent, energy, spow

Forcing = Callable[[float], np.ndarray]

_DENSE_LIMIT = 400
_CURVATURE_CAP = 1e12
_ARMIJO = 1e-4
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    p: float | np.ndarray
    dt: float
    t_end: float
    inner_tol: float = 1e-10
    inner_max_iter: int = 500
    forcing: Forcing | None = None
    mode: Literal["neumann", "dirichlet"] = "neumann"
    support: tuple | None = None  # node ids of V_n in dirichlet mode

    def __post_init__(self) -> None:
        check_exponent(None, self.p)
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= self.dt):
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        if not (self.inner_tol > 0):
            raise ValueError("inner_tol must be positive")
        if self.inner_max_iter < 1:
            raise ValueError("inner_max_iter must be at least 1")
        if self.mode not in ("neumann", "dirichlet"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "dirichlet" and self.support is None:
            raise ValueError("dirichlet mode needs a support set")
        if self.support is not None:
            object.__setattr__(self, "support", tuple(self.support))

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class Trajectory:
    graph: WeightedGraph
    times: np.ndarray
    states: np.ndarray  # (steps + 1, |V|)
    energies: np.ndarray
    dissipation: np.ndarray  # ||(phi_k - phi_{k-1}) / dt||^2_{l2_d}, zero at k = 0
    mass: np.ndarray
    p: float | np.ndarray = 2.0
    support: tuple | None = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def truncate(self, k: int) -> Trajectory:
        """First ``k`` recorded states."""
        return Trajectory(self.graph, self.times[:k], self.states[:k], self.energies[:k],
                          self.dissipation[:k], self.mass[:k], self.p, self.support)


class ProxProblem:
    """Resolvent solver for a fixed graph and support; reusable across steps."""

    def __init__(self, g: WeightedGraph, support: Iterable[NodeId] | None = None):
        self.g = g
        if support is None:
            self.idx = np.arange(g.n_nodes)
        else:
            self.idx = np.unique(g.indices(support))
        self.d = g.d[self.idx]
        inc = g.incidence[self.idx]
        self.dense = len(self.idx) <= _DENSE_LIMIT
        self.B = inc.toarray() if self.dense else inc.tocsr()

    def _edges(self, u: np.ndarray) -> np.ndarray:
        return self.B.T @ u

    def _eval(self, u, f, lam, p):
        x = self._edges(u)
        r = u - f
        phi = 0.5 * math.fsum(self.d * r * r) + lam * math.fsum(self.g.a / p * np.abs(x) ** p)
        grad = self.d * r + lam * (self.B @ (self.g.a * spow(x, p - 1)))
        return phi, grad, x

    def _res(self, grad) -> float:
        return math.sqrt(math.fsum(grad * grad / self.d))

    def _floor(self, u, x, lam, p) -> float:
        """Residual attainable in floating point at u.

        A difference x is only known to within delta ~ eps * |u|; the edge
        flux a|x|^{p-2}x then carries an error of about
        a (p-1) max(|x|, delta)^{p-2} delta, which for p < 2 does not vanish
        as x -> 0.
        """
        delta = 8 * _EPS * max(1.0, float(np.max(np.abs(u))) if u.size else 1.0)
        err = self.g.a * (p - 1) * np.maximum(np.abs(x), delta) ** (p - 2) * delta
        node = lam * (np.abs(self.B) @ err) + 4 * _EPS * self.d * (np.abs(u) + 1)
        return 4 * math.sqrt(math.fsum(node * node / self.d))

    def _hessian_solve(self, grad, c, lam):
        try:
            if self.dense:
                H = (self.B * (lam * c)) @ self.B.T
                H[np.diag_indices_from(H)] += self.d
                s = sla.solve(H, -grad, assume_a="pos", check_finite=False)
            else:
                H = (self.B @ sp.diags(lam * c) @ self.B.T + sp.diags(self.d)).tocsc()
                s = spla.spsolve(H, -grad)
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            return None
        return s if np.all(np.isfinite(s)) else None

    def _newton_dir(self, grad, x, lam, p):
        """Newton direction; for p < 2, edges whose difference would change sign
        get the majorising curvature a|x|^{p-2} instead of a(p-1)|x|^{p-2}.

        The exact step maps an isolated edge x -> x (p-2)/(p-1), which cycles
        (p = 1.5) or diverges (p < 1.5) when the minimiser has x = 0.
        """
        pe = np.broadcast_to(p, x.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.abs(x) ** (pe - 2)
        base = np.minimum(np.where(np.isfinite(base), base, _CURVATURE_CAP), _CURVATURE_CAP)
        factor = pe - 1
        sub = pe < 2
        s = None
        for _ in range(4):
            c = self.g.a * np.minimum(factor * base, _CURVATURE_CAP)
            s = self._hessian_solve(grad, c, lam)
            if s is None or not sub.any():
                return s
            flip = sub & (factor < 1) & (x * (x + self.B.T @ s) < 0)
            if not flip.any():
                return s
            factor = np.where(flip, 1.0, factor)
        return s

    def _polish(self, u, ff, lam, p, phi, grad, x, res) -> np.ndarray:
        """One full Newton step past the tolerance; kept only if it improves the residual.

        Near the minimiser Newton is quadratic, so this drives the stationarity
        residual to roundoff at the price of one extra linear solve.  Callers that
        divide the residual by a small dt (e.g. scheme-consistency checks) rely on it.
        """
        s = self._newton_dir(grad, x, lam, p)
        if s is None:
            return u
        un = u + s
        phin, gradn, _ = self._eval(un, ff, lam, p)
        if phin <= phi + 10 * _EPS * (abs(phi) + 1) and self._res(gradn) < res:
            return un
        return u

    def solve(self, f, lam: float, p, tol: float = 1e-10, max_iter: int = 500,
              x0: np.ndarray | None = None) -> np.ndarray:
        """Minimiser of 1/2||u - f||^2_d + lam E_p(u) over functions supported on the support."""
        f = np.asarray(f, dtype=float)
        ff = f[self.idx]
        u = ff.copy() if x0 is None else np.asarray(x0, dtype=float)[self.idx].copy()
        scale = 1.0 + math.sqrt(math.fsum(self.d * ff * ff))
        phi, grad, x = self._eval(u, ff, lam, p)
        res = self._res(grad)
        it = 0
        while res > max(tol * scale, self._floor(u, x, lam, p)):
            if it >= max_iter:
                raise InnerSolveDiverged(
                    f"inner solve did not reach tol {tol:g} in {max_iter} iterations "
                    f"(residual {res:.3e})", res, it)
            it += 1
            step = None
            newton = self._newton_dir(grad, x, lam, p)
            for s in ([newton] if newton is not None else []) + [-grad / self.d]:
                slope = float(grad @ s)
                if not (np.isfinite(slope) and slope < 0):
                    continue
                t = 1.0
                while t > 1e-16:
                    un = u + t * s
                    phin, gradn, xn = self._eval(un, ff, lam, p)
                    if phin <= phi + _ARMIJO * t * slope:
                        step = (un, phin, gradn, xn)
                        break
                    # Armijo is blind below roundoff of phi; accept if the residual still drops
                    if phin <= phi + 10 * _EPS * (abs(phi) + 1) and self._res(gradn) < res:
                        step = (un, phin, gradn, xn)
                        break
                    t *= 0.5
                if step is not None:
                    break
            if step is None:
                raise InnerSolveDiverged(
                    f"line search stalled after {it} iterations (residual {res:.3e})", res, it)
            u, phi, grad, x = step
            res = self._res(grad)
        if res > 0:
            u = self._polish(u, ff, lam, p, phi, grad, x, res)
        out = np.zeros(self.g.n_nodes)
        out[self.idx] = u
        return out


def _problem(g: WeightedGraph, mode: str, support) -> ProxProblem:
    return ProxProblem(g, support if mode == "dirichlet" else None)


def resolvent(g: WeightedGraph, f, lam: float, p, mode: str = "neumann",
              support: Iterable[NodeId] | None = None, tol: float = 1e-10,
              max_iter: int = 500) -> np.ndarray:
    """J_lam f = (Id + lam dE_p)^{-1} f."""
    p = check_exponent(g, p)
    if not (lam > 0):
        raise ValueError(f"lambda must be positive, got {lam}")
    if mode == "dirichlet" and support is None:
        raise ValueError("dirichlet mode needs a support set")
    return _problem(g, mode, support).solve(f, lam, p, tol, max_iter)


def _forcing_at(g: WeightedGraph, cfg: SolverConfig, t: float) -> np.ndarray | None:
    if cfg.forcing is None:
        return None
    v = np.asarray(cfg.forcing(t), dtype=float)
    if v.shape != (g.n_nodes,):
        raise ValueError(f"forcing must return shape ({g.n_nodes},), got {v.shape}")
    return v


def step(g: WeightedGraph, phi, cfg: SolverConfig, t: float,
         problem: ProxProblem | None = None) -> np.ndarray:
    """One implicit Euler step from time t to t + dt; forcing sampled at t + dt."""
    problem = problem or _problem(g, cfg.mode, cfg.support)
    rhs = np.asarray(phi, dtype=float)
    force = _forcing_at(g, cfg, t + cfg.dt)
    if force is not None:
        rhs = rhs + cfg.dt * force
    return problem.solve(rhs, cfg.dt, cfg.p, cfg.inner_tol, cfg.inner_max_iter)


def _restrict(g: WeightedGraph, f, cfg: SolverConfig) -> np.ndarray:
    f = np.array(f, dtype=float)
    if f.shape != (g.n_nodes,):
        raise ValueError(f"initial data must have shape ({g.n_nodes},), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("initial data must be finite")
    if cfg.mode == "dirichlet":
        mask = np.zeros(g.n_nodes, dtype=bool)
        mask[g.indices(cfg.support)] = True
        f[~mask] = 0.0
    return f


def solve_heat(g: WeightedGraph, f0, cfg: SolverConfig, t0: float = 0.0) -> Trajectory:
    """Run ceil(t_end / dt) implicit Euler steps and record the energy ledger."""
    problem = _problem(g, cfg.mode, cfg.support)
    n = cfg.n_steps
    states = np.empty((n + 1, g.n_nodes))
    states[0] = _restrict(g, f0, cfg)
    times = t0 + cfg.dt * np.arange(n + 1)
    for k in range(n):
        states[k + 1] = step(g, states[k], cfg, times[k], problem)
    return _ledger(g, times, states, cfg)


def _ledger(g: WeightedGraph, times, states, cfg: SolverConfig) -> Trajectory:
    energies = np.array([energy(g, s, cfg.p) for s in states])
    diss = np.zeros(len(states))
    for k in range(1, len(states)):
        diss[k] = norm(g, (states[k] - states[k - 1]) / cfg.dt, 2, "d") ** 2
    mass = np.array([math.fsum(g.d * s) for s in states])
    return Trajectory(g, times, states, energies, diss, mass, cfg.p, cfg.support)


def solve_elliptic(g: WeightedGraph, lam: float, f, p, tol: float = 1e-10,
                   max_iter: int = 500) -> np.ndarray:
    """Solve lam * phi + L_p phi = f as phi = J_{1/lam}(f / lam)."""
    if not (lam > 0):
        raise ValueError(f"lambda must be positive, got {lam}")
    f = np.asarray(f, dtype=float)
    return resolvent(g, f / lam, 1.0 / lam, p, tol=tol, max_iter=max_iter)


def exponential_formula(g: WeightedGraph, f0, t: float, n: int, p, tol: float = 1e-10,
                        max_iter: int = 500) -> np.ndarray:
    """n-fold resolvent J_{t/n}^n f0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    u = np.array(f0, dtype=float)
    if t == 0:
        return u
    p = check_exponent(g, p)
    problem = ProxProblem(g)
    for _ in range(n):
        u = problem.solve(u, t / n, p, tol, max_iter)
    return u


@dataclass
class GalerkinResult:
    levels: tuple[int, ...]
    trajectories: list[Trajectory]
    gaps: list[float]  # sup over time of the l2_d distance between consecutive levels

    def is_monotone(self) -> bool:
        return all(b < a for a, b in zip(self.gaps, self.gaps[1:]))


def galerkin_solve(f0, cfg: SolverConfig, exhaustion: Exhaustion) -> GalerkinResult:
    """Evolve on each exhaustion level with zero data outside V_n and compare levels."""
    g = exhaustion.parent
    f0 = np.asarray(f0, dtype=float)
    trajs = []
    for k in range(len(exhaustion)):
        level = SolverConfig(cfg.p, cfg.dt, cfg.t_end, cfg.inner_tol, cfg.inner_max_iter,
                             cfg.forcing, "dirichlet", exhaustion.level_nodes(k))
        trajs.append(solve_heat(g, f0, level))
    gaps = []
    for s, t in zip(trajs, trajs[1:]):
        gaps.append(max(norm(g, a - b, 2, "d") for a, b in zip(s.states, t.states)))
    return GalerkinResult(exhaustion.prefix_sizes, trajs, gaps)


@dataclass
class EnergyReport:
    ok: bool
    lhs: float  # dissipation sum + final energy
    rhs: float  # initial energy + forcing work
    margin: float  # lhs - rhs - tol (<= 0 when satisfied)
    tol: float
    monotone: bool | None = None  # energies non-increasing (zero forcing only)
    step: int | None = None  # first failing step
    history: list[float] = field(default_factory=list)


def energy_inequality_check(traj: Trajectory, forcing: Forcing | None = None,
                            raise_on_fail: bool = False) -> EnergyReport:
    """Discrete energy inequality sum dt||delta||^2 + E_K <= E_0 + sum dt (F_k | delta_k)."""
    g = traj.graph
    E = traj.energies
    tol = 1e-6 * (1.0 + E[0])
    lhs_acc, work = [], []
    margins = []
    first_bad = None
    for k in range(1, len(traj)):
        dt = traj.times[k] - traj.times[k - 1]
        delta = (traj.states[k] - traj.states[k - 1]) / dt
        lhs_acc.append(dt * traj.dissipation[k])
        if forcing is not None:
            work.append(dt * math.fsum(g.d * np.asarray(forcing(traj.times[k])) * delta))
        m = (math.fsum(lhs_acc) + E[k]) - (E[0] + math.fsum(work)) - tol
        margins.append(m)
        if m > 0 and first_bad is None:
            first_bad = k
    lhs = math.fsum(lhs_acc) + E[-1]
    rhs = E[0] + math.fsum(work)
    margin = max(margins) if margins else -tol
    monotone = None
    if forcing is None:
        slack = 1e-12 * (1.0 + E[0])
        inc = np.flatnonzero(np.diff(E) > slack)
        monotone = inc.size == 0
        if not monotone and first_bad is None:
            first_bad = int(inc[0]) + 1
    ok = first_bad is None
    rep = EnergyReport(ok, lhs, rhs, margin, tol, monotone, first_bad, margins)
    if raise_on_fail and not ok:
        raise InequalityViolated(f"energy inequality violated at step {first_bad} "
                                 f"(margin {margin:.3e})", first_bad, margin)
    return rep


# --- CSV ------------------------------------------------------------------

def write_trajectory(traj: Trajectory, path: str | Path, ledger_path: str | Path | None = None,
                     node_ids: Sequence | None = None) -> None:
    """Long-format ``t,node_id,value`` file plus an optional ``t,energy,dissipation,mass`` ledger."""
    ids = node_ids if node_ids is not None else traj.graph.node_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "node_id", "value"])
        for t, s in zip(traj.times.tolist(), traj.states):
            for v, x in zip(ids, s.tolist()):
                w.writerow([repr(t), v, repr(x)])
    if ledger_path is not None:
        write_ledger(traj, ledger_path)


def write_ledger(traj: Trajectory, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "energy", "dissipation", "mass"])
        for row in zip(traj.times.tolist(), traj.energies.tolist(),
                       traj.dissipation.tolist(), traj.mass.tolist()):
            w.writerow([repr(x) for x in row])


def read_trajectory(path: str | Path, node_ids: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Read a long-format trajectory file back into (times, states)."""
    pos = {str(v): i for i, v in enumerate(node_ids)}
    rows: dict[float, np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "node_id", "value"]:
            raise ValueError(f"{path}:1: expected header 't,node_id,value'")
        for lineno, (t, v, x) in enumerate(reader, start=2):
            if v not in pos:
                raise ValueError(f"{path}:{lineno}: unknown node {v!r}")
            rows.setdefault(float(t), np.full(len(pos), np.nan))[pos[v]] = float(x)
    times = np.array(sorted(rows))
    return times, np.array([rows[t] for t in times])
