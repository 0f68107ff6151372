"""Property harness: invariance criterion, submarkovian checks, intertwining, irreducibility.

Every check returns a :class:`PropertyReport` whose ``max_violation`` is
measured so that a value ``<= 0`` means the property held everywhere.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calculus import max_abs, norm
from .errors import DisconnectedError, NotAProjectionError
from .graph import WeightedGraph, is_connected, two_coloring
from .operators import rayleigh_residual, check_exponent, energy, merge_values, rayleigh_critical_points
from .solver import SolverConfig, solve_heat

DEFAULT_SEED = 0x4EA7
_SLACK = 1e-10


@dataclass
class PropertyReport:
    name: str
    fixtures_tested: int = 0
    failures: list[tuple[str, float]] = field(default_factory=list)
    max_violation: float = -math.inf
    budget: float = 0.0
    witness: object = None

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_violation <= 0

    def record(self, fixture: str, violation: float, witness: object = None) -> None:
        """Log one fixture; ``violation`` <= 0 means satisfied."""
        self.fixtures_tested += 1
        self.max_violation = max(self.max_violation, violation)
        if violation > 0:
            self.failures.append((fixture, violation))
            if self.witness is None:
                self.witness = witness

    def merge(self, other: PropertyReport) -> PropertyReport:
        self.fixtures_tested += other.fixtures_tested
        self.failures += other.failures
        self.max_violation = max(self.max_violation, other.max_violation)
        self.budget = max(self.budget, other.budget)
        if self.witness is None:
            self.witness = other.witness
        return self

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"{status} {self.name}: {self.fixtures_tested} fixtures, "
                f"max violation {self.max_violation:.3e} (budget {self.budget:.1e})")
        if not self.passed:
            line += f", {len(self.failures)} failing"
            if self.witness is not None:
                line += f", witness {self.witness}"
        return line


def write_reports(reports: Sequence[PropertyReport], csv_path: str | Path,
                  summary_path: str | Path | None = None) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["property", "fixture", "margin"])
        for r in reports:
            if r.failures:
                for fixture, margin in r.failures:
                    w.writerow([r.name, fixture, repr(float(margin))])
            else:
                w.writerow([r.name, "all", repr(float(r.max_violation))])
    if summary_path is not None:
        Path(summary_path).write_text("".join(r.summary_line() + "\n" for r in reports),
                                      encoding="utf-8")


def _witness(f: np.ndarray) -> tuple:
    return tuple(float(x) if x != int(x) else int(x) for x in np.round(f, 12))


def check_invariance_criterion(g: WeightedGraph, p, P: np.ndarray, samples: int = 100,
                               seed: int = DEFAULT_SEED, tol: float = 1e-10,
                               probes: Iterable[np.ndarray] | None = None) -> PropertyReport:
    """E(Pf) <= E(f) for the node-index probe f(v_n) = n, any extra probes, and random f.

    The tolerance is relative to max(1, E(f)).
    """
    p = check_exponent(g, p)
    P = np.asarray(P, dtype=float)
    if P.shape != (g.n_nodes, g.n_nodes):
        raise NotAProjectionError(f"projector must be {g.n_nodes}x{g.n_nodes}")
    idem = float(np.max(np.abs(P @ P - P))) if P.size else 0.0
    if idem > 1e-10:
        raise NotAProjectionError(f"P is not idempotent (max |P^2 - P| = {idem:.3e})")
    rng = np.random.default_rng(seed)
    fs = [np.arange(1.0, g.n_nodes + 1)]
    if probes is not None:
        fs += [np.asarray(f, dtype=float) for f in probes]
    fs += list(rng.standard_normal((samples, g.n_nodes)))
    rep = PropertyReport("invariance_criterion", budget=tol)
    for k, f in enumerate(fs):
        ef = energy(g, f, p)
        gap = energy(g, P @ f, p) - ef
        rep.record(f"sample{k}", gap - tol * max(1.0, ef), _witness(f))
    return rep


def _pairs(g: WeightedGraph, rng: np.random.Generator, n: int, ordered: bool):
    for _ in range(n):
        f0 = rng.standard_normal(g.n_nodes)
        g0 = f0 + np.abs(rng.standard_normal(g.n_nodes)) if ordered else rng.standard_normal(g.n_nodes)
        yield f0, g0


def check_order_preservation(g: WeightedGraph, cfg: SolverConfig, pairs: int = 10,
                             seed: int = DEFAULT_SEED, slack: float = _SLACK,
                             label: str = "") -> PropertyReport:
    """f0 <= g0 implies phi(t) <= psi(t) at every recorded time."""
    rng = np.random.default_rng(seed)
    rep = PropertyReport("order_preservation", budget=slack)
    for k, (f0, g0) in enumerate(_pairs(g, rng, pairs, ordered=True)):
        a = solve_heat(g, f0, cfg).states
        b = solve_heat(g, g0, cfg).states
        rep.record(f"{label}pair{k}", float(np.max(a - b)) - slack, (tuple(f0), tuple(g0)))
    return rep


def check_positivity(g: WeightedGraph, cfg: SolverConfig, samples: int = 10,
                     seed: int = DEFAULT_SEED, slack: float = _SLACK,
                     label: str = "") -> PropertyReport:
    """f0 >= 0 implies phi(t) >= 0."""
    rng = np.random.default_rng(seed)
    rep = PropertyReport("positivity", budget=slack)
    for k in range(samples):
        f0 = np.abs(rng.standard_normal(g.n_nodes))
        states = solve_heat(g, f0, cfg).states
        rep.record(f"{label}sample{k}", float(np.max(-states)) - slack, tuple(f0))
    return rep


def _distance_growth(g, cfg, pairs, seed, dist: Callable[[np.ndarray], float], name, slack, label):
    rng = np.random.default_rng(seed)
    rep = PropertyReport(name, budget=slack)
    for k, (f0, g0) in enumerate(_pairs(g, rng, pairs, ordered=False)):
        a = solve_heat(g, f0, cfg).states
        b = solve_heat(g, g0, cfg).states
        dists = np.array([dist(x - y) for x, y in zip(a, b)])
        growth = float(np.max(np.diff(dists))) if len(dists) > 1 else -math.inf
        rep.record(f"{label}pair{k}", growth - slack, (tuple(f0), tuple(g0)))
    return rep


def check_linf_contraction(g: WeightedGraph, cfg: SolverConfig, pairs: int = 10,
                           seed: int = DEFAULT_SEED, slack: float = _SLACK,
                           label: str = "") -> PropertyReport:
    """max_v |phi(t) - psi(t)| is non-increasing along the run."""
    return _distance_growth(g, cfg, pairs, seed, max_abs, "linf_contraction", slack, label)


def check_lq_contraction(g: WeightedGraph, cfg: SolverConfig, q: float, pairs: int = 10,
                         seed: int = DEFAULT_SEED, slack: float = _SLACK,
                         label: str = "") -> PropertyReport:
    """||phi(t) - psi(t)||_{l^q_d} is non-increasing along the run."""
    rep = _distance_growth(g, cfg, pairs, seed, lambda x: norm(g, x, q, "d"),
                           f"l{q}_contraction", slack, label)
    return rep


def check_range_invariance(g: WeightedGraph, cfg: SolverConfig, P: np.ndarray,
                           samples: int = 5, seed: int = DEFAULT_SEED, budget: float = 1e-8,
                           label: str = "") -> PropertyReport:
    """Evolving Pf keeps the state in range(P): max_k ||phi_k - P phi_k||_inf <= budget."""
    rng = np.random.default_rng(seed)
    rep = PropertyReport("range_invariance", budget=budget)
    for k in range(samples):
        f0 = P @ rng.standard_normal(g.n_nodes)
        states = solve_heat(g, f0, cfg).states
        drift = max(max_abs(s - P @ s) for s in states)
        rep.record(f"{label}sample{k}", drift - budget, tuple(f0))
    return rep


def check_intertwining(g: WeightedGraph, g_tilde: WeightedGraph, sigma: np.ndarray,
                       cfg: SolverConfig, samples: int = 3, seed: int = DEFAULT_SEED,
                       budget: float | None = None, cfg_tilde: SolverConfig | None = None,
                       label: str = "") -> PropertyReport:
    """Sigma(evolve on g~ of f0) versus evolve on g of (Sigma f0), l2_d distance on g.

    ``sigma`` has shape (|V(g)|, |V(g~)|).  The default budget is 10 * inner_tol.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (g.n_nodes, g_tilde.n_nodes):
        raise ValueError(f"sigma must have shape ({g.n_nodes}, {g_tilde.n_nodes})")
    budget = 10 * cfg.inner_tol if budget is None else budget
    cfg_tilde = cfg_tilde or cfg
    rng = np.random.default_rng(seed)
    rep = PropertyReport("intertwining", budget=budget)
    for k in range(samples):
        f0 = rng.standard_normal(g_tilde.n_nodes)
        tilde = solve_heat(g_tilde, f0, cfg_tilde).states
        direct = solve_heat(g, sigma @ f0, cfg).states
        dist = max(norm(g, sigma @ x - y, 2, "d") for x, y in zip(tilde, direct))
        rep.record(f"{label}sample{k}", dist - budget, tuple(f0))
    return rep


def _default_splits(g: WeightedGraph, seed: int, count: int = 64) -> list[frozenset]:
    ids = g.node_ids
    splits = [frozenset([v]) for v in ids]
    rng = np.random.default_rng(seed)
    seen = set(splits)
    for _ in range(count * 4):
        if len(splits) >= g.n_nodes + count:
            break
        mask = rng.random(g.n_nodes) < 0.5
        if mask.all() or not mask.any():
            continue
        s = frozenset(ids[i] for i in np.flatnonzero(mask))
        if s not in seen:
            seen.add(s)
            splits.append(s)
    return splits


def check_irreducibility_witness(g: WeightedGraph, p, splits: Iterable[Iterable] | None = None,
                                 seed: int = DEFAULT_SEED) -> PropertyReport:
    """For every split V0 | V0^c find x with E(1_{V0} f) > E(f), f = x at v0, 1 at v1, 0 else.

    v0 in V0 and v1 outside are adjacent; x runs over 2, 4, ..., 2^20.  The
    witness attribute maps each split to the (v0, v1, x) found.
    """
    p = check_exponent(g, p)
    if not is_connected(g):
        raise DisconnectedError("graph is disconnected, so the flow leaves an ideal invariant")
    splits = _default_splits(g, seed) if splits is None else [frozenset(s) for s in splits]
    rep = PropertyReport("irreducibility_witness")
    found = {}
    for s in splits:
        mask = np.zeros(g.n_nodes, dtype=bool)
        mask[g.indices(s)] = True
        if mask.all() or not mask.any():
            raise ValueError("splits must be nontrivial")
        cross = np.flatnonzero(mask[g.tails] ^ mask[g.heads])
        e = int(cross[0])
        u, w = int(g.tails[e]), int(g.heads[e])
        v0, v1 = (u, w) if mask[u] else (w, u)
        hit = None
        best = -math.inf
        for x in 2.0 ** np.arange(1, 21):
            f = np.zeros(g.n_nodes)
            f[v0], f[v1] = x, 1.0
            gap = energy(g, f * mask, p) - energy(g, f, p)
            best = max(best, gap)
            if gap > 0:
                hit = float(x)
                break
        label = "{" + ",".join(map(str, sorted(s, key=g.index))) + "}"
        found[label] = (g.node_ids[v0], g.node_ids[v1], hit)
        rep.record(label, -1.0 if hit is not None else 1.0 - min(best, 0.0))
    rep.witness = found
    return rep


def check_scalar_monotonicity(samples: int = 10_000, seed: int = DEFAULT_SEED,
                              p_range: tuple[float, float] = (1.05, 6.0),
                              min_gap: float = 1e-3) -> PropertyReport:
    """alpha -> |k + alpha|^p + |k - alpha|^p is strictly increasing on [0, inf)."""
    rng = np.random.default_rng(seed)
    k = rng.uniform(-5, 5, samples)
    p = rng.uniform(*p_range, samples)
    a1 = rng.uniform(0, 5, samples)
    a2 = a1 + rng.uniform(min_gap, 5, samples)

    def f(alpha):
        return np.abs(k + alpha) ** p + np.abs(k - alpha) ** p

    diff = f(a1) - f(a2)  # must be < 0
    rep = PropertyReport("scalar_monotonicity")
    bad = np.flatnonzero(diff >= 0)
    rep.fixtures_tested = samples
    rep.max_violation = float(np.max(diff))
    rep.failures = [(f"point{i}", float(diff[i])) for i in bad]
    if bad.size:
        i = bad[0]
        rep.witness = (float(k[i]), float(p[i]), float(a1[i]), float(a2[i]))
    return rep


def check_bipartite_spectrum(g: WeightedGraph, p: float, starts: int = 64, seed: int = DEFAULT_SEED,
                             tol: float = 1e-4) -> PropertyReport:
    """Rayleigh-critical values of E_p and of the signless energy (sigma = 1) coincide.

    Both multistart searches run (the signless one from the 2-colouring images
    s * x0 of the E_p starts).  Every critical point found by either search is
    mapped through f -> s * f and must be critical for the other functional with
    the same value, so the two value sets agree up to ``tol``.  Comparing points
    rather than raw value lists keeps the check independent of which starts
    happen to converge.
    """
    color = two_coloring(g)
    if color is None:
        raise ValueError("graph is not bipartite")
    s = np.where(color == 0, 1.0, -1.0)
    x0 = np.random.default_rng(seed).standard_normal((starts, g.n_nodes))
    lap = rayleigh_critical_points(g, p, None, x0)
    sgn = rayleigh_critical_points(g, p, 1.0, x0 * s)
    rep = PropertyReport("bipartite_spectrum", budget=tol)
    gap = 0.0 if (lap or sgn) else math.inf
    for pts, other in ((lap, 1.0), (sgn, None)):
        for r, x in pts:
            r2, gn = rayleigh_residual(g, s * x, p, other)
            gap = max(gap, abs(r2 - r), math.sqrt(gn))
    values = (tuple(merge_values(r for r, _ in lap)), tuple(merge_values(r for r, _ in sgn)))
    rep.record("values", gap - tol, values)
    return rep
