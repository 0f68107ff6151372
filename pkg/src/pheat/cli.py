"""Command-line experiment runner.

    pheat run <config>      run one experiment, write CSVs and summary.txt
    pheat fixtures          list the built-in graphs
    pheat check <graph>     validate a graph file

Exit status: 0 when every asserted property holds, 1 when one fails,
2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures as fx
from .calculus import read_function_csv, write_function_csv
from .errors import ConfigError, GraphFileError, InnerSolveDiverged, PHeatError
from .graph import (
    Exhaustion, WeightedGraph, connected_components, read_graph, uniform_local_finiteness_ratio,
    write_graph,
)
from .partitions import (
    Partition, averaging_matrix, format_partition, quotient_graph, read_partition,
    read_permutation, verify_almost_equitable,
)
from .pme import make_setup, pme_residual, pressure_transform, semiregular_identity_check
from .properties import (
    PropertyReport, check_intertwining, check_invariance_criterion, check_linf_contraction,
    check_lq_contraction, check_order_preservation, check_positivity, check_range_invariance,
    write_reports,
)
from .solver import (
    SolverConfig, energy_inequality_check, exponential_formula, galerkin_solve, solve_elliptic,
    solve_heat, write_trajectory,
)

KINDS = ("heat", "elliptic", "galerkin", "properties", "partition", "pme", "exponential")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class Experiment:
    kind: str
    graph: WeightedGraph
    fixture: fx.Fixture | None
    base: Path
    out: Path
    seed: int
    cp: configparser.ConfigParser
    reports: list[PropertyReport] = field(default_factory=list)

    def opt(self, key: str, default: str | None = None, section: str | None = None) -> str | None:
        sec = section or self.kind
        if self.cp.has_option(sec, key):
            return self.cp.get(sec, key)
        return default

    def flag(self, key: str, default: bool) -> bool:
        raw = self.opt(key)
        if raw is None:
            return default
        raw = raw.strip().lower()
        if raw in _TRUE:
            return True
        if raw in _FALSE:
            return False
        raise ConfigError(f"[{self.kind}] {key}: expected a boolean, got {raw!r}")

    def number(self, key: str, default: float | None = None, section: str | None = None) -> float:
        raw = self.opt(key, None, section)
        if raw is None:
            if default is None:
                raise ConfigError(f"[{section or self.kind}] missing required key {key!r}")
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section or self.kind}] {key}: not a number: {raw!r}") from None

    def path(self, raw: str) -> Path:
        p = Path(raw.strip())
        return p if p.is_absolute() else self.base / p


def _load_graph(raw: str, base: Path) -> tuple[WeightedGraph, fx.Fixture | None]:
    raw = raw.strip()
    if raw in fx.fixture_names():
        f = fx.get_fixture(raw)
        return f.graph, f
    path = Path(raw) if Path(raw).is_absolute() else base / raw
    if not path.exists():
        raise ConfigError(f"graph {raw!r} is neither a fixture name nor an existing file")
    return read_graph(path), None


def _solver_config(exp: Experiment, mode_default: str = "neumann") -> SolverConfig:
    s = "solver"
    if not exp.cp.has_section(s):
        raise ConfigError("missing [solver] section")
    p = exp.number("p", section=s)
    dt = exp.number("dt", section=s)
    t_end = exp.number("t_end", section=s)
    tol = exp.number("inner_tol", 1e-10, s)
    max_iter = int(exp.number("inner_max_iter", 500, s))
    mode = exp.opt("mode", mode_default, s).strip()
    support = exp.opt("support", None, s)
    support = tuple(support.split()) if support else None
    forcing = _forcing(exp, exp.opt("forcing", "none", s))
    try:
        return SolverConfig(p, dt, t_end, tol, max_iter, forcing, mode, support)
    except (ValueError, PHeatError) as exc:
        raise ConfigError(f"[solver] {exc}") from None


def _forcing(exp: Experiment, source: str):
    source = source.strip()
    if source in ("", "none"):
        return None
    vec = _node_data(exp, source)
    return lambda t: vec


def _node_data(exp: Experiment, source: str) -> np.ndarray:
    """node_index | random | constant:<c> | values:<x,...> | file:<path>."""
    g = exp.graph
    source = source.strip()
    head, _, arg = source.partition(":")
    if source == "node_index":
        return np.arange(1.0, g.n_nodes + 1)
    if source == "random":
        return np.random.default_rng(exp.seed).standard_normal(g.n_nodes)
    if head == "constant":
        return np.full(g.n_nodes, float(arg))
    if head == "values":
        vals = np.array([float(x) for x in arg.replace(",", " ").split()])
        if vals.shape != (g.n_nodes,):
            raise ConfigError(f"values: expected {g.n_nodes} entries, got {vals.size}")
        return vals
    if head == "file":
        return read_function_csv(exp.path(arg), g.node_ids)
    raise ConfigError(f"unknown node data source {source!r}")


def _initial(exp: Experiment) -> np.ndarray:
    return _node_data(exp, exp.opt("initial", "node_index", "experiment"))


def _record_energy(exp: Experiment, traj, forcing, label: str = "") -> None:
    rep = energy_inequality_check(traj, forcing)
    pr = PropertyReport(f"energy_inequality{label}", budget=rep.tol)
    pr.record(exp.kind, rep.margin, rep.step)
    exp.reports.append(pr)


def _run_heat(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    traj = solve_heat(exp.graph, _initial(exp), cfg)
    write_trajectory(traj, exp.out / "trajectory.csv", exp.out / "ledger.csv")
    if exp.flag("assert_energy", True):
        _record_energy(exp, traj, cfg.forcing)
    if exp.flag("assert_mass", cfg.forcing is None and cfg.mode == "neumann"):
        m0 = traj.mass[0]
        drift = float(np.max(np.abs(traj.mass - m0))) / max(abs(m0), 1.0)
        pr = PropertyReport("mass_conservation", budget=1e-9)
        pr.record(exp.kind, drift - 1e-9, drift)
        exp.reports.append(pr)


def _run_elliptic(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    lam = exp.number("lambda", 1.0)
    f = _initial(exp)
    phi = solve_elliptic(exp.graph, lam, f, cfg.p, cfg.inner_tol, cfg.inner_max_iter)
    write_function_csv(exp.out / "solution.csv", exp.graph.node_ids, phi)
    if exp.flag("assert_positivity", bool(np.all(f >= 0))):
        pr = PropertyReport("elliptic_positivity", budget=1e-12)
        pr.record(exp.kind, float(np.max(-phi)) - 1e-12, tuple(f))
        exp.reports.append(pr)


def _run_exponential(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    t = exp.number("t", cfg.t_end)
    n = int(exp.number("n", 64))
    f0 = _initial(exp)
    u = exponential_formula(exp.graph, f0, t, n, cfg.p, cfg.inner_tol, cfg.inner_max_iter)
    write_function_csv(exp.out / "result.csv", exp.graph.node_ids, u)
    if exp.flag("assert_cauchy", False):
        ns = [n, 2 * n, 4 * n]
        us = [u] + [exponential_formula(exp.graph, f0, t, k, cfg.p, cfg.inner_tol) for k in ns[1:]]
        g1, g2 = (float(np.linalg.norm(b - a)) for a, b in zip(us, us[1:]))
        pr = PropertyReport("exponential_cauchy")
        pr.record(exp.kind, g2 - g1, (g1, g2))
        exp.reports.append(pr)


def _run_galerkin(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    levels = exp.opt("levels")
    if not levels:
        raise ConfigError("[galerkin] missing required key 'levels'")
    try:
        ex = Exhaustion(exp.graph, tuple(int(x) for x in levels.split()))
    except ValueError as exc:
        raise ConfigError(f"[galerkin] levels: {exc}") from None
    res = galerkin_solve(_initial(exp), cfg, ex)
    with open(exp.out / "gaps.csv", "w", encoding="utf-8") as fh:
        fh.write("level_from,level_to,gap\n")
        for (a, b), gap in zip(zip(res.levels, res.levels[1:]), res.gaps):
            fh.write(f"{a},{b},{gap!r}\n")
    write_trajectory(res.trajectories[-1], exp.out / "trajectory.csv", exp.out / "ledger.csv")
    if exp.flag("assert_monotone", True):
        pr = PropertyReport("galerkin_monotone_gaps")
        incs = [b - a for a, b in zip(res.gaps, res.gaps[1:])]
        pr.record(exp.kind, max(incs) if incs else -1.0, tuple(res.gaps))
        exp.reports.append(pr)
    tol = exp.opt("assert_last_gap")
    if tol is not None:
        bound = float(tol)
        pr = PropertyReport("galerkin_last_gap", budget=bound)
        pr.record(exp.kind, res.gaps[-1] - bound, res.gaps[-1])
        exp.reports.append(pr)


def _projector(exp: Experiment) -> tuple[Partition, np.ndarray]:
    raw = exp.opt("partition")
    if raw is None:
        raise ConfigError(f"[{exp.kind}] missing required key 'partition'")
    raw = raw.strip()
    if exp.fixture is not None and raw in exp.fixture.partitions:
        part = exp.fixture.partitions[raw]
    else:
        path = exp.path(raw)
        if not path.exists():
            raise ConfigError(f"partition {raw!r} is neither a fixture partition nor a file")
        part = read_partition(path)
    return part, averaging_matrix(exp.graph, part)


def _run_partition(exp: Experiment) -> None:
    p = exp.number("p", exp.number("p", 2.0, "solver"))
    part, P = _projector(exp)
    cert = verify_almost_equitable(exp.graph, part)
    with open(exp.out / "certificate.txt", "w", encoding="utf-8") as fh:
        fh.write(format_partition(part))
        fh.write(f"almost_equitable = {cert.ok}\nequitable = {cert.equitable}\n")
        if cert.witness is not None:
            fh.write(f"witness = {cert.witness}\n")
        fh.write("coefficients =\n" + np.array2string(cert.coefficients, precision=12) + "\n")
        if cert.equitable:
            q = quotient_graph(exp.graph, part, cert)
            fh.write(f"quotient_edges = {q.edges}\nquotient_loops = {q.loops}\n")
    if exp.flag("assert_equitable", False):
        pr = PropertyReport("almost_equitable")
        pr.record(exp.kind, 0.0 if cert.ok else 1.0, cert.witness)
        exp.reports.append(pr)
    rep = check_invariance_criterion(exp.graph, p, P, int(exp.number("samples", 100)), exp.seed)
    if exp.flag("assert_invariant", False):
        exp.reports.append(rep)
    else:
        rep.name += " (not asserted)"
        write_reports([rep], exp.out / "invariance.csv")
        with open(exp.out / "notes.txt", "w", encoding="utf-8") as fh:
            fh.write(rep.summary_line() + "\n")


def _run_properties(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    g = exp.graph
    n = int(exp.number("pairs", 10))
    checks = (exp.opt("checks", "order positivity linf") or "").replace(",", " ").split()
    for name in checks:
        if name == "order":
            exp.reports.append(check_order_preservation(g, cfg, n, exp.seed))
        elif name == "positivity":
            exp.reports.append(check_positivity(g, cfg, n, exp.seed))
        elif name == "linf":
            exp.reports.append(check_linf_contraction(g, cfg, n, exp.seed))
        elif name in ("l1", "l2"):
            exp.reports.append(check_lq_contraction(g, cfg, float(name[1]), n, exp.seed))
        elif name == "range":
            _, P = _projector(exp)
            exp.reports.append(check_range_invariance(g, cfg, P, n, exp.seed))
        elif name == "automorphisms":
            if exp.fixture is None and exp.opt("permutation") is None:
                raise ConfigError("[properties] automorphisms needs a fixture or a permutation file")
            perms = ([read_permutation(exp.path(exp.opt("permutation")), g)]
                     if exp.opt("permutation") else
                     [O for gens in exp.fixture.generators.values() for O in gens])
            budget = exp.number("budget", 1e-6)
            rep = PropertyReport("automorphism_commutation", budget=budget)
            for O in perms:
                rep.merge(check_intertwining(g, g, O.matrix(), cfg, 1, exp.seed, budget))
            exp.reports.append(rep)
        else:
            raise ConfigError(f"[properties] unknown check {name!r}")


def _run_pme(exp: Experiment) -> None:
    cfg = _solver_config(exp)
    setup = make_setup(exp.graph, cfg.p)
    exp.reports.append(semiregular_identity_check(exp.graph))
    traj = solve_heat(setup.graph, _initial(exp), cfg)
    psi = pressure_transform(traj, setup)
    res = pme_residual(psi, setup, cfg.forcing)
    write_trajectory(psi, exp.out / "psi.csv", exp.out / "ledger.csv")
    with open(exp.out / "pme_residuals.csv", "w", encoding="utf-8") as fh:
        fh.write("t,residual\n")
        for t, r in zip(psi.times[1:].tolist(), res.tolist()):
            fh.write(f"{t!r},{r!r}\n")
    factor = exp.number("residual_factor", 10.0)
    bound = factor * cfg.inner_tol
    pr = PropertyReport("pme_residual", budget=bound)
    pr.record(exp.kind, float(res.max()) - bound if res.size else -bound, float(res.max(initial=0)))
    exp.reports.append(pr)


_RUNNERS = {
    "heat": _run_heat, "elliptic": _run_elliptic, "galerkin": _run_galerkin,
    "properties": _run_properties, "partition": _run_partition, "pme": _run_pme,
    "exponential": _run_exponential,
}


def load_experiment(config_path: str | Path) -> Experiment:
    config_path = Path(config_path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(config_path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{config_path}: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError(f"{config_path}: missing [experiment] section")
    kind = cp.get("experiment", "kind", fallback="").strip()
    if kind not in KINDS:
        raise ConfigError(f"{config_path}: kind must be one of {', '.join(KINDS)}, got {kind!r}")
    if not cp.has_option("experiment", "graph"):
        raise ConfigError(f"{config_path}: [experiment] needs 'graph'")
    base = config_path.resolve().parent
    graph, fixture = _load_graph(cp.get("experiment", "graph"), base)
    out_raw = os.environ.get("PHEAT_OUT") or cp.get("experiment", "output", fallback="pheat_out")
    out = Path(out_raw) if Path(out_raw).is_absolute() or "PHEAT_OUT" in os.environ else base / out_raw
    try:
        seed = int(cp.get("experiment", "seed", fallback="0"), 0)
    except ValueError:
        raise ConfigError(f"{config_path}: seed must be an integer") from None
    return Experiment(kind, graph, fixture, base, out, seed, cp)


def run(config_path: str | Path) -> int:
    try:
        exp = load_experiment(config_path)
        exp.out.mkdir(parents=True, exist_ok=True)
        _RUNNERS[exp.kind](exp)
    except (ConfigError, GraphFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InnerSolveDiverged as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except (PHeatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    lines = [r.summary_line() for r in exp.reports]
    failed = [r.name for r in exp.reports if not r.passed]
    lines.append(f"{'FAIL' if failed else 'PASS'} overall: {len(exp.reports) - len(failed)}/"
                 f"{len(exp.reports)} properties hold" + (f"; failing: {', '.join(failed)}" if failed else ""))
    write_reports(exp.reports, exp.out / "report.csv")
    (exp.out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 1 if failed else 0


def cmd_fixtures(export: str | None = None) -> int:
    for f in fx.all_fixtures():
        g = f.graph
        extras = ""
        if f.partitions:
            extras += f"  partitions: {', '.join(f.partitions)}"
        if f.generators:
            extras += f"  generators: {', '.join(f.generators)}"
        print(f"{f.name:<14} |V|={g.n_nodes:<4} |E|={g.n_edges:<4} {f.description}{extras}")
        if export:
            d = Path(export)
            d.mkdir(parents=True, exist_ok=True)
            write_graph(g, d / f"{f.name}.graph")
            for pname, part in f.partitions.items():
                (d / f"{f.name}.{pname}.partition").write_text(format_partition(part), encoding="utf-8")
    return 0


def cmd_check(path: str) -> int:
    try:
        g = read_graph(path)
    except (GraphFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    comps = connected_components(g)
    print(f"ok: |V|={g.n_nodes} |E|={g.n_edges} components={len(comps)}")
    print(f"kappa={g.kappa:g} K={g.K:g} theta={g.theta:g} Theta={g.Theta:g} "
          f"M={uniform_local_finiteness_ratio(g):g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="pheat", description="discrete p-heat experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    f = sub.add_parser("fixtures", help="list built-in fixtures")
    f.add_argument("--export", metavar="DIR", help="also write graph and partition files")
    c = sub.add_parser("check", help="validate a graph file")
    c.add_argument("graph")
    args = ap.parse_args(argv)
    if args.cmd == "run":
        return run(args.config)
    if args.cmd == "fixtures":
        return cmd_fixtures(args.export)
    return cmd_check(args.graph)


if __name__ == "__main__":
    sys.exit(main())
