"""p-Dirichlet energies and the operators obtained as their gradients.

Every operator here is ``(1/d) * grad E`` where ``grad`` is the plain
Euclidean gradient, so ``<d * L_p f, h> = E'(f) h``.  Exponents may be a
scalar ``p > 1`` or, for :func:`energy` and :func:`p_laplacian`, a vector of
per-edge exponents.
"""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np
from scipy.optimize import minimize

from .calculus import difference, divergence, signless_apply, signless_difference
from .errors import InvalidExponentError, ZeroFunctionError
from .graph import NodeId, WeightedGraph


def check_exponent(g: WeightedGraph | None, p) -> float | np.ndarray:
    """Validate a scalar or per-edge exponent (all entries finite and > 1)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        if not (np.isfinite(arr) and arr > 1):
            raise InvalidExponentError(f"exponent must be a finite real > 1, got {p!r}")
        return float(arr)
    if g is not None and arr.shape != (g.n_edges,):
        raise InvalidExponentError(f"per-edge exponent must have shape ({g.n_edges},), got {arr.shape}")
    if not np.all(np.isfinite(arr) & (arr > 1)):
        raise InvalidExponentError("every per-edge exponent must be a finite real > 1")
    return arr


def spow(x, r) -> np.ndarray:
    """Signed power |x|^r sign(x), zero at x = 0."""
    x = np.asarray(x, dtype=float)
    return np.abs(x) ** r * np.sign(x)


def _edge_energy(x: np.ndarray, a: np.ndarray, p) -> float:
    return math.fsum(a / p * np.abs(x) ** p)


def energy(g: WeightedGraph, f, p) -> float:
    """E_p(f) = sum_e a(e)/p(e) |f(e+) - f(e-)|^p(e)."""
    p = check_exponent(g, p)
    return _edge_energy(difference(g, f), g.a, p)


def energy_gradient(g: WeightedGraph, f, p) -> np.ndarray:
    """Euclidean gradient I(a |I^T f|^{p-2} I^T f)."""
    p = check_exponent(g, p)
    x = difference(g, f)
    return divergence(g, g.a * spow(x, p - 1))


def p_laplacian(g: WeightedGraph, f, p) -> np.ndarray:
    """(L_p f)(v) = (1/d(v)) sum_{w~v} a(v,w) |f(v)-f(w)|^{p-2} (f(v)-f(w))."""
    return energy_gradient(g, f, p) / g.d


def edge_curvature(g: WeightedGraph, f, p, cap: float = 1e12) -> np.ndarray:
    """Second derivative a (p-1)|x|^{p-2} per edge, clamped to ``cap`` where it blows up."""
    p = check_exponent(g, p)
    x = np.abs(difference(g, f))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (p - 1) * x ** (p - 2)
    c = np.where(np.isfinite(c), c, cap)
    return g.a * np.minimum(c, cap)


def operator_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense matrix of the (linear) p = 2 operator, assembled column by column."""
    n = g.n_nodes
    out = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = p_laplacian(g, e, 2.0)
        e[j] = 0.0
    return out


def galerkin_operator(g: WeightedGraph, f, p: float, v_n: Iterable[NodeId]) -> np.ndarray:
    """Truncated operator on V_n with boundary penalty and exterior branch.

    For v in V_n: interior differences to neighbours in V_n plus
    |f(v)|^{p-2} f(v) times the a-weight towards nodes outside V_n.
    For v outside V_n: -|f(v)|^{p-2} f(v) times the a-weight into V_n.
    All terms divided by d(v).
    """
    p = check_exponent(None, p)
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n_nodes,):
        raise ValueError(f"node function must have shape ({g.n_nodes},)")
    inside = np.zeros(g.n_nodes, dtype=bool)
    inside[g.indices(v_n)] = True
    t, h = g.tails, g.heads
    n = g.n_nodes

    both = inside[t] & inside[h]
    flux = np.where(both, g.a * spow(f[t] - f[h], p - 1), 0.0)
    interior = np.bincount(t, flux, n) - np.bincount(h, flux, n)

    cross = inside[t] ^ inside[h]
    a_cross = np.where(cross, g.a, 0.0)
    # a-weight from each node across the cut (to outside for inner nodes, to inside for outer ones)
    cut_weight = np.bincount(t, a_cross, n) + np.bincount(h, a_cross, n)
    fp = spow(f, p - 1)

    out = np.where(inside, interior + fp * cut_weight, -fp * cut_weight)
    return out / g.d


def signless_energy(g: WeightedGraph, f, p: float, sigma) -> float:
    """F_p^sigma(f) = (1/p) sum_e a(e) |f(e+) + sigma(e-) f(e-)|^p."""
    p = check_exponent(g, p)
    return _edge_energy(signless_difference(g, f, sigma), g.a, p)


def signless_p_laplacian(g: WeightedGraph, f, p: float, sigma) -> np.ndarray:
    """(1/d) J_sigma (a |J_sigma^T f|^{p-2} J_sigma^T f)."""
    p = check_exponent(g, p)
    x = signless_difference(g, f, sigma)
    return signless_apply(g, g.a * spow(x, p - 1), sigma) / g.d


def rayleigh_quotient(g: WeightedGraph, f, p: float, sigma=None) -> float:
    """E_p(f) / ||f||_{l^p_d}^p (signless energy when ``sigma`` is given)."""
    p = check_exponent(None, p)
    f = np.asarray(f, dtype=float)
    denom = math.fsum(g.d * np.abs(f) ** p)
    if denom == 0.0:
        raise ZeroFunctionError("Rayleigh quotient of the zero function")
    num = energy(g, f, p) if sigma is None else signless_energy(g, f, p, sigma)
    return num / denom


def rayleigh_residual(g: WeightedGraph, f: np.ndarray, p: float, sigma) -> tuple[float, float]:
    """Rayleigh value R and squared norm of the gradient of R at f."""
    norm_p = math.fsum(g.d * np.abs(f) ** p)
    if sigma is None:
        num, grad_e = energy(g, f, p), energy_gradient(g, f, p)
    else:
        num = signless_energy(g, f, p, sigma)
        grad_e = g.d * signless_p_laplacian(g, f, p, sigma)
    r = num / norm_p
    grad = (grad_e - r * p * g.d * spow(f, p - 1)) / norm_p
    return r, float(grad @ grad)


def rayleigh_critical_points(
    g: WeightedGraph,
    p: float,
    sigma=None,
    starts: np.ndarray | int = 64,
    seed: int = 0,
    tol: float = 1e-10,
) -> list[tuple[float, np.ndarray]]:
    """Critical points of the Rayleigh quotient found by multistart search.

    Each start is normalised in l^p_d and the squared gradient norm of the
    quotient is minimised; runs that end at a genuine critical point
    (squared gradient below ``tol``) contribute ``(value, point)``.
    ``starts`` may be a count or an explicit (k, |V|) array of starting points.
    """
    p = check_exponent(None, p)
    if np.ndim(starts) == 0:
        rng = np.random.default_rng(seed)
        starts = rng.standard_normal((int(starts), g.n_nodes))
    found = []
    for x0 in np.atleast_2d(starts):
        def obj(x):
            nrm = math.fsum(g.d * np.abs(x) ** p) ** (1 / p)
            if nrm == 0:
                return 1e6
            return rayleigh_residual(g, x / nrm, p, sigma)[1]

        x = np.asarray(x0, dtype=float)
        gnorm = math.inf
        # BFGS with finite-difference gradients can stall just above tol; a restart
        # from the stalled point (fresh Hessian estimate) sometimes finishes the job
        for _ in range(4):
            res = minimize(obj, x, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
            x = res.x / math.fsum(g.d * np.abs(res.x) ** p) ** (1 / p)
            r, gn = rayleigh_residual(g, x, p, sigma)
            improved = gn < 0.5 * gnorm
            gnorm = gn
            if gn <= tol or not improved:
                break
        if gnorm <= tol:
            found.append((r, x))
    return found


def merge_values(values: Iterable[float], merge: float = 1e-5) -> list[float]:
    merged: list[float] = []
    for r in sorted(values):
        if not merged or r - merged[-1] > merge:
            merged.append(r)
    return merged


def rayleigh_critical_values(
    g: WeightedGraph,
    p: float,
    sigma=None,
    starts: np.ndarray | int = 64,
    seed: int = 0,
    tol: float = 1e-10,
    merge: float = 1e-5,
) -> list[float]:
    """Sorted critical values of the Rayleigh quotient; values closer than ``merge`` are merged."""
    pts = rayleigh_critical_points(g, p, sigma, starts, seed, tol)
    return merge_values((r for r, _ in pts), merge)
