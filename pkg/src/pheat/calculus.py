"""Discrete calculus on a weighted graph: difference, divergence, signless actions, norms.

Node and edge functions are plain 1-D float arrays indexed consistently with
the graph they are used with.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import InvalidExponentError
from .graph import WeightedGraph, degrees

Weight = Literal["d", "nu", "a", "mu", "deg", "none"]


def _node_vec(g: WeightedGraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n_nodes,):
        raise ValueError(f"node function must have shape ({g.n_nodes},), got {f.shape}")
    return f


def _edge_vec(g: WeightedGraph, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n_edges,):
        raise ValueError(f"edge function must have shape ({g.n_edges},), got {u.shape}")
    return u


def difference(g: WeightedGraph, f) -> np.ndarray:
    """(I^T f)(e) = f(e+) - f(e-)."""
    f = _node_vec(g, f)
    return f[g.tails] - f[g.heads]


def divergence(g: WeightedGraph, u) -> np.ndarray:
    """(I u)(v) = sum of u over edges leaving v minus sum over edges entering v."""
    u = _edge_vec(g, u)
    n = g.n_nodes
    return np.bincount(g.tails, u, n) - np.bincount(g.heads, u, n)


def signless_difference(g: WeightedGraph, f, sigma) -> np.ndarray:
    """(J_sigma^T f)(e) = f(e+) + sigma(e-) f(e-)."""
    f = _node_vec(g, f)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (g.n_nodes,))
    return f[g.tails] + sigma[g.heads] * f[g.heads]


def signless_apply(g: WeightedGraph, u, sigma) -> np.ndarray:
    """J_sigma u, the transpose of :func:`signless_difference`."""
    u = _edge_vec(g, u)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (g.n_nodes,))
    n = g.n_nodes
    return np.bincount(g.tails, u, n) + sigma * np.bincount(g.heads, u, n)


def weight_vector(g: WeightedGraph, weight: Weight, size: int) -> np.ndarray:
    if weight == "none":
        return np.ones(size)
    if weight == "deg":
        w = degrees(g)
    else:
        w = getattr(g, weight)
    if w.shape != (size,):
        raise ValueError(f"weight {weight!r} does not match a vector of length {size}")
    return w


def _check_q(q: float) -> None:
    if not (q >= 1):
        raise InvalidExponentError(f"norm exponent must satisfy q >= 1, got {q!r}")


def weighted_norm(x, w, q: float = 2) -> float:
    """(sum |x|^q w)^(1/q); for q = inf the weight sits inside the sup."""
    _check_q(q)
    x = np.abs(np.asarray(x, dtype=float))
    w = np.asarray(w, dtype=float)
    if x.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(x * w))
    if q == 1:
        return math.fsum(x * w)
    if q == 2:
        return math.sqrt(math.fsum(x * x * w))
    return math.fsum(x ** q * w) ** (1.0 / q)


def norm(g: WeightedGraph, x, q: float = 2, weight: Weight = "d") -> float:
    """Weighted q-norm of a node or edge function on ``g``."""
    x = np.asarray(x, dtype=float)
    return weighted_norm(x, weight_vector(g, weight, x.shape[0]), q)


def max_abs(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x))) if x.size else 0.0


def inner(g: WeightedGraph, f, h, weight: Weight = "d") -> float:
    f = np.asarray(f, dtype=float)
    return math.fsum(f * np.asarray(h, dtype=float) * weight_vector(g, weight, f.shape[0]))


def sobolev_norm(g: WeightedGraph, f, p: float) -> float:
    """||f||_{l2_d} + ||I^T f||_{lp_a}."""
    _check_q(p)
    return norm(g, f, 2, "d") + norm(g, difference(g, f), p, "a")


# --- CSV ------------------------------------------------------------------

def write_function_csv(path: str | Path, ids, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "value"])
        for i, v in zip(ids, np.asarray(values, dtype=float).tolist()):
            w.writerow([i, repr(v)])


def read_function_csv(path: str | Path, ids) -> np.ndarray:
    """Read an ``id,value`` file and return values ordered like ``ids``."""
    ids = [str(i) for i in ids]
    pos = {i: k for k, i in enumerate(ids)}
    out = np.full(len(ids), np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "value"]:
            raise ValueError(f"{path}:1: expected header 'id,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            key = row[0].strip()
            if key not in pos:
                raise ValueError(f"{path}:{lineno}: unknown id {key!r}")
            try:
                out[pos[key]] = float(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value {row[1]!r}") from None
    missing = [ids[k] for k in np.flatnonzero(np.isnan(out))]
    if missing:
        raise ValueError(f"{path}: missing values for {missing[:5]}")
    return out
