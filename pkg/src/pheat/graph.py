"""Weighted oriented graphs: construction, validation and combinatorial queries.

A graph carries two edge weights (``mu`` metric, ``a`` elliptic) and two node
weights (``nu`` measure, ``d`` elliptic).  Edge ``e`` runs from ``tails[e]``
(e+) to ``heads[e]`` (e-).  Node identifiers are mapped to dense indices at
construction; every vector in the package is indexed by those positions.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import (
    DuplicateNodeError,
    GraphFileError,
    NonpositiveWeightError,
    NotUnweightedError,
    ParallelEdgeError,
    SelfLoopError,
    UnknownNodeError,
)

NodeId = Hashable
WeightLike = float | Sequence[float] | np.ndarray | None


def _frozen(x: np.ndarray) -> np.ndarray:
    x = np.array(x, copy=True)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    node_ids: tuple
    tails: np.ndarray
    heads: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    a: np.ndarray
    d: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges as (e+, e-) index pairs."""
        return list(zip(self.tails.tolist(), self.heads.tolist()))

    @property
    def edge_ids(self) -> list[tuple[NodeId, NodeId]]:
        ids = self.node_ids
        return [(ids[u], ids[v]) for u, v in self.edges]

    @cached_property
    def _index(self) -> dict:
        return {v: i for i, v in enumerate(self.node_ids)}

    @cached_property
    def _edge_lookup(self) -> dict:
        return {frozenset((u, v)): e for e, (u, v) in enumerate(self.edges)}

    def index(self, v: NodeId) -> int:
        try:
            return self._index[v]
        except (KeyError, TypeError):
            raise UnknownNodeError(f"unknown node {v!r}") from None

    def indices(self, nodes: Iterable[NodeId]) -> np.ndarray:
        return np.array([self.index(v) for v in nodes], dtype=np.int64)

    def edge_between(self, u: int, v: int) -> int | None:
        """Edge index joining node indices u and v (either orientation), or None."""
        return self._edge_lookup.get(frozenset((u, v)))

    @cached_property
    def incidence_plus(self) -> sp.csr_matrix:
        m, n = self.n_edges, self.n_nodes
        return sp.csr_matrix((np.ones(m), (self.tails, np.arange(m))), shape=(n, m))

    @cached_property
    def incidence_minus(self) -> sp.csr_matrix:
        m, n = self.n_edges, self.n_nodes
        return sp.csr_matrix((np.ones(m), (self.heads, np.arange(m))), shape=(n, m))

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Signed node-edge matrix I = I+ - I-."""
        return (self.incidence_plus - self.incidence_minus).tocsr()

    # tightest constants with kappa*a <= mu <= K*a and theta*d <= nu <= Theta*d
    @cached_property
    def kappa(self) -> float:
        return float(np.min(self.mu / self.a)) if self.n_edges else 1.0

    @cached_property
    def K(self) -> float:
        return float(np.max(self.mu / self.a)) if self.n_edges else 1.0

    @cached_property
    def theta(self) -> float:
        return float(np.min(self.nu / self.d)) if self.n_nodes else 1.0

    @cached_property
    def Theta(self) -> float:
        return float(np.max(self.nu / self.d)) if self.n_nodes else 1.0

    def is_unweighted(self) -> bool:
        return bool(np.all(self.mu == 1.0) and np.all(self.nu == 1.0))

    def __repr__(self) -> str:
        return f"WeightedGraph(|V|={self.n_nodes}, |E|={self.n_edges})"


def _weights(w: WeightLike, size: int, name: str, default: np.ndarray | float,
             labels: Sequence) -> np.ndarray:
    if w is None:
        w = default
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        arr = np.full(size, float(arr))
    if arr.shape != (size,):
        raise ValueError(f"{name}: expected {size} weights, got shape {arr.shape}")
    bad = np.flatnonzero(~(arr > 0) | ~np.isfinite(arr))
    if bad.size:
        i = int(bad[0])
        raise NonpositiveWeightError(f"{name}[{labels[i]!r}] = {arr[i]!r} is not a positive finite weight")
    return arr


def build_graph(
    nodes: Sequence[NodeId],
    edges: Sequence[tuple[NodeId, NodeId]],
    mu: WeightLike = None,
    nu: WeightLike = None,
    a: WeightLike = None,
    d: WeightLike = None,
    orient: Literal["given", "canonical"] = "given",
) -> WeightedGraph:
    """Validate and assemble a graph.

    Weights may be scalars or vectors; ``mu``/``nu`` default to 1, ``a``
    defaults to ``mu`` and ``d`` to ``nu``.  With ``orient="canonical"`` every
    edge is pointed from the lower to the higher node index.
    """
    node_ids = tuple(nodes)
    index: dict = {}
    for i, v in enumerate(node_ids):
        if v in index:
            raise DuplicateNodeError(f"duplicate node {v!r}")
        index[v] = i

    tails, heads = [], []
    seen: dict = {}
    for k, (u, v) in enumerate(edges):
        for x in (u, v):
            if x not in index:
                raise UnknownNodeError(f"edge {k} ({u!r}, {v!r}) references unknown node {x!r}")
        if u == v:
            raise SelfLoopError(f"self-loop at node {u!r} (edge {k})")
        key = frozenset((u, v))
        if key in seen:
            raise ParallelEdgeError(f"edge {k} ({u!r}, {v!r}) duplicates edge {seen[key]}")
        seen[key] = k
        iu, iv = index[u], index[v]
        if orient == "canonical" and iu > iv:
            iu, iv = iv, iu
        tails.append(iu)
        heads.append(iv)

    m, n = len(tails), len(node_ids)
    edge_labels = [(node_ids[t], node_ids[h]) for t, h in zip(tails, heads)]
    mu_ = _weights(mu, m, "mu", 1.0, edge_labels)
    nu_ = _weights(nu, n, "nu", 1.0, node_ids)
    a_ = _weights(a, m, "a", mu_, edge_labels)
    d_ = _weights(d, n, "d", nu_, node_ids)
    return WeightedGraph(
        node_ids=node_ids,
        tails=_frozen(np.array(tails, dtype=np.int64)),
        heads=_frozen(np.array(heads, dtype=np.int64)),
        mu=_frozen(mu_), nu=_frozen(nu_), a=_frozen(a_), d=_frozen(d_),
    )


def replace_weights(g: WeightedGraph, *, mu: WeightLike = None, nu: WeightLike = None,
                    a: WeightLike = None, d: WeightLike = None) -> WeightedGraph:
    """Copy of ``g`` with some weight vectors replaced (unspecified ones kept)."""
    return build_graph(
        g.node_ids, g.edge_ids,
        mu=g.mu if mu is None else mu, nu=g.nu if nu is None else nu,
        a=g.a if a is None else a, d=g.d if d is None else d,
    )


def flip_edges(g: WeightedGraph, which: Iterable[int]) -> WeightedGraph:
    """Reverse the orientation of the listed edges; weights travel with the edge."""
    tails, heads = g.tails.copy(), g.heads.copy()
    idx = np.fromiter(which, dtype=np.int64)
    tails[idx], heads[idx] = g.heads[idx], g.tails[idx]
    return WeightedGraph(g.node_ids, _frozen(tails), _frozen(heads), g.mu, g.nu, g.a, g.d)


def degree(g: WeightedGraph, v: NodeId, kind: Literal["out", "in", "total"] = "total") -> float:
    i = g.index(v)
    out = float(g.mu[g.tails == i].sum())
    inn = float(g.mu[g.heads == i].sum())
    if kind == "out":
        return out
    if kind == "in":
        return inn
    if kind == "total":
        return out + inn
    raise ValueError(f"unknown degree kind {kind!r}")


def degrees(g: WeightedGraph, weight: Literal["mu", "a"] = "mu") -> np.ndarray:
    """Total weighted degree of every node."""
    w = g.mu if weight == "mu" else g.a
    return np.bincount(g.tails, w, g.n_nodes) + np.bincount(g.heads, w, g.n_nodes)


def uniform_local_finiteness_ratio(g: WeightedGraph) -> float:
    if g.n_nodes == 0:
        return 0.0
    return float(np.max(degrees(g) / g.nu))


def adjacency(g: WeightedGraph, weight: Literal["mu", "a"] = "a") -> sp.csr_matrix:
    """Symmetric weighted adjacency matrix."""
    w = g.mu if weight == "mu" else g.a
    n = g.n_nodes
    m = sp.csr_matrix((w, (g.tails, g.heads)), shape=(n, n))
    return (m + m.T).tocsr()


def _index_set(g: WeightedGraph, w_set: Iterable[NodeId]) -> np.ndarray:
    mask = np.zeros(g.n_nodes, dtype=bool)
    for v in w_set:
        mask[g.index(v)] = True
    return mask


def induced_subgraph(g: WeightedGraph, w_set: Iterable[NodeId]) -> WeightedGraph:
    """Subgraph on ``w_set`` keeping every edge with both endpoints inside, same weights."""
    mask = _index_set(g, w_set)
    keep_nodes = np.flatnonzero(mask)
    keep_edges = np.flatnonzero(mask[g.tails] & mask[g.heads])
    remap = -np.ones(g.n_nodes, dtype=np.int64)
    remap[keep_nodes] = np.arange(keep_nodes.size)
    return WeightedGraph(
        node_ids=tuple(g.node_ids[i] for i in keep_nodes),
        tails=_frozen(remap[g.tails[keep_edges]]),
        heads=_frozen(remap[g.heads[keep_edges]]),
        mu=_frozen(g.mu[keep_edges]), nu=_frozen(g.nu[keep_nodes]),
        a=_frozen(g.a[keep_edges]), d=_frozen(g.d[keep_nodes]),
    )


def boundary_edge_indices(g: WeightedGraph, w_set: Iterable[NodeId]) -> np.ndarray:
    mask = _index_set(g, w_set)
    return np.flatnonzero(mask[g.tails] ^ mask[g.heads])


def boundary_edges(g: WeightedGraph, w_set: Iterable[NodeId]) -> list[tuple[NodeId, NodeId]]:
    """Edges with exactly one endpoint in ``w_set``, as (e+, e-) identifier pairs."""
    ids = g.edge_ids
    return [ids[e] for e in boundary_edge_indices(g, w_set)]


def connected_components(g: WeightedGraph) -> list[set]:
    """Components of the underlying undirected graph, ordered by first node."""
    if g.n_nodes == 0:
        return []
    _, labels = _cc(adjacency(g), directed=False)
    comps: dict[int, set] = {}
    for i, lab in enumerate(labels):
        comps.setdefault(int(lab), set()).add(g.node_ids[i])
    return list(comps.values())


def is_connected(g: WeightedGraph) -> bool:
    return len(connected_components(g)) <= 1


def disjoint_union(g: WeightedGraph, h: WeightedGraph) -> WeightedGraph:
    if set(g.node_ids) & set(h.node_ids):
        raise DuplicateNodeError("node identifiers of the two graphs overlap")
    return build_graph(
        g.node_ids + h.node_ids, g.edge_ids + h.edge_ids,
        mu=np.r_[g.mu, h.mu], nu=np.r_[g.nu, h.nu], a=np.r_[g.a, h.a], d=np.r_[g.d, h.d],
    )


@dataclass(frozen=True)
class Exhaustion:
    """Nested prefixes V_n = first n nodes of ``parent`` in its node order."""

    parent: WeightedGraph
    prefix_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.prefix_sizes)
        object.__setattr__(self, "prefix_sizes", sizes)
        if not sizes:
            raise ValueError("exhaustion needs at least one level")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"prefix sizes must be strictly increasing: {sizes}")
        if sizes[0] < 1 or sizes[-1] > self.parent.n_nodes:
            raise ValueError(f"prefix sizes must lie in [1, {self.parent.n_nodes}]")

    def __len__(self) -> int:
        return len(self.prefix_sizes)

    def level_nodes(self, k: int) -> tuple:
        return self.parent.node_ids[: self.prefix_sizes[k]]

    def level_graph(self, k: int) -> WeightedGraph:
        return induced_subgraph(self.parent, self.level_nodes(k))

    def is_exhaustive(self) -> bool:
        return self.prefix_sizes[-1] == self.parent.n_nodes


def line_graph(g: WeightedGraph) -> WeightedGraph:
    """Line graph of an unweighted graph; node ``"u-v"`` per edge, edges low -> high index."""
    if not g.is_unweighted():
        raise NotUnweightedError("line graph is only defined for mu = nu = 1")
    ids = [f"{u}-{v}" for u, v in g.edge_ids]
    incident: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for e, (u, v) in enumerate(g.edges):
        incident[u].append(e)
        incident[v].append(e)
    pairs = set()
    for inc in incident:
        for i, e in enumerate(inc):
            for f in inc[i + 1:]:
                pairs.add((min(e, f), max(e, f)))
    edges = [(ids[e], ids[f]) for e, f in sorted(pairs)]
    return build_graph(ids, edges)


class SemiregularInfo(NamedTuple):
    r: int
    s: int
    parts: tuple[frozenset, frozenset]
    oriented: bool  # every edge already runs V1 -> V2


def two_coloring(g: WeightedGraph) -> np.ndarray | None:
    color = -np.ones(g.n_nodes, dtype=np.int64)
    nbrs: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for u, v in g.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    for start in range(g.n_nodes):
        if color[start] >= 0:
            continue
        color[start] = 0
        stack = [start]
        comp = [start]
        while stack:
            u = stack.pop()
            for w in nbrs[u]:
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    stack.append(w)
                    comp.append(w)
                elif color[w] == color[u]:
                    return None
        # align component so that edge tails get colour 0 when orientation is consistent
        comp_set = set(comp)
        tails_col = {int(color[u]) for u, v in g.edges if u in comp_set}
        if tails_col == {1}:
            color[comp] = 1 - color[comp]
    return color


def semiregular_bipartite_check(g: WeightedGraph) -> SemiregularInfo | None:
    """Return (r, s, (V1, V2), oriented) for an (r, s)-semiregular bipartite graph, else None.

    V1 is the side holding the edge tails whenever the orientation is already
    bipartite; use :func:`orient_bipartite` to normalise otherwise.
    """
    if not g.is_unweighted():
        raise NotUnweightedError("semiregularity is only defined for mu = nu = 1")
    if g.n_edges == 0:
        return None
    color = two_coloring(g)
    if color is None:
        return None
    deg = degrees(g).astype(np.int64)
    if np.any(deg == 0):
        return None
    d1, d2 = set(deg[color == 0].tolist()), set(deg[color == 1].tolist())
    if len(d1) != 1 or len(d2) != 1:
        # disconnected pieces may have been coloured the other way round
        return None
    v1 = frozenset(g.node_ids[i] for i in np.flatnonzero(color == 0))
    v2 = frozenset(g.node_ids[i] for i in np.flatnonzero(color == 1))
    oriented = bool(np.all(color[g.tails] == 0))
    return SemiregularInfo(d1.pop(), d2.pop(), (v1, v2), oriented)


def orient_bipartite(g: WeightedGraph, info: SemiregularInfo) -> WeightedGraph:
    """Flip edges so that every edge starts in V1."""
    v1 = info.parts[0]
    flip = [e for e, (u, _) in enumerate(g.edge_ids) if u not in v1]
    return flip_edges(g, flip) if flip else g


# --- text format -----------------------------------------------------------

def parse_graph(text: str, source: str = "<string>") -> WeightedGraph:
    """Parse ``node <id> <nu> [<d>]`` / ``edge <src> <dst> <mu> [<a>]`` lines."""
    nodes, nu, d = [], [], []
    edges, mu, a = [], [], []
    seen_nodes: dict = {}
    seen_edges: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        where = f"{source}:{lineno}"
        try:
            if tok[0] == "node" and len(tok) in (3, 4):
                v = tok[1]
                if v in seen_nodes:
                    raise GraphFileError(f"{where}: duplicate node {v!r} (first at line {seen_nodes[v]})")
                w = [float(x) for x in tok[2:]]
                if any(not (x > 0 and np.isfinite(x)) for x in w):
                    raise GraphFileError(f"{where}: nonpositive node weight for {v!r}")
                seen_nodes[v] = lineno
                nodes.append(v)
                nu.append(w[0])
                d.append(w[-1])
            elif tok[0] == "edge" and len(tok) in (4, 5):
                u, v = tok[1], tok[2]
                for x in (u, v):
                    if x not in seen_nodes:
                        raise GraphFileError(f"{where}: unknown node {x!r}")
                if u == v:
                    raise GraphFileError(f"{where}: self-loop at {u!r}")
                key = frozenset((u, v))
                if key in seen_edges:
                    raise GraphFileError(f"{where}: parallel edge {u!r}-{v!r} (first at line {seen_edges[key]})")
                w = [float(x) for x in tok[3:]]
                if any(not (x > 0 and np.isfinite(x)) for x in w):
                    raise GraphFileError(f"{where}: nonpositive edge weight on {u!r}-{v!r}")
                seen_edges[key] = lineno
                edges.append((u, v))
                mu.append(w[0])
                a.append(w[-1])
            else:
                raise GraphFileError(f"{where}: cannot parse {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, GraphFileError):
                raise
            raise GraphFileError(f"{where}: {exc}") from None
    return build_graph(nodes, edges, mu=mu, nu=nu, a=a, d=d)


def read_graph(path: str | Path) -> WeightedGraph:
    path = Path(path)
    return parse_graph(path.read_text(encoding="utf-8"), source=str(path))


def format_graph(g: WeightedGraph) -> str:
    lines = [f"node {v} {nu!r} {d!r}" for v, nu, d in zip(g.node_ids, g.nu.tolist(), g.d.tolist())]
    lines += [f"edge {u} {v} {mu!r} {a!r}" for (u, v), mu, a in zip(g.edge_ids, g.mu.tolist(), g.a.tolist())]
    return "\n".join(lines) + "\n"


def write_graph(g: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8")
