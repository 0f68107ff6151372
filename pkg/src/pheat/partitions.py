"""Node automorphisms, orbit partitions, almost equitable partitions and cell averaging."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    GraphFileError,
    InvalidPartitionError,
    NotABijectionError,
    NotAutomorphismError,
    NotEquitableError,
)
from .graph import NodeId, WeightedGraph, adjacency


@dataclass(frozen=True)
class Partition:
    cells: tuple[tuple, ...]
    certificate: EquitableCertificate | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(tuple(c) for c in self.cells))

    def __len__(self) -> int:
        return len(self.cells)

    def labels(self, g: WeightedGraph) -> np.ndarray:
        """Cell number of every node; validates that the cells partition V."""
        lab = -np.ones(g.n_nodes, dtype=np.int64)
        for k, cell in enumerate(self.cells):
            if not cell:
                raise InvalidPartitionError(f"cell {k} is empty")
            for v in cell:
                try:
                    i = g.index(v)
                except KeyError:
                    raise InvalidPartitionError(f"cell {k} contains unknown node {v!r}") from None
                if lab[i] >= 0:
                    raise InvalidPartitionError(f"node {v!r} appears in cells {lab[i]} and {k}")
                lab[i] = k
        missing = np.flatnonzero(lab < 0)
        if missing.size:
            raise InvalidPartitionError(f"node {g.node_ids[missing[0]]!r} is not covered by any cell")
        return lab

    @classmethod
    def singletons(cls, g: WeightedGraph) -> Partition:
        return cls(tuple((v,) for v in g.node_ids))

    @classmethod
    def whole(cls, g: WeightedGraph) -> Partition:
        return cls((tuple(g.node_ids),))


@dataclass(frozen=True)
class NodePermutation:
    """Bijection on node indices: node i is sent to ``perm[i]``."""

    perm: tuple[int, ...]

    @classmethod
    def from_mapping(cls, g: WeightedGraph, mapping: Mapping[NodeId, NodeId]) -> NodePermutation:
        """Build from an id -> id mapping; unlisted nodes are fixed."""
        perm = list(range(g.n_nodes))
        for src, dst in mapping.items():
            perm[g.index(src)] = g.index(dst)
        if sorted(perm) != list(range(g.n_nodes)):
            seen: dict[int, int] = {}
            for i, j in enumerate(perm):
                if j in seen:
                    raise NotABijectionError(
                        f"nodes {g.node_ids[seen[j]]!r} and {g.node_ids[i]!r} "
                        f"both map to {g.node_ids[j]!r}")
                seen[j] = i
        return cls(tuple(perm))

    @classmethod
    def identity(cls, g: WeightedGraph) -> NodePermutation:
        return cls(tuple(range(g.n_nodes)))

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))):
            raise NotABijectionError("permutation is not a bijection on node indices")

    def matrix(self) -> np.ndarray:
        """Matrix of composition f -> f o O."""
        n = len(self.perm)
        m = np.zeros((n, n))
        m[np.arange(n), self.perm] = 1.0
        return m

    def compose_with(self, f) -> np.ndarray:
        """(f o O)(v) = f(O v)."""
        return np.asarray(f)[list(self.perm)]


@dataclass(frozen=True)
class AutomorphismCheck:
    ok: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_node_automorphism(g: WeightedGraph, O: NodePermutation, tol: float = 1e-12) -> AutomorphismCheck:
    """Check d(Ov) = d(v) and a(Ov, Ow) = a(v, w); the witness is the first failing pair."""
    if len(O.perm) != g.n_nodes:
        raise NotABijectionError(f"permutation acts on {len(O.perm)} nodes, graph has {g.n_nodes}")
    perm = np.asarray(O.perm)
    bad = np.flatnonzero(np.abs(g.d[perm] - g.d) > tol)
    if bad.size:
        v = g.node_ids[bad[0]]
        return AutomorphismCheck(False, (v, g.node_ids[perm[bad[0]]]))
    for e, (u, v) in enumerate(g.edges):
        f = g.edge_between(int(perm[u]), int(perm[v]))
        if f is None or abs(g.a[f] - g.a[e]) > tol:
            return AutomorphismCheck(False, (g.node_ids[u], g.node_ids[v]))
    return AutomorphismCheck(True)


def orbit_partition(g: WeightedGraph, generators: Iterable[NodePermutation]) -> Partition:
    """Orbits of the group generated by ``generators`` (union-find closure)."""
    parent = list(range(g.n_nodes))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for k, O in enumerate(generators):
        chk = is_node_automorphism(g, O)
        if not chk:
            raise NotAutomorphismError(f"generator {k} is not an automorphism (witness {chk.witness})")
        for i, j in enumerate(O.perm):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    cells: dict[int, list] = {}
    for i in range(g.n_nodes):
        cells.setdefault(find(i), []).append(g.node_ids[i])
    return Partition(tuple(tuple(c) for c in cells.values()))


@dataclass(frozen=True)
class EquitableCertificate:
    ok: bool  # almost equitable
    coefficients: np.ndarray  # c_ij; diagonal NaN unless equitable
    equitable: bool
    tol: float
    witness: tuple | None = None  # (i, j, v, v') for the first failing pair
    spread: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))  # max - min per (i, j)

    def __bool__(self) -> bool:
        return self.ok


def cell_connection_matrix(g: WeightedGraph, partition: Partition) -> np.ndarray:
    """S[v, j] = (sum_{w in V_j} a(v, w)) / d(v)."""
    lab = partition.labels(g)
    ind = np.zeros((g.n_nodes, len(partition)))
    ind[np.arange(g.n_nodes), lab] = 1.0
    return np.asarray(adjacency(g, "a") @ ind) / g.d[:, None]


def verify_almost_equitable(g: WeightedGraph, partition: Partition, tol: float = 1e-9) -> EquitableCertificate:
    lab = partition.labels(g)
    S = cell_connection_matrix(g, partition)
    k = len(partition)
    c = np.zeros((k, k))
    spread = np.zeros((k, k))
    witness = None
    diag_witness = None
    for i in range(k):
        members = np.flatnonzero(lab == i)
        block = S[members]
        c[i] = block.mean(axis=0)
        spread[i] = block.max(axis=0) - block.min(axis=0)
        for j in range(k):
            if spread[i, j] > tol:
                w = (i, j, g.node_ids[members[np.argmin(block[:, j])]],
                     g.node_ids[members[np.argmax(block[:, j])]])
                if i != j and witness is None:
                    witness = w
                elif i == j and diag_witness is None:
                    diag_witness = w
    ok = witness is None
    equitable = ok and diag_witness is None
    if not equitable:
        np.fill_diagonal(c, np.nan)
    cert = EquitableCertificate(ok, c, equitable, tol, witness or diag_witness, spread)
    return cert


def averaging_matrix(g: WeightedGraph, partition: Partition) -> np.ndarray:
    """Dense matrix of the d-weighted cellwise averaging projector."""
    lab = partition.labels(g)
    n = g.n_nodes
    P = np.zeros((n, n))
    for i in range(len(partition)):
        members = np.flatnonzero(lab == i)
        w = g.d[members] / g.d[members].sum()
        P[np.ix_(members, members)] = w[None, :]
    return P


def cell_average(g: WeightedGraph, partition: Partition, f) -> np.ndarray:
    """Pf(v) = (1/|V_i|_d) sum_{w in V_i} f(w) d(w) for v in V_i."""
    lab = partition.labels(g)
    f = np.asarray(f, dtype=float)
    k = len(partition)
    num = np.bincount(lab, f * g.d, k)
    den = np.bincount(lab, g.d, k)
    return (num / den)[lab]


@dataclass(frozen=True)
class QuotientGraph:
    cells: tuple[tuple, ...]
    edges: dict  # (i, j) -> c_ij for i != j with c_ij != 0
    loops: dict  # i -> c_ii when nonzero

    @property
    def n_nodes(self) -> int:
        return len(self.cells)

    def matrix(self) -> np.ndarray:
        k = len(self.cells)
        m = np.zeros((k, k))
        for (i, j), c in self.edges.items():
            m[i, j] = c
        for i, c in self.loops.items():
            m[i, i] = c
        return m


def quotient_graph(g: WeightedGraph, partition: Partition,
                   certificate: EquitableCertificate | None = None) -> QuotientGraph:
    cert = certificate or verify_almost_equitable(g, partition)
    if not cert.equitable:
        raise NotEquitableError(f"partition is not equitable (witness {cert.witness})")
    c = cert.coefficients
    k = len(partition)
    edges = {(i, j): float(c[i, j]) for i in range(k) for j in range(k) if i != j and c[i, j] != 0}
    loops = {i: float(c[i, i]) for i in range(k) if c[i, i] != 0}
    return QuotientGraph(partition.cells, edges, loops)


# --- text formats ------------------------------------------------------------

def parse_partition(text: str, source: str = "<string>") -> Partition:
    """Lines ``cell <k>: <id> <id> ...``; cells are ordered by k."""
    cells: dict[int, tuple] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        tok = head.split()
        if not sep or len(tok) != 2 or tok[0] != "cell":
            raise GraphFileError(f"{source}:{lineno}: expected 'cell <k>: <id> ...'")
        try:
            k = int(tok[1])
        except ValueError:
            raise GraphFileError(f"{source}:{lineno}: bad cell number {tok[1]!r}") from None
        if k in cells:
            raise GraphFileError(f"{source}:{lineno}: cell {k} defined twice")
        ids = tuple(rest.split())
        if not ids:
            raise GraphFileError(f"{source}:{lineno}: cell {k} is empty")
        cells[k] = ids
    return Partition(tuple(cells[k] for k in sorted(cells)))


def format_partition(partition: Partition) -> str:
    return "".join(f"cell {k}: {' '.join(map(str, c))}\n" for k, c in enumerate(partition.cells))


def read_partition(path: str | Path) -> Partition:
    path = Path(path)
    return parse_partition(path.read_text(encoding="utf-8"), str(path))


def parse_permutation(text: str, g: WeightedGraph, source: str = "<string>") -> NodePermutation:
    """Lines ``<id> -> <id>``; unlisted nodes are fixed."""
    mapping: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [s.strip() for s in line.split("->")]
        if len(parts) != 2 or not all(parts):
            raise GraphFileError(f"{source}:{lineno}: expected '<id> -> <id>'")
        src, dst = parts
        for x in (src, dst):
            if x not in g._index:
                raise GraphFileError(f"{source}:{lineno}: unknown node {x!r}")
        if src in mapping:
            raise GraphFileError(f"{source}:{lineno}: node {src!r} mapped twice")
        mapping[src] = dst
    return NodePermutation.from_mapping(g, mapping)


def format_permutation(g: WeightedGraph, O: NodePermutation) -> str:
    ids = g.node_ids
    return "".join(f"{ids[i]} -> {ids[j]}\n" for i, j in enumerate(O.perm))


def read_permutation(path: str | Path, g: WeightedGraph) -> NodePermutation:
    path = Path(path)
    return parse_permutation(path.read_text(encoding="utf-8"), g, str(path))


def permutation_from_cycles(g: WeightedGraph, cycles: Sequence[Sequence[NodeId]]) -> NodePermutation:
    """Permutation given in cycle notation over node ids."""
    mapping: dict = {}
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            mapping[a] = b
    return NodePermutation.from_mapping(g, mapping)
