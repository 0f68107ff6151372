"""Named test graphs with their natural partitions and symmetry generators."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

from .graph import WeightedGraph, build_graph, disjoint_union
from .partitions import NodePermutation, Partition, permutation_from_cycles


@dataclass(frozen=True)
class Fixture:
    name: str
    graph: WeightedGraph
    description: str
    partitions: dict[str, Partition] = field(default_factory=dict)
    generators: dict[str, list[NodePermutation]] = field(default_factory=dict)


def _ids(n: int, prefix: str = "v") -> list[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def path(n: int, prefix: str = "v") -> WeightedGraph:
    ids = _ids(n, prefix)
    return build_graph(ids, list(zip(ids, ids[1:])))


def cycle(n: int) -> WeightedGraph:
    ids = _ids(n)
    return build_graph(ids, list(zip(ids, ids[1:] + ids[:1])))


def star(k: int) -> WeightedGraph:
    leaves = _ids(k)
    return build_graph(["c"] + leaves, [("c", v) for v in leaves])


def complete(n: int) -> WeightedGraph:
    ids = _ids(n)
    return build_graph(ids, [(u, v) for i, u in enumerate(ids) for v in ids[i + 1:]])


def complete_bipartite(r: int, s: int) -> WeightedGraph:
    """K_{r,s} with parts v1..vr and v(r+1)..v(r+s), edges oriented from the first part."""
    ids = _ids(r + s)
    return build_graph(ids, [(u, v) for u in ids[:r] for v in ids[r:]])


def binary_tree(depth: int) -> WeightedGraph:
    """Complete binary tree in heap order: root v1, children of vi are v(2i), v(2i+1)."""
    n = 2 ** (depth + 1) - 1
    ids = _ids(n)
    return build_graph(ids, [(f"v{i // 2}", f"v{i}") for i in range(2, n + 1)])


def binary_tree_spheres(depth: int) -> Partition:
    return Partition(tuple(tuple(f"v{i}" for i in range(2 ** k, 2 ** (k + 1))) for k in range(depth + 1)))


def binary_tree_swaps(g: WeightedGraph, depth: int) -> list[NodePermutation]:
    """One generator per internal node: exchange its two child subtrees."""
    n = 2 ** (depth + 1) - 1
    gens = []
    for i in range(1, 2 ** depth):
        mapping = {}
        left, right = [2 * i], [2 * i + 1]
        while left[0] <= n:
            for a, b in zip(left, right):
                mapping[f"v{a}"], mapping[f"v{b}"] = f"v{b}", f"v{a}"
            left = [c for x in left for c in (2 * x, 2 * x + 1)]
            right = [c for x in right for c in (2 * x, 2 * x + 1)]
        gens.append(NodePermutation.from_mapping(g, mapping))
    return gens


def comb(size: int) -> WeightedGraph:
    """Truncated comb: backbone (x, 0), x < size, each with a tooth (x, 1..size-1)."""
    ids = [f"x{x}y{y}" for y in range(size) for x in range(size)]
    edges = [(f"x{x}y0", f"x{x + 1}y0") for x in range(size - 1)]
    edges += [(f"x{x}y{y}", f"x{x}y{y + 1}") for x in range(size) for y in range(size - 1)]
    return build_graph(ids, edges)


def comb_rows(size: int) -> Partition:
    return Partition(tuple(tuple(f"x{x}y{y}" for x in range(size)) for y in range(size)))


def _p4() -> Fixture:
    g = path(4)
    return Fixture(
        "p4", g, "path on 4 nodes",
        partitions={
            "singletons": Partition.singletons(g),
            "shorting": Partition((("v1",), ("v2", "v3"), ("v4",))),
            "reflection": Partition((("v1", "v4"), ("v2", "v3"))),
        },
        generators={"reflection": [permutation_from_cycles(g, [["v1", "v4"], ["v2", "v3"]])]},
    )


def _c4() -> Fixture:
    g = cycle(4)
    rot = permutation_from_cycles(g, [["v1", "v2", "v3", "v4"]])
    return Fixture("c4", g, "cycle on 4 nodes", partitions={"orbits": Partition((tuple(g.node_ids),))},
                   generators={"rotation": [rot]})


def _tree(depth: int) -> Callable[[], Fixture]:
    def make() -> Fixture:
        g = binary_tree(depth)
        return Fixture(f"binary_tree_{depth}", g, f"complete binary tree of depth {depth}",
                       partitions={"spheres": binary_tree_spheres(depth)},
                       generators={"child_swaps": binary_tree_swaps(g, depth)})
    return make


def _star() -> Fixture:
    g = star(3)
    return Fixture("star_k13", g, "star K_{1,3}, edges out of the centre c",
                   partitions={"orbits": Partition((("c",), ("v1", "v2", "v3")))},
                   generators={"leaf_cycle": [permutation_from_cycles(g, [["v1", "v2", "v3"]])]})


def _comb() -> Fixture:
    g = comb(10)
    return Fixture("comb_10", g, "10x10 comb truncation (backbone y=0, teeth upward)",
                   partitions={"rows": comb_rows(10)})


_REGISTRY: dict[str, Callable[[], Fixture]] = {
    "single_edge": lambda: Fixture("single_edge", path(2), "one edge v1 -> v2"),
    "p3": lambda: Fixture("p3", path(3), "path on 3 nodes"),
    "p4": _p4,
    "star_k13": _star,
    "k3": lambda: Fixture("k3", complete(3), "triangle"),
    "c4": _c4,
    "k23": lambda: Fixture("k23", complete_bipartite(2, 3), "K_{2,3} oriented from the 2-part"),
    "p4_p3": lambda: Fixture("p4_p3", disjoint_union(path(4), path(3, "w")), "disjoint union of P4 and P3"),
    "edgeless_5": lambda: Fixture("edgeless_5", build_graph(_ids(5), []), "5 isolated nodes"),
    "binary_tree_2": _tree(2),
    "binary_tree_3": _tree(3),
    "binary_tree_4": _tree(4),
    "p100": lambda: Fixture("p100", path(100), "path on 100 nodes"),
    "comb_10": _comb,
}


def fixture_names() -> list[str]:
    return list(_REGISTRY)


def get_fixture(name: str) -> Fixture:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(_REGISTRY)}") from None


def all_fixtures() -> list[Fixture]:
    return [get_fixture(n) for n in _REGISTRY]
