"""Discrete p-Laplacian and p-heat flow on weighted graphs."""

from .calculus import difference, divergence, max_abs, norm, signless_apply, signless_difference, sobolev_norm
from .graph import (
    Exhaustion,
    WeightedGraph,
    boundary_edges,
    build_graph,
    connected_components,
    degree,
    induced_subgraph,
    line_graph,
    read_graph,
    semiregular_bipartite_check,
    uniform_local_finiteness_ratio,
)
from .operators import (
    energy,
    galerkin_operator,
    p_laplacian,
    rayleigh_quotient,
    signless_energy,
    signless_p_laplacian,
)
from .partitions import (
    NodePermutation,
    Partition,
    cell_average,
    is_node_automorphism,
    orbit_partition,
    quotient_graph,
    verify_almost_equitable,
)
from .solver import (
    SolverConfig,
    Trajectory,
    energy_inequality_check,
    exponential_formula,
    galerkin_solve,
    resolvent,
    solve_elliptic,
    solve_heat,
    step,
)

__version__ = "0.1.0"
