"""Randomised generic rigidity, rigidity closure and the random graph process."""
__version__ = "0.1.0"

from .exceptions import FieldError, IntegrityError
from .primefield import MODULUS, RowBasis, SparseRowBasis, field_arith
from .graphs import (
    EvolutionStream,
    Graph,
    evolution,
    extended_core,
    gadget_graph,
    gnm,
    gnp,
    graph_oracles,
    henneberg_minimally_rigid,
    is_d_orientable,
    kcore,
    read_edge_list,
    write_edge_list,
)
from .rigidity import (
    Embedding,
    closure,
    clique_in_closure,
    is_globally_rigid,
    is_rigid,
    rigid_components,
    rigidity_rank,
    sample_embedding,
)
from .evolve import HittingTimes, coupled_closure_sampler, hitting_times, sandwich_coupling

__all__ = [
    "__version__",
    "FieldError",
    "IntegrityError",
    "MODULUS",
    "RowBasis",
    "SparseRowBasis",
    "field_arith",
    "EvolutionStream",
    "Graph",
    "evolution",
    "extended_core",
    "gadget_graph",
    "gnm",
    "gnp",
    "graph_oracles",
    "henneberg_minimally_rigid",
    "is_d_orientable",
    "kcore",
    "read_edge_list",
    "write_edge_list",
    "Embedding",
    "closure",
    "clique_in_closure",
    "is_globally_rigid",
    "is_rigid",
    "rigid_components",
    "rigidity_rank",
    "sample_embedding",
    "HittingTimes",
    "coupled_closure_sampler",
    "hitting_times",
    "sandwich_coupling",
]
