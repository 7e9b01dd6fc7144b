"""First-order statistics of finite structures: Stone pairings, homomorphism
densities, convergence diagnostics and interpretation schemes."""

__version__ = "0.1.0"

from .structures import (  # noqa: E402
    GRAPH_SIGNATURE,
    Signature,
    Structure,
    ball,
    ball_measure,
    connected_components,
    gaifman_graph,
    generate,
    graph,
    is_vertex_transitive,
    load_structure,
    scattered_set,
)
from .logic import (  # noqa: E402
    classify_fragment,
    expand_distance_atoms,
    free_variables,
    gaifman_bounds,
    bsr_model_bound,
    parse_formula,
    permute_variables,
    quantifier_rank,
)
from .evaluation import (  # noqa: E402
    estimate_stone_pairing,
    eval_gaifman_sentence,
    models,
    pairing,
    profile,
    satisfying_set,
    stone_pairing,
)
from .homalg import QuantumGraph, canonical_formula, hom_count, hom_density  # noqa: E402
from .interpretation import BasicScheme, FullScheme, apply_scheme, transport_formula, verify_transport  # noqa: E402

__all__ = [
    "GRAPH_SIGNATURE",
    "Signature",
    "Structure",
    "ball",
    "ball_measure",
    "connected_components",
    "gaifman_graph",
    "generate",
    "graph",
    "is_vertex_transitive",
    "load_structure",
    "scattered_set",
    "classify_fragment",
    "expand_distance_atoms",
    "free_variables",
    "gaifman_bounds",
    "bsr_model_bound",
    "parse_formula",
    "permute_variables",
    "quantifier_rank",
    "estimate_stone_pairing",
    "eval_gaifman_sentence",
    "models",
    "pairing",
    "profile",
    "satisfying_set",
    "stone_pairing",
    "QuantumGraph",
    "canonical_formula",
    "hom_count",
    "hom_density",
    "BasicScheme",
    "FullScheme",
    "apply_scheme",
    "transport_formula",
    "verify_transport",
]
