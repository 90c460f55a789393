"""Instance generators, class validators and brute-force ground truth."""
from .bruteforce import (
    check_dominance,
    exact_mass,
    exact_pmf,
    exact_ratio,
    score_envelope,
    sup_density_ratio,
)
from .generators import (
    InstanceSpec,
    gen_cliff,
    gen_geometric,
    gen_harmonic,
    gen_logconcave,
    gen_monotone,
    gen_tree,
    gen_tree_geometric,
    gen_unimodal,
)
from .validators import Check, is_logconcave, is_monotone, is_strictly_unimodal, is_tree_monotone

VALIDATORS = {
    "monotone": is_monotone,
    "unimodal": is_strictly_unimodal,
    "logconcave": is_logconcave,
    "tree": is_tree_monotone,
}

__all__ = [
    "Check", "InstanceSpec", "VALIDATORS",
    "check_dominance", "exact_mass", "exact_pmf", "exact_ratio", "score_envelope", "sup_density_ratio",
    "gen_cliff", "gen_geometric", "gen_harmonic", "gen_logconcave", "gen_monotone",
    "gen_tree", "gen_tree_geometric", "gen_unimodal",
    "is_logconcave", "is_monotone", "is_strictly_unimodal", "is_tree_monotone",
]
