"""Exact sampling from shape-constrained discrete distributions with few oracle queries.

The builders read an unnormalized target ``p~`` on ``{1..N}`` through a
query-counting oracle and return an envelope ``q~ >= p~`` whose total mass
is within a constant factor of the target's. Rejection sampling against the
envelope then yields exact draws. The same machinery over the sorted
exponential weights gives an EXP3 variant with polylogarithmic per-round cost.
"""
__version__ = "0.1.0"

from .bandit import (
    BanditConfig,
    BanditRun,
    Exp3Learner,
    FastExp3Learner,
    RankSpaceRound,
    estimate_increment,
    exp3_run,
    fast_exp3_run,
    importance_factor,
    pseudo_regret,
    regret_curve,
    run_bandit,
    step_size,
)
from .builders import (
    BuildReport,
    ClassViolationError,
    build_envelope,
    build_logconcave,
    build_monotone,
    build_tree_monotone,
    build_unimodal,
    find_mode,
    tree_cutoff_depth,
    tree_ratio_bound,
)
from .envelope import ConstBlock, Envelope, EnvelopeDomainError, ExpTail, TreeBlock
from .environments import (
    ChangingCliff,
    CustomTable,
    Environment,
    FixedPartition,
    LossRangeError,
    StochasticSlope,
    make_environment,
)
from .estimators import EnvelopeSampler, Exp3Bandit, FastExp3Bandit
from .oracle import OracleRangeError, QueryCountedPMF, TreePMF, load_dense, save_dense
from .ostree import OrderStatMap
from .sampler import (
    DominanceViolationError,
    InvalidBoundError,
    rejection_sample,
    rejection_sample_classical,
    sample_batch,
)

__all__ = [
    "BanditConfig", "BanditRun", "BuildReport", "ChangingCliff", "ClassViolationError", "ConstBlock",
    "CustomTable", "DominanceViolationError", "Envelope", "EnvelopeDomainError", "EnvelopeSampler",
    "Environment", "Exp3Bandit", "Exp3Learner", "ExpTail", "FastExp3Bandit", "FastExp3Learner",
    "FixedPartition", "InvalidBoundError", "LossRangeError", "OracleRangeError", "OrderStatMap",
    "QueryCountedPMF", "RankSpaceRound", "StochasticSlope", "TreeBlock", "TreePMF",
    "build_envelope", "build_logconcave", "build_monotone", "build_tree_monotone", "build_unimodal",
    "estimate_increment", "exp3_run", "fast_exp3_run", "find_mode", "importance_factor",
    "load_dense", "make_environment", "pseudo_regret", "regret_curve", "rejection_sample",
    "rejection_sample_classical", "run_bandit", "sample_batch", "save_dense", "step_size",
    "tree_cutoff_depth", "tree_ratio_bound",
]
