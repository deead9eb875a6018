"""Optimisation of expected multiplicative reward over MDP schedulers."""

from .ecs import (
    DEFAULT_ENUM_CAP,
    BsccKind,
    MecClassification,
    classify_max_bscc,
    compute_Astar,
    find_nongambling_bscc,
    log_potential,
    mec_log_mp_classify,
)
from .pipeline import (
    PipelineResult,
    Preprocessed,
    extract_md_scheduler,
    mdp_values,
    minimize_values,
    preprocess_ecs,
    solve_lp1,
    threshold,
    translate_back,
)
from .spider import SpiderRecord, spider_remove

__all__ = [
    "DEFAULT_ENUM_CAP",
    "BsccKind",
    "MecClassification",
    "PipelineResult",
    "Preprocessed",
    "SpiderRecord",
    "classify_max_bscc",
    "compute_Astar",
    "extract_md_scheduler",
    "find_nongambling_bscc",
    "log_potential",
    "mdp_values",
    "mec_log_mp_classify",
    "minimize_values",
    "preprocess_ecs",
    "solve_lp1",
    "spider_remove",
    "threshold",
    "translate_back",
]
