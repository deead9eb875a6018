"""Exact expected multiplicative reward for Markov chains and MDPs."""

from .exactnum import Ordering, Sign, SuccinctProduct, SymbolicLogValue, csri_compare, weighted_log_sign
from .model import INF, AnalysisMode, Model, ModelError, build_model, load_model, parse_model

__all__ = [
    "INF",
    "AnalysisMode",
    "Model",
    "ModelError",
    "Ordering",
    "Sign",
    "SuccinctProduct",
    "SymbolicLogValue",
    "build_model",
    "csri_compare",
    "load_model",
    "parse_model",
    "weighted_log_sign",
]
