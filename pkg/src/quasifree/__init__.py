"""Entanglement entropy of translation-invariant quadratic fermion chains."""
from .model import ModelSpec, classify, eval_components, nn_model, nn_phase_region, symbol_components

__version__ = "0.1.0"

__all__ = [
    "ModelSpec",
    "classify",
    "eval_components",
    "nn_model",
    "nn_phase_region",
    "symbol_components",
    "__version__",
]
