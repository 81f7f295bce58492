"""Deterministic /v1/transform service for desk-scale pipeline runs."""

from .app import create_app
from .backends import HashBigramScorer, HashEmbedder, rule_simplify, tiny_translate
from .config import ShimConfig, ShimStartupError, config_from_env

__version__ = "0.1.0"

__all__ = [
    "HashBigramScorer",
    "HashEmbedder",
    "ShimConfig",
    "ShimStartupError",
    "config_from_env",
    "create_app",
    "rule_simplify",
    "tiny_translate",
    "__version__",
]
