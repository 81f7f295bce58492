"""Shim configuration.

All default backends are seeded and deterministic: the same process
configuration answers identical requests with identical bytes. `hf:<model>`
backends load a local transformers model and make startup fail loudly when
they cannot.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_PORT = 8763
DEFAULT_EMBED_DIM = 384

TRANSLATOR_MODES = ("identity", "tiny-mt")


class ShimStartupError(RuntimeError):
    """Configuration or model-load failure; the service refuses to start."""


@dataclass(frozen=True)
class ShimConfig:
    port: int = DEFAULT_PORT
    embed_dim: int = DEFAULT_EMBED_DIM
    seed: int = 0
    translator: str = "identity"  # identity | tiny-mt
    simplifier: str = "rule"      # rule | hf:<model-id-or-path>
    scorer: str = "bigram"        # bigram | hf:<model-id-or-path>

    def __post_init__(self):
        if self.translator not in TRANSLATOR_MODES:
            raise ShimStartupError(
                f"unknown translator mode {self.translator!r}; "
                f"expected one of {TRANSLATOR_MODES}"
            )
        if self.simplifier != "rule" and not self.simplifier.startswith("hf:"):
            raise ShimStartupError(
                f"unknown simplifier mode {self.simplifier!r}; expected 'rule' or 'hf:<model>'"
            )
        if self.scorer != "bigram" and not self.scorer.startswith("hf:"):
            raise ShimStartupError(
                f"unknown scorer mode {self.scorer!r}; expected 'bigram' or 'hf:<model>'"
            )
        if self.embed_dim < 2:
            raise ShimStartupError("embed_dim must be at least 2")


def config_from_env(**overrides) -> ShimConfig:
    values = {
        "port": int(os.environ.get("SHIM_PORT", DEFAULT_PORT)),
        "embed_dim": int(os.environ.get("SHIM_EMBED_DIM", DEFAULT_EMBED_DIM)),
        "seed": int(os.environ.get("SHIM_SEED", 0)),
        "translator": os.environ.get("SHIM_TRANSLATOR", "identity"),
        "simplifier": os.environ.get("SHIM_SIMPLIFIER", "rule"),
        "scorer": os.environ.get("SHIM_SCORER", "bigram"),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ShimConfig(**values)
