"""Deterministic desk-scale model backends.

The defaults need no model weights: the embedder feature-hashes character
trigrams into a unit vector, the scorer is a smoothed hash-derived byte
bigram LM whose per-byte probabilities are strictly below 1 (so totals are
strictly negative and extending a text can only lower them), the translator
echoes or applies a toy dictionary, and the simplifier is a clause-pruning
rule cascade. Everything is keyed off the configured seed via blake2b, so
the same seed answers identically across processes.
"""

from __future__ import annotations

import hashlib
import math
import re
from functools import lru_cache
from typing import Callable

from .config import ShimConfig, ShimStartupError


def _hash64(seed: int, *parts: bytes) -> int:
    h = hashlib.blake2b(key=seed.to_bytes(8, "little"), digest_size=8)
    for p in parts:
        h.update(p)
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


class HashEmbedder:
    """Signed feature hashing of character trigrams, L2-normalized."""

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        padded = f"\x02{text}\x03"
        for i in range(len(padded) - 2):
            h = _hash64(self.seed, padded[i : i + 3].encode("utf-8"))
            sign = 1.0 if h & 1 else -1.0
            vec[(h >> 1) % self.dim] += sign
        norm = math.sqrt(sum(x * x for x in vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return [x / norm for x in vec]


class HashBigramScorer:
    """Byte-bigram LM with hash-derived weights.

    p(cur | prev) = w(prev, cur) / sum_c w(prev, c) with integer weights in
    [1, 16]; every conditional is < 1, so each byte contributes a strictly
    negative term and prefixes always upper-bound their extensions.
    """

    _BOS = 256

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _weight(self, prev: int, cur: int) -> int:
        return 1 + _hash64(self.seed, bytes([prev & 0xFF, prev >> 8]), bytes([cur])) % 16

    @lru_cache(maxsize=257)
    def _normalizer(self, prev: int) -> int:
        return sum(self._weight(prev, c) for c in range(256))

    def logprob(self, text: str) -> float:
        data = text.encode("utf-8")
        total = 0.0
        prev = self._BOS
        for cur in data:
            total += math.log(self._weight(prev, cur) / self._normalizer(prev))
            prev = cur
        return total


# Toy dictionary for the demo translator; unknown words pass through.
TINY_EN_ID = {
    "the": "itu", "a": "sebuah", "is": "adalah", "are": "adalah", "i": "saya",
    "you": "kamu", "we": "kami", "they": "mereka", "and": "dan", "or": "atau",
    "not": "tidak", "water": "air", "rain": "hujan", "day": "hari",
    "good": "baik", "new": "baru", "people": "orang", "eat": "makan",
    "drink": "minum", "go": "pergi", "house": "rumah", "cat": "kucing",
    "dog": "anjing", "big": "besar", "small": "kecil", "this": "ini",
    "that": "itu", "of": "dari", "in": "di", "with": "dengan", "for": "untuk",
    "very": "sangat", "here": "sini", "there": "sana", "now": "sekarang",
}

_WORD_RE = re.compile(r"[A-Za-z']+")


def tiny_translate(text: str) -> str:
    """Word-for-word toy translation; preserves token count and punctuation."""

    def repl(m):
        word = m.group(0)
        out = TINY_EN_ID.get(word.lower())
        if out is None:
            return word
        if word[0].isupper():
            return out.capitalize()
        return out

    return _WORD_RE.sub(repl, text)


_PARENTHETICAL = re.compile(r"\s*\([^()]*\)")
_REL_CLAUSE_MID = re.compile(r",\s*(?:which|who|whose|where)\b[^,.;!?]*,\s*")
_REL_CLAUSE_END = re.compile(r",\s*(?:which|who|whose|where)\b[^.;!?]*(?=[.;!?])")
_CLAUSE_SPLIT = re.compile(r"(?:,\s+(?:and|but|or|so)\s+|;\s+)(\w)")


def rule_simplify(text: str) -> str:
    """Clause-pruning simplifier: drop parentheticals and non-restrictive
    relative clauses, split coordinated clauses into sentences.

    Only deletes or re-punctuates, so the output never gains words.
    """
    out = _PARENTHETICAL.sub("", text)
    out = _REL_CLAUSE_MID.sub(" ", out)
    out = _REL_CLAUSE_END.sub("", out)
    out = _CLAUSE_SPLIT.sub(lambda m: ". " + m.group(1).upper(), out)
    out = re.sub(r"\s+", " ", out).strip()
    out = re.sub(r"\s+([.,;:!?])", r"\1", out)
    return out


# The reference pipeline wraps simplify payloads in a prompt; when that
# scaffold is present, simplify just the embedded text.
_PROMPT_BODY = re.compile(r"Text:\n(.*)\n\nSimplified text:", re.DOTALL)


def extract_prompt_body(text: str) -> str:
    m = _PROMPT_BODY.search(text)
    return m.group(1) if m else text


class HfScorer:
    """Total log-probability under a local causal LM (optional backend)."""

    def __init__(self, model_id: str):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as e:
            raise ShimStartupError(f"scorer {model_id!r} needs transformers+torch: {e}") from e
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModelForCausalLM.from_pretrained(model_id)
        except Exception as e:
            raise ShimStartupError(f"cannot load scorer model {model_id!r}: {e}") from e
        self.model.eval()
        self._torch = torch

    def logprob(self, text: str) -> float:
        if not text:
            return 0.0
        torch = self._torch
        ids = self.tokenizer(text, return_tensors="pt").input_ids
        with torch.no_grad():
            logits = self.model(ids).logits
        logp = logits[0, :-1].log_softmax(-1)
        picked = logp.gather(1, ids[0, 1:, None]).sum().item()
        return min(picked, -1e-9)


class HfSimplifier:
    """Greedy generation from a local seq2seq/causal model (optional backend)."""

    def __init__(self, model_id: str):
        try:
            from transformers import pipeline
        except ImportError as e:
            raise ShimStartupError(f"simplifier {model_id!r} needs transformers: {e}") from e
        try:
            self.pipe = pipeline("text2text-generation", model=model_id)
        except Exception as e:
            raise ShimStartupError(f"cannot load simplifier model {model_id!r}: {e}") from e

    def simplify(self, text: str) -> str:
        return self.pipe(text, max_new_tokens=128)[0]["generated_text"]


class Backends:
    translate: Callable[[str], str]
    simplify: Callable[[str], str]
    embed: Callable[[str], list]
    logprob: Callable[[str], float]

    def __init__(self, config: ShimConfig):
        self.config = config
        self.translate = (
            (lambda text: text) if config.translator == "identity" else tiny_translate
        )
        if config.simplifier == "rule":
            self.simplify = lambda text: rule_simplify(extract_prompt_body(text))
        else:
            self.simplify = HfSimplifier(config.simplifier[3:]).simplify
        self.embed = HashEmbedder(config.embed_dim, config.seed).embed
        if config.scorer == "bigram":
            self.logprob = HashBigramScorer(config.seed).logprob
        else:
            self.logprob = HfScorer(config.scorer[3:]).logprob
