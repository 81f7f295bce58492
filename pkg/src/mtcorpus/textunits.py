"""Shared text units: word tokens, syllables, and sentence boundaries.

Every count in the toolkit (type-token ratio, entropy, length bounds,
compression, ROUGE) is defined over the same word unit so that numbers
from different pipeline stages are comparable.
"""

from __future__ import annotations

import unicodedata
from functools import lru_cache

# Fast path for str.strip (runs in C); rarer Unicode punctuation falls
# through to the category check below.
_COMMON_PUNCT = (
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
    "«»“”‘’‚„…–—"
    "¡¿।、。！？；：（）"
)

_TERMINATORS = ".!?।"

# Words that end in a period without ending a sentence.
ABBREVIATIONS = frozenset({
    "dr", "mr", "mrs", "ms", "prof", "rev", "hon", "st", "jr", "sr",
    "vs", "etc", "e.g", "i.e", "cf", "al", "fig", "no", "vol", "pp",
    "approx", "dept", "est", "min", "max",
})

_VOWELS = frozenset("aeiouy")


@lru_cache(maxsize=4096)
def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct_slow(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def word_tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with leading/trailing punctuation removed.

    Interior punctuation survives: "don't" and "stop—now" are single tokens.
    Tokens that are pure punctuation disappear.
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_COMMON_PUNCT)
        if tok and (_is_punct(tok[0]) or _is_punct(tok[-1])):
            tok = _strip_punct_slow(tok)
        if tok:
            out.append(tok)
    return out


def count_syllables(word: str) -> int:
    """Vowel-group syllable heuristic.

    Maximal runs of [aeiouy] count one syllable each; a trailing 'e' is
    treated as silent when the word has more than one run; every word
    counts at least one syllable.
    """
    w = word.lower()
    groups = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    if groups > 1 and w.endswith("e"):
        groups -= 1
    return max(1, groups)


def _word_before(text: str, dot: int) -> str:
    k = dot
    while k > 0 and not text[k - 1].isspace():
        k -= 1
    return text[k:dot].lower().lstrip(_COMMON_PUNCT)


def segment_text(text: str) -> list[tuple[int, int]]:
    """Sentence spans as (start, end) character offsets, end exclusive.

    Splits after . ! ? or the danda when followed by whitespace and an
    uppercase letter or digit; an abbreviation stop-list guards periods.
    Spans cover all non-whitespace text and gaps between spans are
    whitespace only, so rejoining spans preserves the token sequence.
    Text that never matches the rule comes back as a single span.
    """
    n = len(text)
    start = 0
    while start < n and text[start].isspace():
        start += 1
    if start == n:
        return []
    spans = []
    i = start
    while i < n:
        if text[i] in _TERMINATORS:
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            boundary = j > i + 1 and j < n and (text[j].isupper() or text[j].isdigit())
            if boundary and text[i] == "." and _word_before(text, i) in ABBREVIATIONS:
                boundary = False
            if boundary:
                spans.append((start, i + 1))
                start = j
                i = j
                continue
        i += 1
    end = n
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append((start, end))
    return spans
