"""Byte-level BPE: training, encode/decode, token budgets, sequence packing.

The base alphabet is the 256 byte values, so any UTF-8 text encodes without
unknown tokens (byte fallback is structural, not a mode). Training greedily
merges the most frequent adjacent token pair, breaking count ties by the
lexicographically smaller (bytes, bytes) pair; pairs never cross document
boundaries. [PAD] and [SEP] sit outside the trained vocabulary; [PAD]
doubles as EOS during sequence packing.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

PAD_TOKEN = "[PAD]"
SEP_TOKEN = "[SEP]"
DEFAULT_VOCAB_SIZE = 50257
DEFAULT_CONTEXT = 1024

MERGES_FILE = "merges.txt"
VOCAB_FILE = "vocab.json"


def _bytes_to_unicode() -> dict[int, str]:
    # GPT-2-style visible mapping so vocab/merges files never contain raw
    # whitespace or control bytes
    bs = list(range(33, 127)) + list(range(161, 173)) + list(range(174, 256))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, (chr(c) for c in cs)))


_BYTE_TO_CHAR = _bytes_to_unicode()
_CHAR_TO_BYTE = {c: b for b, c in _BYTE_TO_CHAR.items()}


def token_to_display(token: bytes) -> str:
    return "".join(_BYTE_TO_CHAR[b] for b in token)


def display_to_token(display: str) -> bytes:
    try:
        return bytes(_CHAR_TO_BYTE[c] for c in display)
    except KeyError as e:
        raise ValueError(f"invalid character {e.args[0]!r} in serialized token") from e


@dataclass
class VocabModel:
    """Trained merges plus the vocabulary they induce.

    vocab maps token bytes to ids for the 256 base tokens and every merge
    product; the two specials live just past the trained ids.
    """

    merges: list
    vocab: dict
    pad_id: int
    sep_id: int

    def __post_init__(self):
        self._bytes_of = {i: tok for tok, i in self.vocab.items()}
        self._ranks = {}
        for rank, (a, b) in enumerate(self.merges):
            self._ranks[(self.vocab[a], self.vocab[b])] = (rank, self.vocab[a + b])

    @property
    def size(self) -> int:
        """Vocabulary size including the two specials."""
        return len(self.vocab) + 2


@dataclass(frozen=True)
class TokenBudget:
    setup: str
    mt_tokens: int
    native_tokens: int


def _pair_counts(seqs: Sequence[list]) -> tuple[Counter, defaultdict]:
    counts: Counter = Counter()
    locs: defaultdict = defaultdict(set)
    for si, seq in enumerate(seqs):
        for a, b in zip(seq, seq[1:]):
            counts[(a, b)] += 1
            locs[(a, b)].add(si)
    return counts, locs


def _select_pair(counts: Counter, id_to_bytes: list) -> tuple | None:
    """Most frequent pair; ties go to the lexicographically smaller bytes pair."""
    best = None
    best_count = 0
    best_key = None
    for pair, cnt in counts.items():
        if cnt <= 0:
            continue
        key = (id_to_bytes[pair[0]], id_to_bytes[pair[1]])
        if cnt > best_count or (cnt == best_count and key < best_key):
            best, best_count, best_key = pair, cnt, key
    return best


def _replace_pair(seq: list, pair: tuple, new_id: int) -> list:
    """Left-to-right non-overlapping replacement of `pair` with `new_id`."""
    a, b = pair
    out = []
    i, n = 0, len(seq)
    while i < n:
        if seq[i] == a and i + 1 < n and seq[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def train_bpe(docs, vocab_size: int = DEFAULT_VOCAB_SIZE) -> VocabModel:
    """Train byte-level BPE over a document stream.

    Deterministic given the corpus bytes: counts are exact and the tie-break
    is a total order. Raises when the corpus runs out of adjacent pairs
    before the requested size is reached.
    """
    if vocab_size < 257:
        raise ValueError("vocab_size must be at least 257 (256 byte tokens + 1 merge)")
    seqs = []
    n_docs = 0
    for doc in docs:
        n_docs += 1
        b = doc.text.encode("utf-8")
        if b:
            seqs.append(list(b))
    if n_docs == 0:
        raise ValueError("cannot train on an empty corpus")

    counts, locs = _pair_counts(seqs)
    id_to_bytes = [bytes([i]) for i in range(256)]
    merges: list = []
    for _ in range(vocab_size - 256):
        pair = _select_pair(counts, id_to_bytes)
        if pair is None:
            raise ValueError(
                f"corpus exhausted at vocab size {len(id_to_bytes)}: "
                "no adjacent pairs left to merge"
            )
        new_id = len(id_to_bytes)
        id_to_bytes.append(id_to_bytes[pair[0]] + id_to_bytes[pair[1]])
        merges.append((id_to_bytes[pair[0]], id_to_bytes[pair[1]]))
        # rewrite only the sequences that contain the pair, updating counts
        # by full recount of each touched sequence (robust, desk-scale)
        for si in locs.pop(pair, ()):
            old = seqs[si]
            new = _replace_pair(old, pair, new_id)
            for p in zip(old, old[1:]):
                counts[p] -= 1
                if counts[p] <= 0:
                    del counts[p]
            for p in zip(new, new[1:]):
                counts[p] += 1
                locs[p].add(si)
            seqs[si] = new

    vocab = {tok: i for i, tok in enumerate(id_to_bytes)}
    return VocabModel(
        merges=merges, vocab=vocab, pad_id=len(vocab), sep_id=len(vocab) + 1
    )


def encode(text: str, model: VocabModel) -> list[int]:
    """Apply merges in rank order via a heap over a doubly-linked token list.

    Within one rank, leftmost occurrences merge first, matching the trainer's
    left-to-right pass.
    """
    data = text.encode("utf-8")
    n = len(data)
    if n == 0:
        return []
    if n == 1:
        return [data[0]]
    ranks = model._ranks
    val = list(data)
    prev = list(range(-1, n - 1))
    nxt = list(range(1, n + 1))
    nxt[-1] = -1
    alive = [True] * n

    heap: list = []
    for i in range(n - 1):
        r = ranks.get((val[i], val[i + 1]))
        if r is not None:
            heap.append((r[0], i))
    heapq.heapify(heap)

    while heap:
        rank, i = heapq.heappop(heap)
        if not alive[i]:
            continue
        j = nxt[i]
        if j == -1:
            continue
        entry = ranks.get((val[i], val[j]))
        if entry is None or entry[0] != rank:
            continue  # stale heap entry
        val[i] = entry[1]
        alive[j] = False
        nxt[i] = nxt[j]
        if nxt[j] != -1:
            prev[nxt[j]] = i
        p = prev[i]
        if p != -1:
            r = ranks.get((val[p], val[i]))
            if r is not None:
                heapq.heappush(heap, (r[0], p))
        q = nxt[i]
        if q != -1:
            r = ranks.get((val[i], val[q]))
            if r is not None:
                heapq.heappush(heap, (r[0], i))

    out = []
    i = 0
    while i != -1:
        if alive[i]:
            out.append(val[i])
        i = nxt[i]
    return out


def decode(ids: Iterable[int], model: VocabModel) -> str:
    """Inverse of encode; specials decode to nothing."""
    parts = []
    for i in ids:
        if i == model.pad_id or i == model.sep_id:
            continue
        tok = model._bytes_of.get(i)
        if tok is None:
            raise ValueError(f"token id {i} out of range")
        parts.append(tok)
    return b"".join(parts).decode("utf-8")


def count_tokens(docs, model: VocabModel) -> int:
    """Total encoded tokens over a document stream, specials excluded."""
    total = 0
    for doc in docs:
        total += len(encode(doc.text, model))
    return total


def pack_sequences(
    doc_token_lists: Iterable[Sequence[int]],
    pad_id: int,
    context: int = DEFAULT_CONTEXT,
) -> Iterator[list]:
    """Yield training rows of exactly `context` ids.

    Documents are concatenated with one PAD-as-EOS after each; the final
    partial row is right-padded with PAD.
    """
    if context < 1:
        raise ValueError("context must be positive")
    buf: list = []
    for ids in doc_token_lists:
        buf.extend(ids)
        buf.append(pad_id)
        while len(buf) >= context:
            yield buf[:context]
            buf = buf[context:]
    if buf:
        buf.extend([pad_id] * (context - len(buf)))
        yield buf


def save_model(model: VocabModel, dirpath) -> None:
    """Two files: merges.txt (one pair per line, rank order) and vocab.json."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / MERGES_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in model.merges:
            fh.write(f"{token_to_display(a)} {token_to_display(b)}\n")
    payload = {
        "tokens": {token_to_display(tok): i for tok, i in model.vocab.items()},
        "specials": {PAD_TOKEN: model.pad_id, SEP_TOKEN: model.sep_id},
    }
    with open(d / VOCAB_FILE, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=True, sort_keys=True, indent=0)
        fh.write("\n")


def load_model(dirpath) -> VocabModel:
    d = Path(dirpath)
    with open(d / VOCAB_FILE, encoding="utf-8") as fh:
        payload = json.load(fh)
    vocab = {display_to_token(t): i for t, i in payload["tokens"].items()}
    for b in range(256):
        if bytes([b]) not in vocab:
            raise ValueError(f"{d / VOCAB_FILE}: missing base token for byte {b}")
    merges = []
    with open(d / MERGES_FILE, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"{d / MERGES_FILE}: line {lineno}: expected two tokens")
            merges.append((display_to_token(parts[0]), display_to_token(parts[1])))
    return VocabModel(
        merges=merges,
        vocab=vocab,
        pad_id=payload["specials"][PAD_TOKEN],
        sep_id=payload["specials"][SEP_TOKEN],
    )
