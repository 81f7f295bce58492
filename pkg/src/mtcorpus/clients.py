"""Clients for the four neural transform kinds: translate, simplify, embed, score.

One wire protocol serves all four: HTTP POST /v1/transform with a JSON body
{kind, params, items: [{id, text}]} answered by {items: [{id, text? |
vector? | logprob?}], dim?}. Responses are cached per item under a
content-addressed key (SHA-256 of kind+params+text), so a warm rerun makes
zero network calls and reproduces outputs byte for byte. Transient
failures retry with exponential backoff; items still missing afterwards
surface by id.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .metrics import cosine_similarity

log = logging.getLogger(__name__)

KINDS = ("translate", "simplify", "embed", "logprob")

PROMPT_MARKER = "<Insert Text Here>"
END_MARKER = "<|eot_id|>"
# Instruction-leak patterns seen in degenerate simplifier outputs.
DEGENERATE_PREFIXES = ("(note:", "simplification of the text")
DEGENERATE_COSINE_THRESHOLD = 0.5

ENV_ENDPOINT = "MTCORPUS_ENDPOINT"
ENV_CACHE = "MTCORPUS_CACHE"

DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_RETRIES = 5
DEFAULT_BACKOFF = 0.25
DEFAULT_CONCURRENCY = 8


class TransportError(RuntimeError):
    """Network-level failure; retryable."""


class ContractError(RuntimeError):
    """The endpoint broke the wire contract (bad dim, positive logprob, ...)."""


class TransformError(RuntimeError):
    """Items left unfinished after retries; their ids are attached."""

    def __init__(self, message: str, item_ids: Iterable[str] = ()):
        super().__init__(message)
        self.item_ids = list(item_ids)


@dataclass(frozen=True)
class TransformRequest:
    kind: str
    items: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(i), t) for i, t in self.items))
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if not self.items:
            raise ValueError("transform request has no items")
        ids = [i for i, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate item ids in transform request")


@dataclass(frozen=True)
class SimplifyResult:
    item_id: str
    text: str
    degenerate: bool


def cache_key(kind: str, params: dict, text: str) -> str:
    blob = json.dumps(
        {"kind": kind, "params": params, "text": text},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class DiskCache:
    """Content-addressed JSON payloads under a cache root.

    Entries are {created_at, payload}. Writes go to a temp file then
    os.replace, so concurrent writers of one key converge on a single
    intact value; a corrupt entry reads as a miss.
    """

    def __init__(self, root):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
            return entry["payload"]
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, UnicodeDecodeError, OSError, KeyError, TypeError):
            log.warning("corrupt cache entry %s; treating as a miss", path)
            return None

    def put(self, key: str, payload) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"created_at": time.time(), "payload": payload}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


def is_degenerate(output_text: str, cosine: float | None = None) -> bool:
    """Instruction-leak prefixes, plus semantic drift when a cosine is given."""
    head = output_text.lstrip().lower()
    if any(head.startswith(p) for p in DEGENERATE_PREFIXES):
        return True
    return cosine is not None and cosine < DEGENERATE_COSINE_THRESHOLD


def _chunks(seq: Sequence, size: int):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


class TransformClient:
    """Batched, cached, retrying client for the /v1/transform protocol.

    `transport` is a callable(payload dict) -> response dict and defaults to
    HTTP POST against `endpoint` (the MTCORPUS_ENDPOINT env var overrides the
    configured endpoint); tests inject in-process fakes. Requests are
    idempotent, so retry is safe.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        cache_dir=None,
        transport: Callable[[dict], dict] | None = None,
        token: str | None = None,
        batch_size: int = DEFAULT_BATCH_SIZE,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff: float = DEFAULT_BACKOFF,
        concurrency: int = DEFAULT_CONCURRENCY,
        embed_dim: int | None = None,
        timeout: float = 60.0,
    ):
        self.endpoint = os.environ.get(ENV_ENDPOINT) or endpoint
        if cache_dir is None:
            cache_dir = os.environ.get(ENV_CACHE)
        self.cache = DiskCache(cache_dir) if cache_dir else None
        self.token = token
        self.batch_size = max(1, batch_size)
        self.max_retries = max(1, max_retries)
        self.backoff = backoff
        self.concurrency = max(1, concurrency)
        self.embed_dim = embed_dim
        self.timeout = timeout
        if transport is None:
            if not self.endpoint:
                raise ValueError("no endpoint configured and no transport injected")
            transport = self._http_transport
        self.transport = transport

    # -- transport ---------------------------------------------------------

    def _http_transport(self, payload: dict) -> dict:
        import requests

        url = self.endpoint.rstrip("/") + "/v1/transform"
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
        except requests.RequestException as e:
            raise TransportError(f"POST {url} failed: {e}") from e
        if resp.status_code != 200:
            raise TransportError(f"POST {url} returned {resp.status_code}")
        try:
            return resp.json()
        except ValueError as e:
            raise TransportError(f"POST {url} returned non-JSON body") from e

    # -- core engine -------------------------------------------------------

    def _call_batch(self, kind: str, params: dict, batch: Sequence[tuple]) -> dict:
        """One batch through transport with retry; returns {item_id: payload}."""
        pending = {iid: text for iid, text in batch}
        done: dict = {}
        delay = self.backoff
        for attempt in range(self.max_retries):
            payload = {
                "kind": kind,
                "params": params,
                "items": [{"id": i, "text": t} for i, t in pending.items()],
            }
            try:
                resp = self.transport(payload)
            except TransportError as e:
                log.debug("attempt %d for %s batch failed: %s", attempt + 1, kind, e)
                resp = None
            if resp is not None:
                for item in resp.get("items", ()):
                    iid = item.get("id")
                    if iid in pending:
                        got = {k: v for k, v in item.items() if k != "id"}
                        if "dim" in resp:
                            got.setdefault("dim", resp["dim"])
                        done[iid] = got
                        del pending[iid]
            if not pending:
                return done
            if attempt < self.max_retries - 1 and delay > 0:
                time.sleep(delay)
                delay *= 2
        raise TransformError(
            f"{kind}: {len(pending)} item(s) unfinished after {self.max_retries} attempts: "
            + ", ".join(sorted(pending)),
            item_ids=sorted(pending),
        )

    def _run(self, kind: str, items: Sequence[tuple], params: dict) -> list:
        """Resolve (id, text) items to payload dicts, cache first, id-aligned."""
        results: dict = {}
        misses: list = []
        keys: dict = {}
        for iid, text in items:
            if self.cache is not None:
                key = cache_key(kind, params, text)
                keys[iid] = key
                payload = self.cache.get(key)
                if payload is not None:
                    results[iid] = payload
                    continue
            misses.append((iid, text))
        if misses:
            batches = list(_chunks(misses, self.batch_size))
            if self.concurrency > 1 and len(batches) > 1:
                with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
                    fetched = list(
                        pool.map(lambda b: self._call_batch(kind, params, b), batches)
                    )
            else:
                fetched = [self._call_batch(kind, params, b) for b in batches]
            for got in fetched:
                for iid, payload in got.items():
                    if self.cache is not None:
                        self.cache.put(keys[iid], payload)
                    results[iid] = payload
        return [results[iid] for iid, _ in items]

    # -- the four kinds ----------------------------------------------------

    def translate_batch(self, request: TransformRequest) -> list:
        """list of (item_id, translation), aligned to the request order."""
        _require_kind(request, "translate")
        payloads = self._run("translate", request.items, request.params)
        return [
            (iid, _require_text(p, iid)) for (iid, _), p in zip(request.items, payloads)
        ]

    def simplify_batch(
        self,
        request: TransformRequest,
        prompt_template: str,
        embedder: Callable[[Sequence[str]], Sequence] | None = None,
    ) -> list:
        """Instantiate the prompt per item and flag degenerate outputs.

        Responses truncate at the end marker. The degenerate flag fires on
        instruction-leak prefixes, or on cosine(original, simplified) < 0.5
        when an embedder is supplied.
        """
        _require_kind(request, "simplify")
        if PROMPT_MARKER not in prompt_template:
            raise ValueError(f"prompt template lacks insertion marker {PROMPT_MARKER!r}")
        prompts = [
            (iid, prompt_template.replace(PROMPT_MARKER, text))
            for iid, text in request.items
        ]
        payloads = self._run("simplify", prompts, request.params)
        outputs = []
        for (iid, _), p in zip(request.items, payloads):
            text = _require_text(p, iid)
            if END_MARKER in text:
                text = text.split(END_MARKER, 1)[0]
            outputs.append((iid, text.strip()))
        cosines: dict = {}
        if embedder is not None:
            originals = [text for _, text in request.items]
            vec_orig = list(embedder(originals))
            vec_out = list(embedder([t for _, t in outputs]))
            for (iid, _), a, b in zip(outputs, vec_orig, vec_out):
                cosines[iid] = cosine_similarity(a, b)
        return [
            SimplifyResult(iid, text, is_degenerate(text, cosines.get(iid)))
            for iid, text in outputs
        ]

    def embed_batch(self, request: TransformRequest) -> list:
        """list of (item_id, vector); every vector must match the declared dim."""
        _require_kind(request, "embed")
        payloads = self._run("embed", request.items, request.params)
        out = []
        for (iid, _), p in zip(request.items, payloads):
            vec = p.get("vector")
            if not isinstance(vec, list) or not vec:
                raise ContractError(f"item {iid!r}: embed response carries no vector")
            if self.embed_dim is None:
                self.embed_dim = len(vec)
            elif len(vec) != self.embed_dim:
                raise ContractError(
                    f"item {iid!r}: embedding dimension {len(vec)} != declared {self.embed_dim}"
                )
            out.append((iid, [float(x) for x in vec]))
        return out

    def score_batch(self, request: TransformRequest) -> list:
        """list of (item_id, total sentence log-probability), all values <= 0.

        Empty sentences score 0.0 by the empty-product convention and never
        hit the network.
        """
        _require_kind(request, "logprob")
        nonempty = [(iid, text) for iid, text in request.items if text != ""]
        scored: dict = {}
        if nonempty:
            payloads = self._run("logprob", nonempty, request.params)
            for (iid, _), p in zip(nonempty, payloads):
                lp = p.get("logprob")
                if not isinstance(lp, (int, float)) or math.isnan(lp):
                    raise ContractError(f"item {iid!r}: scorer returned no usable logprob")
                if lp > 0:
                    raise ContractError(
                        f"item {iid!r}: scorer returned positive logprob {lp}"
                    )
                scored[iid] = float(lp)
        return [
            (iid, 0.0 if text == "" else scored[iid]) for iid, text in request.items
        ]

    def embedder(self) -> Callable[[Sequence[str]], list]:
        """Adapter: plain texts in, vectors out (for degenerate detection)."""

        def embed(texts: Sequence[str]) -> list:
            req = TransformRequest(
                "embed", tuple((f"t{i}", t) for i, t in enumerate(texts))
            )
            return [vec for _, vec in self.embed_batch(req)]

        return embed

    def scorer(self) -> Callable[[Sequence[str]], list]:
        """Adapter matching the probe module's scorer interface."""

        def score(texts: Sequence[str]) -> list:
            req = TransformRequest(
                "logprob", tuple((f"s{i}", t) for i, t in enumerate(texts))
            )
            return [lp for _, lp in self.score_batch(req)]

        return score


def _require_kind(request: TransformRequest, kind: str) -> None:
    if request.kind != kind:
        raise ValueError(f"request kind {request.kind!r} sent to {kind} operation")


def _require_text(payload: dict, iid: str) -> str:
    text = payload.get("text")
    if not isinstance(text, str):
        raise ContractError(f"item {iid!r}: response carries no text")
    return text
