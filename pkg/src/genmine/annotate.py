"""Client for an external dependency-annotation HTTP service.

The service contract: POST {endpoint}/parse with {"texts": [...]} returns
{"conllu": [...]}, one CoNLL-U block per input text, aligned by index.
Responses are validated with the same rules as file ingestion, cached by
sentence-text hash (LRU, bounded), and retried with exponential backoff.
Failures after the retry budget are record-level: the affected sentence
is tallied and skipped, the run continues.
"""

from __future__ import annotations

import hashlib
import threading
import time
from collections import OrderedDict
from typing import Sequence

import requests

from .conllu import ParsedSentence, ParseValidationError, parse_token_lines
from .corpus_io import SentenceSpan
from .tally import RunTally

DEFAULT_CACHE_SIZE = 1_000_000


class AnnotateError(Exception):
    """Annotation-service failure that exhausted its retry budget."""


class _LRUCache:
    """Thread-safe bounded mapping from text hash to CoNLL-U block."""

    def __init__(self, cap: int):
        self.cap = cap
        self._data: OrderedDict[str, str] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> str | None:
        with self._lock:
            try:
                self._data.move_to_end(key)
            except KeyError:
                return None
            return self._data[key]

    def put(self, key: str, value: str) -> None:
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.cap:
                self._data.popitem(last=False)

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)


def _text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ParseClient:
    """Batched, cached access to the annotation service.

    The cache stores raw CoNLL-U blocks rather than parsed objects so one
    block can serve spans from different documents that share text.
    """

    def __init__(self, endpoint: str, *, batch_size: int = 64,
                 max_retries: int = 3, backoff_base: float = 0.5,
                 timeout: float = 30.0, cache_size: int = DEFAULT_CACHE_SIZE,
                 session=None):
        if not endpoint:
            raise ValueError("annotation service endpoint is required")
        self.url = endpoint.rstrip("/") + "/parse"
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.service_calls = 0
        self._cache = _LRUCache(cache_size)
        self._session = session if session is not None else requests.Session()

    def _post_batch(self, texts: Sequence[str]) -> list[str]:
        last_exc: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                self.service_calls += 1
                resp = self._session.post(self.url, json={"texts": list(texts)},
                                          timeout=self.timeout)
                resp.raise_for_status()
                blocks = resp.json().get("conllu")
                if not isinstance(blocks, list) or len(blocks) != len(texts):
                    raise AnnotateError(
                        f"service returned {0 if not isinstance(blocks, list) else len(blocks)} "
                        f"blocks for {len(texts)} texts")
                return blocks
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
        raise AnnotateError(f"annotation service failed after "
                            f"{self.max_retries + 1} attempts: {last_exc}") from last_exc

    def _build(self, span: SentenceSpan, block: str,
               tally: RunTally | None) -> ParsedSentence | None:
        lines = [ln for ln in block.splitlines() if ln.strip() and not ln.startswith("#")]
        try:
            tokens = parse_token_lines(lines)
            return ParsedSentence(doc_id=span.doc_id, sent_index=span.sent_index,
                                  tokens=tokens)
        except ParseValidationError as exc:
            if tally:
                tally.record("invalid-service-parse", problem=exc.reason,
                             doc_id=span.doc_id, sent_index=span.sent_index)
            return None

    def annotate_many(self, spans: Sequence[SentenceSpan],
                      tally: RunTally | None = None) -> list[ParsedSentence | None]:
        """Parse spans in order; None marks a span whose parse failed.

        Duplicate texts are fetched once; cache hits cost no service call.
        """
        keys = [_text_key(s.text) for s in spans]
        missing: dict[str, str] = {}
        for span, key in zip(spans, keys):
            if self._cache.get(key) is None and key not in missing:
                missing[key] = span.text
        pending = list(missing.items())
        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start:start + self.batch_size]
            try:
                blocks = self._post_batch([text for _, text in chunk])
            except AnnotateError:
                if tally:
                    for key, text in chunk:
                        tally.record("annotation-service-failure",
                                     text=text[:80])
                continue
            for (key, _), block in zip(chunk, blocks):
                self._cache.put(key, block)
        out: list[ParsedSentence | None] = []
        for span, key in zip(spans, keys):
            block = self._cache.get(key)
            if block is None:
                out.append(None)
                continue
            out.append(self._build(span, block, tally))
        return out

    def annotate(self, span: SentenceSpan,
                 tally: RunTally | None = None) -> ParsedSentence | None:
        return self.annotate_many([span], tally=tally)[0]
