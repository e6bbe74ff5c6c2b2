"""Genericity scoring: quantifier stripping, scorers, threshold acceptance.

Two scorer backends share one contract (one finite score per input text,
order-aligned).  The heuristic baseline keeps the pipeline runnable with no
ML dependency: it starts from 1.0 and subtracts 0.5 for a deictic/locative
blocklist hit and 0.5 for a duplicated-title pattern, so only clean
sentences survive the default 0.8 threshold.  The external backend posts
batches to an HTTP service.

Scores are unbounded reals, not probabilities; values above 1.0 are stored
verbatim.  Context is never sent to a scorer: scoring uses the sentence
text alone.
"""

from __future__ import annotations

import importlib.resources
import math
import re
import time
from dataclasses import dataclass

import requests

DEFAULT_THRESHOLD = 0.8
DEFAULT_BATCH_SIZE = 64

_YEAR_RE = re.compile(r"(?<!\d)(1[5-9]\d\d|20\d\d)(?!\d)")
_CURRENCY_CHARS = "$€£¥"

_BLOCKLIST_PENALTY = 0.5
_TITLE_PENALTY = 0.5


class ScoringError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class GenericityScore:
    value: float
    scorer_id: str


@dataclass(frozen=True)
class ScorerConfig:
    kind: str = "heuristic-baseline"        # or "external-service"
    endpoint: str | None = None
    threshold: float = DEFAULT_THRESHOLD
    batch_size: int = DEFAULT_BATCH_SIZE
    blocklist_path: str | None = None       # heuristic: override shipped list
    max_retries: int = 3
    backoff_base: float = 0.5
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("heuristic-baseline", "external-service"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if (self.kind == "external-service") != (self.endpoint is not None):
            raise ValueError("endpoint must be set exactly for external-service scorers")


def accept(score: GenericityScore, cfg: ScorerConfig) -> bool:
    """Threshold rule; the boundary is inclusive."""
    return score.value >= cfg.threshold


def strip_quantifier(text: str, quantifier: str) -> str:
    """Remove a sentence-initial quantifier word.

    The text must begin (case-insensitively, after leading whitespace) with
    the quantifier followed by whitespace.  The remainder keeps its original
    casing; the seam whitespace is dropped.
    """
    stripped = text.lstrip()
    qlen = len(quantifier)
    if len(stripped) <= qlen or stripped[:qlen].lower() != quantifier.lower() or not stripped[qlen].isspace():
        raise ValueError(f"text does not start with quantifier {quantifier!r}: {text!r}")
    return stripped[qlen:].lstrip()


def _clean_tokens(text: str) -> list[str]:
    toks = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        word = raw[start:end].lower()
        if word:
            toks.append(word)
    return toks


def load_wordlist(path) -> list[str]:
    """Plain-text fixture: one entry per line, '#' comments allowed."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.append(line.lower())
    return entries


def packaged_data(name: str):
    return importlib.resources.files("genmine.data").joinpath(name)


class HeuristicScorer:
    """Deterministic rule scorer standing in for a trained classifier.

    Penalties (each 0.5, subtracted from 1.0):
      * blocklist: any deictic/locative/figure-context entry occurs in the
        sentence (single words match tokens, phrases match consecutive
        tokens), or a 4-digit year, or a currency symbol;
      * duplicated title: the sentence's first two non-stopword words recur
        as an adjacent pair within the first eight tokens, the shape left
        behind when a section title is glued onto the sentence.
    """

    scorer_id = "heuristic-v1"

    def __init__(self, blocklist_path: str | None = None, stopwords_path: str | None = None):
        src = blocklist_path if blocklist_path is not None else packaged_data("blocklist.txt")
        entries = load_wordlist(src)
        self.words = frozenset(e for e in entries if " " not in e)
        self.phrases = tuple(tuple(e.split()) for e in entries if " " in e)
        stop_src = stopwords_path if stopwords_path is not None else packaged_data("stopwords.txt")
        self.stopwords = frozenset(load_wordlist(stop_src))

    def _blocklist_hit(self, text: str, tokens: list[str]) -> bool:
        if any(ch in _CURRENCY_CHARS for ch in text):
            return True
        if _YEAR_RE.search(text):
            return True
        if any(t in self.words for t in tokens):
            return True
        for phrase in self.phrases:
            k = len(phrase)
            for i in range(len(tokens) - k + 1):
                if tuple(tokens[i : i + k]) == phrase:
                    return True
        return False

    def _duplicated_title(self, tokens: list[str]) -> bool:
        window = tokens[:8]
        content = [t for t in window if t not in self.stopwords]
        if len(content) < 2:
            return False
        bigram = (content[0], content[1])
        hits = sum(1 for i in range(len(window) - 1) if (window[i], window[i + 1]) == bigram)
        return hits >= 2

    def score_one(self, text: str) -> float:
        tokens = _clean_tokens(text)
        value = 1.0
        if self._blocklist_hit(text, tokens):
            value -= _BLOCKLIST_PENALTY
        if self._duplicated_title(tokens):
            value -= _TITLE_PENALTY
        return value

    def score(self, texts: list[str]) -> list[float]:
        return [self.score_one(t) for t in texts]


class ServiceScorer:
    """Client for an HTTP scoring service: POST /score {"texts": [...]}."""

    def __init__(self, cfg: ScorerConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self.scorer_id = cfg.endpoint
        self.session = session or requests.Session()

    def _post_batch(self, batch: list[str]) -> list[float]:
        url = self.cfg.endpoint.rstrip("/") + "/score"
        last_exc: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                time.sleep(self.cfg.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(url, json={"texts": batch}, timeout=self.cfg.timeout)
                if resp.status_code != 200:
                    last_exc = ScoringError(f"scorer returned HTTP {resp.status_code}")
                    continue
                scores = resp.json().get("scores")
                if not isinstance(scores, list) or len(scores) != len(batch):
                    raise ScoringError("scorer response not aligned with request")
                return [float(s) for s in scores]
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
        raise ScoringError(f"scoring batch failed after {self.cfg.max_retries} retries: {last_exc}")

    def score(self, texts: list[str]) -> list[float]:
        out: list[float] = []
        for i in range(0, len(texts), self.cfg.batch_size):
            out.extend(self._post_batch(texts[i : i + self.cfg.batch_size]))
        return out


def make_scorer(cfg: ScorerConfig):
    if cfg.kind == "heuristic-baseline":
        return HeuristicScorer(blocklist_path=cfg.blocklist_path)
    return ServiceScorer(cfg)


def score(texts: list[str], cfg: ScorerConfig, scorer=None) -> list[GenericityScore]:
    """Score texts, one GenericityScore per input, order-aligned.

    A batch that keeps failing after retries raises ScoringError; the caller
    decides whether that is fatal (it is, for the mining pipeline, unless
    records are dropped and tallied explicitly).
    """
    if not texts:
        return []
    scorer = scorer if scorer is not None else make_scorer(cfg)
    values = scorer.score(list(texts))
    if len(values) != len(texts):
        raise ScoringError("scorer produced misaligned output")
    for v in values:
        if not math.isfinite(v):
            raise ScoringError(f"non-finite score {v!r}")
    return [GenericityScore(value=float(v), scorer_id=scorer.scorer_id) for v in values]
