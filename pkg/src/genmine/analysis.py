"""Dataset statistics and diversity metrics.

Three families of measurements over a mined dataset:

  * surface statistics: sentence-length distribution and most common words;
  * embedding diversity: negated mean pairwise cosine similarity over
    sampled sentence groups (the more similar the sentences, the lower
    the score);
  * lexical diversity: distinct n-gram counts under a token budget and
    unique subject/verb/object head lemmas under a sentence budget.

Embeddings are not computed here; they are read from a newline-delimited
JSON file ({"id": ..., "vec": [...]}) produced by whatever encoder the
caller prefers.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .conllu import ParsedSentence
from .filters import main_verb
from .formatting import align_table
from .kernels import mean_pairwise_cosine
from .tally import RunTally

DEFAULT_COSSIM_GROUPS = 1000
DEFAULT_COSSIM_GROUP_SIZE = 1000
DEFAULT_DISTINCT_BUDGET = 1_000_000
DEFAULT_LEMMA_BUDGET = 200_000
DISTINCT_N_VALUES = (1, 2, 3)


# ---------------------------------------------------------------------------
# Surface statistics


def word_count(sentence: str) -> int:
    """Number of whitespace-separated tokens."""
    return len(sentence.split())


@dataclass(frozen=True, slots=True)
class LengthStats:
    """Word-count distribution over a set of sentences.

    mean/std/median are None when no sentences were seen.  std is the
    population standard deviation; the median of an even-sized sample is
    the lower of the two middle values.
    """

    histogram: dict[int, int]
    n: int
    mean: float | None
    std: float | None
    median: float | None

    def percentages(self) -> list[tuple[int, float]]:
        """(length, percent-of-sentences) pairs, sorted by length."""
        if self.n == 0:
            return []
        return [(k, 100.0 * c / self.n) for k, c in sorted(self.histogram.items())]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "histogram": {str(k): self.histogram[k] for k in sorted(self.histogram)},
        }

    def render_text(self) -> str:
        if self.n == 0:
            return "length stats: no sentences"
        rows = [("sentences", str(self.n)),
                ("mean", f"{self.mean:.2f}"),
                ("std", f"{self.std:.2f}"),
                ("median", f"{self.median:g}")]
        return align_table(rows)


def length_stats(sentences: Iterable[str]) -> LengthStats:
    """Exact word-count histogram with mean, population std and median."""
    histogram: Counter[int] = Counter()
    for text in sentences:
        histogram[word_count(text)] += 1
    n = sum(histogram.values())
    if n == 0:
        return LengthStats(histogram={}, n=0, mean=None, std=None, median=None)
    mean = math.fsum(k * c for k, c in histogram.items()) / n
    var = math.fsum(c * (k - mean) ** 2 for k, c in histogram.items()) / n
    # Lower of the two middles for even n: walk the histogram to the
    # value at sorted position (n - 1) // 2.
    target = (n - 1) // 2
    seen = 0
    median: float | None = None
    for k in sorted(histogram):
        seen += histogram[k]
        if seen > target:
            median = float(k)
            break
    return LengthStats(histogram=dict(histogram), n=n, mean=mean,
                       std=math.sqrt(var), median=median)


def write_length_csv(stats: LengthStats, path) -> None:
    """Plot-ready CSV of the length distribution: length, percentage."""
    lines = ["length,percentage"]
    lines += [f"{k},{pct:.6f}" for k, pct in stats.percentages()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def default_tokens(sentence: str) -> list[str]:
    """Lowercased whitespace tokens with surrounding punctuation stripped.

    Tokens that are pure punctuation strip down to nothing and are dropped.
    """
    out = []
    for raw in sentence.lower().split():
        start = 0
        end = len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        if end > start:
            out.append(raw[start:end])
    return out


def common_words(sentences: Iterable[str], stopwords: frozenset[str] | set[str],
                 k: int = 50) -> list[tuple[str, int]]:
    """Top-k non-stopword tokens by frequency, ties broken alphabetically."""
    counts: Counter[str] = Counter()
    for text in sentences:
        for tok in default_tokens(text):
            if tok not in stopwords:
                counts[tok] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Embedding diversity (negated mean pairwise cosine)


@dataclass(frozen=True, slots=True)
class DiversityResult:
    """Negated mean pairwise cosine, aggregated over sentence groups."""

    mean: float
    std: float
    per_group: list[float] = field(repr=False)

    @property
    def n_groups(self) -> int:
        return len(self.per_group)


def load_embeddings(path, tally: RunTally | None = None) -> tuple[list[str], np.ndarray]:
    """Read {"id", "vec"} JSON lines into (ids, float64 matrix).

    Malformed lines and dimension mismatches are tallied and skipped; the
    first well-formed vector fixes the dimension.
    """
    ids: list[str] = []
    vecs: list[list[float]] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                vec_id = obj["id"]
                vec = obj["vec"]
            except (json.JSONDecodeError, TypeError, KeyError):
                if tally:
                    tally.record("malformed-embedding", line=lineno)
                continue
            if not isinstance(vec, list) or not all(
                    isinstance(v, (int, float)) for v in vec):
                if tally:
                    tally.record("malformed-embedding", line=lineno)
                continue
            if dim is None:
                dim = len(vec)
            if len(vec) != dim:
                if tally:
                    tally.record("embedding-dim-mismatch", line=lineno, id=str(vec_id))
                continue
            ids.append(str(vec_id))
            vecs.append(vec)
    if not vecs:
        return [], np.empty((0, 0), dtype=np.float64)
    return ids, np.asarray(vecs, dtype=np.float64)


def _unit_rows(group: np.ndarray, tally: RunTally | None) -> np.ndarray:
    rows = np.asarray(group, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("each group must be a 2-D matrix of vectors")
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        # A zero vector has no direction, so cosine similarity against it
        # is undefined; drop it rather than poison the whole group.
        if tally:
            tally.record("zero-embedding", count=int(zero.sum()))
        rows = rows[~zero]
        norms = norms[~zero]
    return rows / norms[:, None]


def diversity_cossim(groups: Iterable[np.ndarray],
                     backend: str | None = None,
                     tally: RunTally | None = None) -> DiversityResult:
    """Negated mean pairwise cosine per group; mean and population std across groups.

    Every group needs at least 2 nonzero vectors, all of one dimension.
    """
    per_group: list[float] = []
    for group in groups:
        unit = _unit_rows(group, tally)
        if unit.shape[0] < 2:
            raise ValueError("diversity needs at least 2 nonzero vectors per group")
        per_group.append(-mean_pairwise_cosine(unit, backend=backend))
    if not per_group:
        raise ValueError("no groups supplied")
    mean = math.fsum(per_group) / len(per_group)
    var = math.fsum((v - mean) ** 2 for v in per_group) / len(per_group)
    return DiversityResult(mean=mean, std=math.sqrt(var), per_group=per_group)


def sample_groups(vectors: np.ndarray, n_groups: int = DEFAULT_COSSIM_GROUPS,
                  group_size: int = DEFAULT_COSSIM_GROUP_SIZE,
                  seed: int = 0) -> list[np.ndarray]:
    """Seeded sampling of row groups: without replacement within a group,
    independently across groups; group_size is capped at the row count."""
    rows = np.asarray(vectors, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise ValueError("need a matrix with at least 2 vectors to sample groups")
    size = min(group_size, rows.shape[0])
    rng = np.random.default_rng(seed)
    return [rows[rng.choice(rows.shape[0], size=size, replace=False)]
            for _ in range(n_groups)]


# ---------------------------------------------------------------------------
# Lexical diversity


def distinct_n(sentences: Iterable[str],
               tokenizer: Callable[[str], list[str]] = default_tokens,
               n_values: Sequence[int] = DISTINCT_N_VALUES,
               budget: int = DEFAULT_DISTINCT_BUDGET) -> dict[int, int]:
    """Unique n-gram counts over whole sentences up to a token budget.

    Sentences are consumed until the cumulative token count reaches the
    budget; the sentence that crosses it is kept whole.  N-grams never
    span a sentence boundary.
    """
    seen: dict[int, set[tuple[str, ...]]] = {n: set() for n in n_values}
    consumed = 0
    for text in sentences:
        if consumed >= budget:
            break
        toks = tokenizer(text)
        if not toks:
            continue
        consumed += len(toks)
        for n in n_values:
            grams = seen[n]
            for i in range(len(toks) - n + 1):
                grams.add(tuple(toks[i:i + n]))
    return {n: len(seen[n]) for n in n_values}


def head_lemma_triple(sent: ParsedSentence) -> tuple[str | None, str | None, str | None]:
    """(subject, verb, object) lemmas of one parse; None for missing slots.

    Subject: the nsubj/nsubj:pass dependent of the root.  Verb: the main
    verb under the same copula/passive routing the syntactic filter uses.
    Object: an obj dependent of the main verb, falling back to an obl
    dependent when there is no obj.
    """
    root_index = sent.root_index
    subject = None
    for tok in sent.tokens:
        if tok.head == root_index and tok.deprel in ("nsubj", "nsubj:pass"):
            subject = tok.lemma
            break
    verb_tok = main_verb(sent)
    obj = None
    if verb_tok is not None:
        fallback = None
        for tok in sent.tokens:
            if tok.head != verb_tok.index:
                continue
            if tok.deprel == "obj":
                obj = tok.lemma
                break
            if tok.deprel == "obl" and fallback is None:
                fallback = tok.lemma
        if obj is None:
            obj = fallback
    verb = verb_tok.lemma if verb_tok is not None else None
    return subject, verb, obj


def head_lemmas(parses: Iterable[ParsedSentence],
                budget: int = DEFAULT_LEMMA_BUDGET) -> dict[str, int]:
    """Unique subject/verb/object lemma counts over at most `budget` parses."""
    sets: dict[str, set[str]] = {"subject": set(), "verb": set(), "object": set()}
    for i, sent in enumerate(parses):
        if i >= budget:
            break
        subj, verb, obj = head_lemma_triple(sent)
        if subj is not None:
            sets["subject"].add(subj)
        if verb is not None:
            sets["verb"].add(verb)
        if obj is not None:
            sets["object"].add(obj)
    return {slot: len(lemmas) for slot, lemmas in sets.items()}


# ---------------------------------------------------------------------------
# Combined report


@dataclass(frozen=True, slots=True)
class DiversityReport:
    """Aggregate of the three diversity measurements plus their sampling knobs."""

    d_cossim_mean: float | None
    d_cossim_std: float | None
    distinct: dict[int, int]
    head_lemmas: dict[str, int]
    sampling: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "d_cossim": {"mean": self.d_cossim_mean, "std": self.d_cossim_std},
            "distinct": {str(n): c for n, c in sorted(self.distinct.items())},
            "head_lemmas": dict(self.head_lemmas),
            "sampling": dict(self.sampling),
        }

    def render_text(self) -> str:
        rows: list[tuple[str, str]] = []
        if self.d_cossim_mean is not None:
            rows.append(("d_cossim", f"{self.d_cossim_mean:.4f} ± {self.d_cossim_std:.4f}"))
        for n, c in sorted(self.distinct.items()):
            rows.append((f"distinct-{n}", str(c)))
        for slot in ("subject", "verb", "object"):
            if slot in self.head_lemmas:
                rows.append((f"unique {slot} lemmas", str(self.head_lemmas[slot])))
        return align_table(rows)
