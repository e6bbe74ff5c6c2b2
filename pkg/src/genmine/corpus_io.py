"""Document ingestion and sentence segmentation.

Documents arrive as newline-delimited JSON (one object per line, at least a
"text" field, optional "id").  Segmentation is deterministic and rule-based
by default so that runs are reproducible; any callable returning character
spans can be plugged in instead.

Offsets are character offsets into the original document text, and every
span satisfies ``doc.text[span.char_start:span.char_end] == span.text``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .tally import RunTally

SOURCE_TAGS = ("refinedweb", "slimpajama", "pile", "pes2o", "arxiv")

# Documents above this size are skipped (and tallied), never truncated.
DEFAULT_MAX_DOC_BYTES = 10 * 1024 * 1024


@dataclass(frozen=True, slots=True)
class Document:
    doc_id: str
    source: str
    text: str


@dataclass(frozen=True, slots=True)
class SentenceSpan:
    doc_id: str
    sent_index: int
    char_start: int
    char_end: int
    text: str


class CorpusError(Exception):
    """Fatal ingestion problem (unreadable file, bad configuration)."""


def load_documents(
    path: str,
    source: str,
    tally: RunTally | None = None,
    max_doc_bytes: int = DEFAULT_MAX_DOC_BYTES,
) -> Iterator[Document]:
    """Yield one Document per JSONL line, in input order.

    Lines are counted from 0; a record without an "id" gets
    ``"<source>:<line-number>"``.  Malformed lines and records without a
    "text" string are tallied and skipped; an unreadable file raises
    CorpusError.
    """
    tally = tally if tally is not None else RunTally()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                tally.record("malformed-json", path=path, line=lineno)
                continue
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                tally.record("missing-text", path=path, line=lineno)
                continue
            text = obj["text"]
            if len(text.encode("utf-8")) > max_doc_bytes:
                tally.record("oversize-document", path=path, line=lineno)
                continue
            doc_id = obj.get("id")
            if not isinstance(doc_id, str) or not doc_id:
                doc_id = f"{source}:{lineno}"
            yield Document(doc_id=doc_id, source=source, text=text)


# ---------------------------------------------------------------------------
# Rule-based segmenter
# ---------------------------------------------------------------------------

# Token (including its trailing period) that never ends a sentence.
DEFAULT_ABBREVIATIONS = frozenset(
    s.lower()
    for s in (
        "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "Jr.", "Sr.",
        "e.g.", "i.e.", "etc.", "cf.", "vs.", "al.", "ca.", "approx.",
        "Fig.", "Figs.", "Eq.", "Eqs.", "No.", "Nos.", "Vol.", "pp.", "p.",
        "Ch.", "Sec.", "Ref.", "Refs.",
    )
)

_TERMINATORS = {".", "!", "?"}

# A segmenter maps text to ordered, non-overlapping (start, end) spans.
Segmenter = Callable[[str], "list[tuple[int, int]]"]


def _word_ending_at(text: str, period_index: int) -> str:
    """The maximal non-whitespace run ending at text[period_index], inclusive."""
    start = period_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : period_index + 1]


def rule_segment(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[tuple[int, int]]:
    """Split after '.', '!' or '?' followed by whitespace and then an
    uppercase letter, a digit, or end of text.  A blank line ("\\n\\n")
    also terminates the current sentence.  Abbreviation tokens suppress
    the period rule.
    """
    boundaries: list[int] = []  # exclusive end positions of raw sentences
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            if ch == "." and _word_ending_at(text, i).lower() in abbreviations:
                i += 1
                continue
            j = i + 1
            if j >= n:
                boundaries.append(n)
                break
            if text[j].isspace():
                k = j
                while k < n and text[k].isspace():
                    k += 1
                if k >= n or text[k].isupper() or text[k].isdigit():
                    boundaries.append(j)
                    i = k
                    continue
            i += 1
            continue
        if ch == "\n" and i + 1 < n and text[i + 1] == "\n":
            boundaries.append(i)
            while i < n and text[i] == "\n":
                i += 1
            continue
        i += 1
    if not boundaries or boundaries[-1] < n:
        boundaries.append(n)

    spans: list[tuple[int, int]] = []
    start = 0
    for end in boundaries:
        s, e = start, end
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if e > s:
            spans.append((s, e))
        start = end
    return spans


def segment(doc: Document, segmenter: Segmenter | None = None) -> list[SentenceSpan]:
    """Segment a document into SentenceSpans with 0-based consecutive indices.

    The segmenter only proposes raw spans; trimming, ordering and the
    text-equality invariant are enforced here regardless of the plugin.
    """
    segmenter = segmenter or rule_segment
    raw = segmenter(doc.text)
    spans: list[SentenceSpan] = []
    prev_end = 0
    for start, end in raw:
        while start < end and doc.text[start].isspace():
            start += 1
        while end > start and doc.text[end - 1].isspace():
            end -= 1
        if end <= start:
            continue
        if start < prev_end:
            raise ValueError(f"segmenter produced overlapping or unordered spans in {doc.doc_id}")
        spans.append(
            SentenceSpan(
                doc_id=doc.doc_id,
                sent_index=len(spans),
                char_start=start,
                char_end=end,
                text=doc.text[start:end],
            )
        )
        prev_end = end
    return spans


def iter_spans(docs: Iterable[Document], segmenter: Segmenter | None = None) -> Iterator[SentenceSpan]:
    for doc in docs:
        yield from segment(doc, segmenter)
