"""Record assembly, persistence and stage counts for mined datasets.

A run produces newline-delimited JSON record files (candidates and
accepted), a per-label counts table covering both filter stages, and a
document store holding one UTF-8 text file per source document so that
records can reference their context by (doc_id, offsets) instead of
inlining it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import quote, unquote

from .filters import GENERIC_LABEL, QUANTIFIERS, GenLabel
from .formatting import align_table
from .scoring import GenericityScore
from .tally import RunTally


class DatasetError(Exception):
    """Fatal dataset persistence problem: unwritable sink, malformed record."""


@dataclass(frozen=True, slots=True)
class MGenRecord:
    """One mined sentence with its label, score and document coordinates.

    context is inlined only when the run asks for it; otherwise
    (doc_id, char_start, char_end) locate the sentence in the document
    store.
    """

    record_id: str
    sentence: str
    label: GenLabel
    score: GenericityScore
    source: str
    doc_id: str
    sent_index: int
    char_start: int
    char_end: int
    context: str | None = None

    def __post_init__(self) -> None:
        name = self.label.label
        if name != GENERIC_LABEL and name not in QUANTIFIERS:
            raise ValueError(f"label {name!r} is neither generic nor a known quantifier")
        if self.sent_index < 0:
            raise ValueError("sent_index must be non-negative")
        if not 0 <= self.char_start <= self.char_end:
            raise ValueError("invalid span offsets")


def record_to_json(record: MGenRecord) -> str:
    """Serialize to one JSON line with a fixed key order.

    The key order is part of the output contract: byte-identical reruns
    depend on it.
    """
    obj = {
        "record_id": record.record_id,
        "sentence": record.sentence,
        "label": record.label.label,
        "position": record.label.position,
        "score": record.score.value,
        "scorer_id": record.score.scorer_id,
        "source": record.source,
        "doc_id": record.doc_id,
        "sent_index": record.sent_index,
        "char_start": record.char_start,
        "char_end": record.char_end,
    }
    if record.context is not None:
        obj["context"] = record.context
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def record_from_json(line: str) -> MGenRecord:
    try:
        obj = json.loads(line)
        return MGenRecord(
            record_id=obj["record_id"],
            sentence=obj["sentence"],
            label=GenLabel(label=obj["label"], position=obj.get("position")),
            score=GenericityScore(value=obj["score"], scorer_id=obj["scorer_id"]),
            source=obj["source"],
            doc_id=obj["doc_id"],
            sent_index=obj["sent_index"],
            char_start=obj["char_start"],
            char_end=obj["char_end"],
            context=obj.get("context"),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed record line: {exc}") from exc


def read_records(path, tally: RunTally | None = None) -> Iterator[MGenRecord]:
    """Stream records back from a JSONL file, tallying unparseable lines."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read records from {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                yield record_from_json(line)
            except DatasetError:
                if tally:
                    tally.record("malformed-record", line=lineno)


class RecordSink:
    """Append target for records; optionally enforces a score floor.

    A sink with a threshold represents the accepted output: writing a
    record scored below it is an invariant violation, not a filtering
    step (filtering happened upstream).
    """

    def __init__(self, path, threshold: float | None = None):
        self.path = Path(path)
        self.threshold = threshold
        self.count = 0
        try:
            self._fh = open(self.path, "w", encoding="utf-8")
        except OSError as exc:
            raise DatasetError(f"cannot open sink {path}: {exc}") from exc

    def write(self, record: MGenRecord) -> None:
        if self.threshold is not None and record.score.value < self.threshold:
            raise DatasetError(
                f"record {record.record_id} scored {record.score.value} "
                f"below the accepted-output threshold {self.threshold}")
        self._fh.write(record_to_json(record) + "\n")
        self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(slots=True)
class CountsTable:
    """Per-label record counts after each filter stage.

    candidates counts sentences that survived the syntactic filter;
    generalizations counts the subset that also passed the genericity
    threshold.
    """

    candidates: Counter = field(default_factory=Counter)
    generalizations: Counter = field(default_factory=Counter)

    def add_candidate(self, label: str) -> None:
        self.candidates[label] += 1

    def add_generalization(self, label: str) -> None:
        self.generalizations[label] += 1

    def merge(self, other: "CountsTable") -> None:
        self.candidates.update(other.candidates)
        self.generalizations.update(other.generalizations)

    @property
    def candidates_total(self) -> int:
        return sum(self.candidates.values())

    @property
    def generalizations_total(self) -> int:
        return sum(self.generalizations.values())

    def validate(self) -> None:
        for label, count in self.generalizations.items():
            if count > self.candidates.get(label, 0):
                raise DatasetError(
                    f"label {label!r}: {count} accepted but only "
                    f"{self.candidates.get(label, 0)} candidates")

    @classmethod
    def from_records(cls, candidates: Iterable[MGenRecord],
                     accepted: Iterable[MGenRecord]) -> "CountsTable":
        table = cls()
        for rec in candidates:
            table.add_candidate(rec.label.label)
        for rec in accepted:
            table.add_generalization(rec.label.label)
        return table

    def label_order(self) -> list[str]:
        """GEN first, then the quantifier inventory, then anything else."""
        known = [GENERIC_LABEL, *QUANTIFIERS]
        seen = set(self.candidates) | set(self.generalizations)
        ordered = [l for l in known if l in seen]
        ordered += sorted(seen - set(known))
        return ordered

    def as_dict(self) -> dict:
        order = self.label_order()
        return {
            "candidates": {l: self.candidates.get(l, 0) for l in order},
            "generalizations": {l: self.generalizations.get(l, 0) for l in order},
            "totals": {
                "candidates": self.candidates_total,
                "generalizations": self.generalizations_total,
            },
        }

    def render_text(self) -> str:
        rows = [("label", "candidates", "generalizations")]
        for label in self.label_order():
            rows.append((label, str(self.candidates.get(label, 0)),
                         str(self.generalizations.get(label, 0))))
        rows.append(("total", str(self.candidates_total),
                     str(self.generalizations_total)))
        return align_table(rows)


class DocumentStore:
    """One UTF-8 text file per document under a run directory.

    Filenames are the percent-encoded doc_id, so arbitrary ids (slashes,
    colons, unicode) stay filesystem-safe and reversible.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, doc_id: str) -> Path:
        return self.root / (quote(doc_id, safe="") + ".txt")

    def put(self, doc_id: str, text: str) -> None:
        try:
            self.path_for(doc_id).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DatasetError(f"cannot store document {doc_id!r}: {exc}") from exc

    def get(self, doc_id: str) -> str:
        path = self.path_for(doc_id)
        if not path.exists():
            raise DatasetError(f"document {doc_id!r} not in store")
        return path.read_text(encoding="utf-8")

    def __contains__(self, doc_id: str) -> bool:
        return self.path_for(doc_id).exists()

    def doc_ids(self) -> list[str]:
        return sorted(unquote(p.name[:-4]) for p in self.root.glob("*.txt"))
