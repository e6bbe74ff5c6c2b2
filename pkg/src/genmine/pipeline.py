"""End-to-end mining run: corpus files in, sorted record files out.

Three phases keep parallel runs byte-reproducible:

  1. candidate extraction, parallel over documents, merged in input order;
  2. scoring over the candidate list sorted by (doc_id, sent_index);
  3. sequential emission of candidates/accepted records plus counts,
     length statistics and a manifest with input digests.

Worker count therefore changes wall time, never output bytes.
"""

from __future__ import annotations

import hashlib
import json
import platform
import random
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterator

from . import __version__
from .analysis import length_stats, write_length_csv
from .annotate import ParseClient
from .conllu import ParsedSentence, read_parses
from .corpus_io import (DEFAULT_MAX_DOC_BYTES, CorpusError, Document,
                        SentenceSpan, load_documents, segment)
from .dataset import (CountsTable, DatasetError, DocumentStore, MGenRecord,
                      RecordSink)
from .filters import GenLabel, detect_label, is_bare_plural, prefilter
from .scoring import (ScorerConfig, ScoringError, accept, make_scorer, score,
                      strip_quantifier)
from .tally import RunTally

ROUNDTRIP_SAMPLE_RATE = 0.01


class StageError(Exception):
    """Fatal pipeline failure attributed to a named stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(slots=True)
class RunConfig:
    """Everything a mining run needs; the manifest records all of it."""

    inputs: list[tuple[str, str]]
    output_dir: str
    parses_path: str | None = None
    parse_endpoint: str | None = None
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    threshold: float = 0.8
    emit_candidates: bool = False
    inline_context: bool = False
    workers: int = 1
    seed: int = 0
    max_doc_bytes: int = DEFAULT_MAX_DOC_BYTES

    def validate(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if (self.parses_path is None) == (self.parse_endpoint is None):
            raise ValueError("exactly one parse source is required: "
                             "a CoNLL-U file or a service endpoint")


@dataclass(frozen=True, slots=True)
class Candidate:
    """A sentence that survived the syntactic filter, ready for scoring."""

    span: SentenceSpan
    source: str
    label: GenLabel
    scored_text: str


@dataclass(slots=True)
class RunResult:
    run_dir: Path
    records_path: Path
    candidates_path: Path | None
    counts: CountsTable
    manifest_path: Path
    tally: RunTally


def _candidate(span: SentenceSpan, source: str, parsed: ParsedSentence,
               tally: RunTally) -> Candidate | None:
    pre = prefilter(parsed.tokens)
    if pre.kind == "reject":
        return None
    check = is_bare_plural(parsed)
    if not check.passed:
        return None
    label = detect_label(parsed, pre, check)
    if label.position == "initial":
        try:
            scored_text = strip_quantifier(span.text, label.label)
        except ValueError:
            # Prefilter saw the quantifier on the parse tokens but the raw
            # text does not start with it (tokenizer mismatch); score as-is.
            tally.record("strip-mismatch", doc_id=span.doc_id,
                         sent_index=span.sent_index)
            scored_text = span.text
    else:
        scored_text = span.text
    return Candidate(span=span, source=source, label=label, scored_text=scored_text)


def _process_document(doc: Document, source: str,
                      parse_index: dict[tuple[str, int], ParsedSentence] | None,
                      client: ParseClient | None):
    """Per-document worker: segment, parse, filter.  Returns everything the
    main thread needs to merge results in input order."""
    tally = RunTally()
    stage = Counter()
    spans = segment(doc)
    stage["sentences"] += len(spans)
    parses: list[ParsedSentence | None]
    if parse_index is not None:
        parses = []
        for span in spans:
            parsed = parse_index.get((span.doc_id, span.sent_index))
            if parsed is None:
                tally.record("missing-parse", doc_id=span.doc_id,
                             sent_index=span.sent_index)
            parses.append(parsed)
    else:
        parses = client.annotate_many(spans, tally=tally)
    candidates = []
    for span, parsed in zip(spans, parses):
        if parsed is None:
            continue
        stage["parsed"] += 1
        cand = _candidate(span, source, parsed, tally)
        if cand is not None:
            candidates.append(cand)
    stage["candidates"] += len(candidates)
    return candidates, tally, stage


def _iter_documents(cfg: RunConfig, tally: RunTally) -> Iterator[tuple[Document, str]]:
    for path, source in cfg.inputs:
        for doc in load_documents(path, source, tally=tally,
                                  max_doc_bytes=cfg.max_doc_bytes):
            yield doc, source


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _count_lines(path) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        return sum(1 for _ in fh)


def mine(cfg: RunConfig) -> RunResult:
    """Run the full pipeline and write all run artifacts under output_dir."""
    try:
        cfg.validate()
    except ValueError as exc:
        raise StageError("config", str(exc)) from exc

    run_dir = Path(cfg.output_dir)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("config", f"cannot create run directory: {exc}") from exc

    tally = RunTally()
    stage_counts: Counter[str] = Counter()

    parse_index = None
    client = None
    if cfg.parses_path is not None:
        parse_index = {}
        try:
            for parsed in read_parses(cfg.parses_path, tally=tally):
                parse_index[(parsed.doc_id, parsed.sent_index)] = parsed
        except OSError as exc:
            raise StageError("parse", f"cannot read parses: {exc}") from exc
    else:
        client = ParseClient(cfg.parse_endpoint)

    store = DocumentStore(run_dir / "documents")
    candidates: list[Candidate] = []
    seen_docs: set[str] = set()
    window = max(8, cfg.workers * 4)

    def merge(doc: Document, result) -> None:
        doc_candidates, local_tally, local_stage = result
        tally.merge(local_tally)
        stage_counts.update(local_stage)
        if doc_candidates:
            store.put(doc.doc_id, doc.text)
            candidates.extend(doc_candidates)

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            pending: deque = deque()
            for doc, source in _iter_documents(cfg, tally):
                if doc.doc_id in seen_docs:
                    tally.record("duplicate-doc-id", doc_id=doc.doc_id)
                    continue
                seen_docs.add(doc.doc_id)
                stage_counts["documents"] += 1
                pending.append((doc, pool.submit(_process_document, doc, source,
                                                 parse_index, client)))
                if len(pending) >= window:
                    queued_doc, fut = pending.popleft()
                    merge(queued_doc, fut.result())
            while pending:
                queued_doc, fut = pending.popleft()
                merge(queued_doc, fut.result())
    except CorpusError as exc:
        raise StageError("ingest", str(exc)) from exc

    # Sorting here fixes both the output order and the score-batch
    # composition, independent of worker scheduling.
    candidates.sort(key=lambda c: (c.span.doc_id, c.span.sent_index))

    scorer_cfg = replace(cfg.scorer, threshold=cfg.threshold)
    try:
        scorer = make_scorer(scorer_cfg)
        scores = score([c.scored_text for c in candidates], scorer_cfg, scorer)
    except (ScoringError, ValueError, OSError) as exc:
        raise StageError("score", str(exc)) from exc

    counts = CountsTable()
    records_path = run_dir / "records.jsonl"
    candidates_path = run_dir / "candidates.jsonl" if cfg.emit_candidates else None
    accepted: list[MGenRecord] = []
    context_cache: tuple[str, str] | None = None

    def context_for(doc_id: str) -> str:
        nonlocal context_cache
        if context_cache is None or context_cache[0] != doc_id:
            context_cache = (doc_id, store.get(doc_id))
        return context_cache[1]

    try:
        with ExitStack() as stack:
            sink = stack.enter_context(
                RecordSink(records_path, threshold=scorer_cfg.threshold))
            cand_sink = (stack.enter_context(RecordSink(candidates_path))
                         if candidates_path else None)
            for cand, sc in zip(candidates, scores):
                span = cand.span
                record = MGenRecord(
                    record_id=f"{span.doc_id}#{span.sent_index}",
                    sentence=span.text,
                    label=cand.label,
                    score=sc,
                    source=cand.source,
                    doc_id=span.doc_id,
                    sent_index=span.sent_index,
                    char_start=span.char_start,
                    char_end=span.char_end,
                    context=context_for(span.doc_id) if cfg.inline_context else None,
                )
                counts.add_candidate(record.label.label)
                if cand_sink:
                    cand_sink.write(record)
                if accept(sc, scorer_cfg):
                    counts.add_generalization(record.label.label)
                    sink.write(record)
                    accepted.append(record)
        counts.validate()
    except DatasetError as exc:
        raise StageError("emit", str(exc)) from exc

    _roundtrip_check(accepted, store, cfg.seed)
    _write_reports(run_dir, counts, accepted)
    manifest_path = _write_manifest(run_dir, cfg, scorer_cfg, counts,
                                    stage_counts, tally, records_path,
                                    candidates_path)
    return RunResult(run_dir=run_dir, records_path=records_path,
                     candidates_path=candidates_path, counts=counts,
                     manifest_path=manifest_path, tally=tally)


def _roundtrip_check(accepted: list[MGenRecord], store: DocumentStore,
                     seed: int) -> None:
    """Verify on a seeded sample that record offsets still locate the
    sentence text inside the stored document."""
    if not accepted:
        return
    rng = random.Random(seed)
    k = max(1, int(len(accepted) * ROUNDTRIP_SAMPLE_RATE))
    for idx in sorted(rng.sample(range(len(accepted)), k)):
        rec = accepted[idx]
        try:
            text = store.get(rec.doc_id)
        except DatasetError as exc:
            raise StageError("emit", str(exc)) from exc
        if text[rec.char_start:rec.char_end] != rec.sentence:
            raise StageError(
                "emit", f"record {rec.record_id}: span does not round-trip "
                        f"against the stored document")


def _write_reports(run_dir: Path, counts: CountsTable,
                   accepted: list[MGenRecord]) -> None:
    (run_dir / "counts.json").write_text(
        json.dumps(counts.as_dict(), indent=2) + "\n", encoding="utf-8")
    (run_dir / "counts.txt").write_text(counts.render_text() + "\n",
                                        encoding="utf-8")
    stats = length_stats(r.sentence for r in accepted)
    (run_dir / "length_stats.json").write_text(
        json.dumps(stats.as_dict(), indent=2) + "\n", encoding="utf-8")
    write_length_csv(stats, run_dir / "length_hist.csv")


def _write_manifest(run_dir: Path, cfg: RunConfig, scorer_cfg: ScorerConfig,
                    counts: CountsTable, stage_counts: Counter,
                    tally: RunTally, records_path: Path,
                    candidates_path: Path | None) -> Path:
    def file_entry(path: Path) -> dict:
        return {"path": path.name, "lines": _count_lines(path),
                "sha256": _sha256_file(path)}

    config = asdict(cfg)
    config["scorer"] = asdict(scorer_cfg)
    manifest = {
        "version": __version__,
        "python": platform.python_version(),
        "config": config,
        "inputs": [{"path": str(p), "source": s, "sha256": _sha256_file(p)}
                   for p, s in cfg.inputs],
        "parses_sha256": _sha256_file(cfg.parses_path) if cfg.parses_path else None,
        "stage_counts": {k: stage_counts[k] for k in sorted(stage_counts)},
        "counts": counts.as_dict(),
        "tally": tally.as_dict(),
        "outputs": {
            "records": file_entry(records_path),
            "candidates": file_entry(candidates_path) if candidates_path else None,
        },
    }
    manifest_path = run_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n",
                             encoding="utf-8")
    return manifest_path
