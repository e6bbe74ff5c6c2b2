"""Human-labeling service: sampled batches, an append-only label log,
and agreement reporting.

Annotators label sentences as Generic, Particular or Unclear through a
small HTTP API. Labels go to a newline-delimited JSON log that is the
only persistent state: restarting the service replays the log and
reproduces the exact same report. A later submission for the same
(record_id, annotator_id) overwrites the effective label while the log
keeps both lines, the second flagged as an overwrite.
"""

from __future__ import annotations

import json
import mimetypes
import random
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import parse_qs, urlparse

from .dataset import DocumentStore, MGenRecord

LABELS = ("Generic", "Particular", "Unclear")
CONTEXT_EXCERPT_CHARS = 500


class UnknownRecord(Exception):
    """Label submitted for a record outside the active batch (404-class)."""


class BadLabel(Exception):
    """Label string outside the closed label set, or malformed (400-class)."""


@dataclass(frozen=True, slots=True)
class AgreementReport:
    """Exact-match agreement over doubly-labeled items plus pooled label shares.

    percent_agreement and kappa are None when undefined (no item labeled
    by two or more annotators; kappa additionally needs exactly two
    annotators overall).
    """

    n_items: int
    n_double_labeled: int
    percent_agreement: float | None
    distribution: dict[str, float]
    kappa: float | None

    def as_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_double_labeled": self.n_double_labeled,
            "percent_agreement": self.percent_agreement,
            "distribution": dict(self.distribution),
            "kappa": self.kappa,
        }


def sample_batch(records: Sequence, n: int, seed: int) -> list[str]:
    """Uniform sample of record ids without replacement, deterministic per seed.

    n is capped at the dataset size; an empty dataset is an error.
    """
    ids = [r.record_id if isinstance(r, MGenRecord) else str(r) for r in records]
    if not ids:
        raise ValueError("cannot sample from an empty dataset")
    rng = random.Random(seed)
    return rng.sample(ids, min(n, len(ids)))


def agreement(latest: Mapping[tuple[str, str], str]) -> AgreementReport:
    """Report over the effective labels, keyed by (record_id, annotator_id).

    percent_agreement counts an item as agreeing only when every
    annotator who labeled it chose the same label, over items with at
    least two annotators. The distribution pools every effective label.
    Cohen's kappa is supplementary and only defined for exactly two
    annotators.
    """
    by_item: dict[str, dict[str, str]] = {}
    for (record_id, annotator_id), label in latest.items():
        by_item.setdefault(record_id, {})[annotator_id] = label
    n_items = len(by_item)
    double = {rid: labels for rid, labels in by_item.items() if len(labels) >= 2}
    n_double = len(double)
    percent = None
    if n_double:
        matching = sum(1 for labels in double.values()
                       if len(set(labels.values())) == 1)
        percent = 100.0 * matching / n_double
    total = len(latest)
    distribution = {label: 0.0 for label in LABELS}
    if total:
        for label in latest.values():
            distribution[label] = distribution.get(label, 0.0) + 1
        distribution = {l: 100.0 * c / total for l, c in distribution.items()}
    return AgreementReport(n_items=n_items, n_double_labeled=n_double,
                           percent_agreement=percent, distribution=distribution,
                           kappa=_cohen_kappa(by_item))


def _cohen_kappa(by_item: dict[str, dict[str, str]]) -> float | None:
    annotators = sorted({aid for labels in by_item.values() for aid in labels})
    if len(annotators) != 2:
        return None
    a, b = annotators
    pairs = [(labels[a], labels[b]) for labels in by_item.values()
             if a in labels and b in labels]
    if not pairs:
        return None
    n = len(pairs)
    po = sum(1 for la, lb in pairs if la == lb) / n
    pe = 0.0
    for label in LABELS:
        pa = sum(1 for la, _ in pairs if la == label) / n
        pb = sum(1 for _, lb in pairs if lb == label) / n
        pe += pa * pb
    if pe == 1.0:
        # Both marginals are concentrated on one label; chance correction
        # degenerates. Observed agreement is necessarily 1 here.
        return 1.0
    return (po - pe) / (1.0 - pe)


class AnnotationService:
    """Batch state, label log and report assembly behind the HTTP API."""

    def __init__(self, records: Iterable[MGenRecord], batch_ids: Sequence[str],
                 log_path, store: DocumentStore | None = None):
        self._records = {r.record_id: r for r in records}
        missing = [rid for rid in batch_ids if rid not in self._records]
        if missing:
            raise ValueError(f"batch references unknown record ids: {missing[:3]}")
        self.batch_ids = list(batch_ids)
        self._batch_set = set(batch_ids)
        self._store = store
        self._log_path = Path(log_path)
        self._latest: dict[tuple[str, str], str] = {}
        self._lock = threading.Lock()
        if self._log_path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self._log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                key = (entry["record_id"], entry["annotator_id"])
                self._latest[key] = entry["label"]

    def submit(self, record_id: str, annotator_id: str, label: str,
               timestamp: str | None = None) -> bool:
        """Append one label; returns True when it overwrote an earlier one."""
        if label not in LABELS:
            raise BadLabel(f"label must be one of {LABELS}, got {label!r}")
        if not annotator_id or not isinstance(annotator_id, str):
            raise BadLabel("annotator_id must be a non-empty string")
        if record_id not in self._batch_set:
            raise UnknownRecord(f"record {record_id!r} is not in the active batch")
        if timestamp is None:
            timestamp = datetime.now(timezone.utc).isoformat()
        key = (record_id, annotator_id)
        with self._lock:
            overwrite = key in self._latest
            entry = {"record_id": record_id, "annotator_id": annotator_id,
                     "label": label, "timestamp": timestamp,
                     "overwrite": overwrite}
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            self._latest[key] = label
        return overwrite

    def _context_excerpt(self, record: MGenRecord) -> str:
        if record.context is not None:
            return record.context[:CONTEXT_EXCERPT_CHARS]
        if self._store is not None and record.doc_id in self._store:
            return self._store.get(record.doc_id)[:CONTEXT_EXCERPT_CHARS]
        return ""

    def batch_payload(self, annotator_id: str) -> list[dict]:
        """The active batch in presentation order, with this annotator's
        current label on each item (null when unlabeled)."""
        with self._lock:
            latest = dict(self._latest)
        out = []
        for rid in self.batch_ids:
            record = self._records[rid]
            out.append({
                "record_id": rid,
                "sentence": record.sentence,
                "context_excerpt": self._context_excerpt(record),
                "label": latest.get((rid, annotator_id)),
            })
        return out

    def report(self) -> AgreementReport:
        with self._lock:
            latest = dict(self._latest)
        return agreement(latest)


def _guess_type(path: Path) -> str:
    guessed, _ = mimetypes.guess_type(path.name)
    return guessed or "application/octet-stream"


def make_handler(service: AnnotationService, ui_dir=None):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send_json(self, payload, status: int = 200) -> None:
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, status: int, message: str) -> None:
            self._send_json({"error": message}, status=status)

        def do_GET(self):
            parsed = urlparse(self.path)
            if parsed.path == "/api/batch":
                query = parse_qs(parsed.query)
                annotator = query.get("annotator", [""])[0]
                if not annotator:
                    self._send_error_json(400, "annotator query parameter required")
                    return
                self._send_json(service.batch_payload(annotator))
            elif parsed.path == "/api/report":
                self._send_json(service.report().as_dict())
            else:
                self._serve_static(parsed.path)

        def _serve_static(self, raw_path: str) -> None:
            if ui_root is None:
                self._send_error_json(404, "no UI assets configured")
                return
            rel = raw_path.lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            # Resolve before comparing so ../ tricks cannot escape the UI root.
            if not target.is_relative_to(ui_root) or not target.is_file():
                self._send_error_json(404, "not found")
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", _guess_type(target))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            parsed = urlparse(self.path)
            if parsed.path != "/api/label":
                self._send_error_json(404, "not found")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                entry = json.loads(self.rfile.read(length).decode("utf-8"))
                record_id = entry["record_id"]
                annotator_id = entry["annotator_id"]
                label = entry["label"]
            except (ValueError, KeyError, TypeError):
                self._send_error_json(400, "body must be JSON with record_id, "
                                           "annotator_id and label")
                return
            try:
                overwrite = service.submit(record_id, annotator_id, label,
                                           timestamp=entry.get("timestamp"))
            except BadLabel as exc:
                self._send_error_json(400, str(exc))
                return
            except UnknownRecord as exc:
                self._send_error_json(404, str(exc))
                return
            self._send_json({"ok": True, "overwrite": overwrite})

    return Handler


def serve(service: AnnotationService, host: str = "127.0.0.1", port: int = 8765,
          ui_dir=None) -> ThreadingHTTPServer:
    """Build the HTTP server; the caller decides how to run it."""
    handler = make_handler(service, ui_dir=ui_dir)
    return ThreadingHTTPServer((host, port), handler)
