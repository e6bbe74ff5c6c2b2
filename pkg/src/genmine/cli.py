"""Command-line entry point wiring the pipeline stages and analyses.

Exit codes: 0 success, 1 fatal configuration or I/O problem, 2 stage
failure inside a run. A plain-text config file (key=value, '#' comments,
keys named like the long flags) can predefine any mine option; explicit
flags override it. GENMINE_SCORER_URL overrides the scoring endpoint
whenever an external scorer is in play.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import (DEFAULT_COSSIM_GROUP_SIZE, DEFAULT_COSSIM_GROUPS,
                       DEFAULT_DISTINCT_BUDGET, DEFAULT_LEMMA_BUDGET,
                       DiversityReport, common_words, diversity_cossim,
                       distinct_n, head_lemmas, length_stats,
                       load_embeddings, sample_groups, write_length_csv)
from .annotation_service import AnnotationService, sample_batch, serve
from .conllu import read_parses
from .corpus_io import SOURCE_TAGS, CorpusError
from .dataset import DatasetError, DocumentStore, read_records
from .formatting import align_table
from .pipeline import RunConfig, StageError, mine
from .scoring import ScorerConfig, ScoringError, load_wordlist, packaged_data

SCORER_URL_ENV = "GENMINE_SCORER_URL"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; those are config errors here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _load_config_file(path) -> dict[str, list[str]]:
    """key=value lines; repeated keys accumulate (used by 'input')."""
    out: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, _, value = line.partition("=")
            out.setdefault(key.strip(), []).append(value.strip())
    return out


def _split_input(spec: str) -> tuple[str, str]:
    """TAG=PATH → (path, tag)."""
    tag, sep, path = spec.partition("=")
    if not sep or not tag or not path:
        raise ValueError(f"--input expects TAG=PATH, got {spec!r}")
    return path, tag


def _build_parser() -> _Parser:
    parser = _Parser(prog="genmine",
                     description="Mine generic and quantified sentences "
                                 "from document corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    mine_p = sub.add_parser("mine", help="run the extraction pipeline")
    mine_p.add_argument("--input", action="append", metavar="TAG=PATH",
                        help=f"JSONL corpus file with its source tag "
                             f"(known tags: {', '.join(SOURCE_TAGS)}); repeatable")
    mine_p.add_argument("--output", metavar="DIR", help="run directory")
    mine_p.add_argument("--config", metavar="FILE",
                        help="key=value config file; flags override it")
    mine_p.add_argument("--parses", metavar="FILE",
                        help="CoNLL-U file with doc_id/sent_index metadata")
    mine_p.add_argument("--parse-endpoint", metavar="URL",
                        help="annotation service base URL (POST /parse)")
    mine_p.add_argument("--scorer", choices=("heuristic-baseline", "external-service"))
    mine_p.add_argument("--scorer-endpoint", metavar="URL",
                        help="scoring service base URL (POST /score)")
    mine_p.add_argument("--blocklist", metavar="FILE",
                        help="override the built-in heuristic blocklist")
    mine_p.add_argument("--threshold", type=float)
    mine_p.add_argument("--batch-size", type=int, dest="batch_size")
    mine_p.add_argument("--emit-candidates", action=argparse.BooleanOptionalAction,
                        default=None)
    mine_p.add_argument("--inline-context", action=argparse.BooleanOptionalAction,
                        default=None)
    mine_p.add_argument("--workers", type=int)
    mine_p.add_argument("--seed", type=int)
    mine_p.set_defaults(func=_cmd_mine)

    stats_p = sub.add_parser("stats", help="length and word statistics of a run")
    stats_p.add_argument("--run", required=True, metavar="DIR")
    stats_p.add_argument("--top-words", type=int, default=50)
    stats_p.add_argument("--stopwords", metavar="FILE",
                         help="stopword list (default: built-in)")
    stats_p.set_defaults(func=_cmd_stats)

    div_p = sub.add_parser("diversity", help="diversity metrics of a run")
    div_p.add_argument("--run", required=True, metavar="DIR")
    div_p.add_argument("--embeddings", metavar="FILE",
                       help='JSONL {"id":..., "vec":[...]} sentence embeddings')
    div_p.add_argument("--parses", metavar="FILE",
                       help="CoNLL-U parses for head-lemma counting")
    div_p.add_argument("--groups", type=int, default=DEFAULT_COSSIM_GROUPS)
    div_p.add_argument("--group-size", type=int, default=DEFAULT_COSSIM_GROUP_SIZE)
    div_p.add_argument("--distinct-budget", type=int, default=DEFAULT_DISTINCT_BUDGET)
    div_p.add_argument("--lemma-budget", type=int, default=DEFAULT_LEMMA_BUDGET)
    div_p.add_argument("--seed", type=int, default=0)
    div_p.set_defaults(func=_cmd_diversity)

    sample_p = sub.add_parser("sample", help="sample record ids for annotation")
    sample_p.add_argument("--run", required=True, metavar="DIR")
    sample_p.add_argument("-n", "--size", type=int, default=300)
    sample_p.add_argument("--seed", type=int, default=0)
    sample_p.add_argument("--output", metavar="FILE",
                          help="write the id list as JSON instead of stdout")
    sample_p.set_defaults(func=_cmd_sample)

    serve_p = sub.add_parser("annotate-serve", help="serve the labeling API and UI")
    serve_p.add_argument("--run", required=True, metavar="DIR")
    serve_p.add_argument("-n", "--size", type=int, default=300)
    serve_p.add_argument("--seed", type=int, default=0)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--ui", metavar="DIR", help="static UI assets to serve at /")
    serve_p.add_argument("--labels", metavar="FILE",
                         help="label log path (default: RUN/labels.jsonl)")
    serve_p.set_defaults(func=_cmd_serve)
    return parser


def _cmd_mine(args) -> int:
    filecfg = _load_config_file(args.config) if args.config else {}

    def pick(key: str, flag_value, default, cast):
        if flag_value is not None:
            return flag_value
        if key in filecfg:
            return cast(filecfg[key][-1])
        return default

    input_specs = args.input if args.input else filecfg.get("input", [])
    inputs = [_split_input(spec) for spec in input_specs]
    output_dir = pick("output", args.output, None, str)
    if output_dir is None:
        raise ValueError("an output directory is required (--output or config)")

    scorer_kind = pick("scorer", args.scorer, None, str)
    scorer_endpoint = pick("scorer-endpoint", args.scorer_endpoint, None, str)
    env_endpoint = os.environ.get(SCORER_URL_ENV)
    if env_endpoint:
        scorer_endpoint = env_endpoint
        if scorer_kind is None:
            scorer_kind = "external-service"
    if scorer_kind is None:
        scorer_kind = "heuristic-baseline"
    if scorer_kind != "external-service":
        scorer_endpoint = None

    scorer_cfg = ScorerConfig(
        kind=scorer_kind,
        endpoint=scorer_endpoint,
        batch_size=pick("batch-size", args.batch_size, 64, int),
        blocklist_path=pick("blocklist", args.blocklist, None, str),
    )
    cfg = RunConfig(
        inputs=inputs,
        output_dir=output_dir,
        parses_path=pick("parses", args.parses, None, str),
        parse_endpoint=pick("parse-endpoint", args.parse_endpoint, None, str),
        scorer=scorer_cfg,
        threshold=pick("threshold", args.threshold, 0.8, float),
        emit_candidates=pick("emit-candidates", args.emit_candidates, False, _parse_bool),
        inline_context=pick("inline-context", args.inline_context, False, _parse_bool),
        workers=pick("workers", args.workers, 1, int),
        seed=pick("seed", args.seed, 0, int),
    )
    result = mine(cfg)
    print(result.counts.render_text())
    print(f"\nrun written to {result.run_dir}")
    errors = result.tally.total()
    if errors:
        print(f"{errors} record-level issues tallied (see manifest.json)")
    return 0


def _records_of(run_dir: str):
    path = Path(run_dir) / "records.jsonl"
    if not path.exists():
        raise ValueError(f"no records.jsonl under {run_dir}")
    return list(read_records(path))


def _cmd_stats(args) -> int:
    records = _records_of(args.run)
    run_dir = Path(args.run)
    stats = length_stats(r.sentence for r in records)
    (run_dir / "length_stats.json").write_text(
        json.dumps(stats.as_dict(), indent=2) + "\n", encoding="utf-8")
    write_length_csv(stats, run_dir / "length_hist.csv")

    stop_src = args.stopwords if args.stopwords else packaged_data("stopwords.txt")
    stopwords = frozenset(load_wordlist(stop_src))
    top = common_words((r.sentence for r in records), stopwords, k=args.top_words)
    (run_dir / "common_words.json").write_text(
        json.dumps([{"word": w, "count": c} for w, c in top], indent=2) + "\n",
        encoding="utf-8")

    print(stats.render_text())
    if top:
        print()
        print(align_table([("word", "count")] + [(w, str(c)) for w, c in top]))
    return 0


def _cmd_diversity(args) -> int:
    records = _records_of(args.run)
    run_dir = Path(args.run)

    d_mean = d_std = None
    if args.embeddings:
        _, matrix = load_embeddings(args.embeddings)
        groups = sample_groups(matrix, n_groups=args.groups,
                               group_size=args.group_size, seed=args.seed)
        result = diversity_cossim(groups)
        d_mean, d_std = result.mean, result.std

    distinct = distinct_n((r.sentence for r in records),
                          budget=args.distinct_budget)

    lemmas: dict[str, int] = {}
    if args.parses:
        wanted = {(r.doc_id, r.sent_index) for r in records}
        parses = (p for p in read_parses(args.parses)
                  if (p.doc_id, p.sent_index) in wanted)
        lemmas = head_lemmas(parses, budget=args.lemma_budget)

    report = DiversityReport(
        d_cossim_mean=d_mean, d_cossim_std=d_std, distinct=distinct,
        head_lemmas=lemmas,
        sampling={"cossim_groups": args.groups,
                  "cossim_group_size": args.group_size,
                  "distinct_token_budget": args.distinct_budget,
                  "lemma_sentence_budget": args.lemma_budget},
    )
    (run_dir / "diversity.json").write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    print(report.render_text())
    return 0


def _cmd_sample(args) -> int:
    ids = sample_batch(_records_of(args.run), args.size, args.seed)
    if args.output:
        Path(args.output).write_text(json.dumps(ids, indent=2) + "\n",
                                     encoding="utf-8")
    else:
        for record_id in ids:
            print(record_id)
    return 0


def _cmd_serve(args) -> int:
    records = _records_of(args.run)
    run_dir = Path(args.run)
    batch = sample_batch(records, args.size, args.seed)
    store_dir = run_dir / "documents"
    store = DocumentStore(store_dir) if store_dir.is_dir() else None
    log_path = Path(args.labels) if args.labels else run_dir / "labels.jsonl"
    service = AnnotationService(records, batch, log_path, store=store)
    server = serve(service, host=args.host, port=args.port, ui_dir=args.ui)
    host, port = server.server_address[:2]
    print(f"annotation service on http://{host}:{port}/ "
          f"({len(batch)} items, labels → {log_path})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"genmine: {exc}", file=sys.stderr)
        return 1 if exc.stage == "config" else 2
    except (CorpusError, DatasetError, ScoringError) as exc:
        print(f"genmine: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"genmine: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
