"""Full mining runs over the fixture corpus, file mode and service mode."""

import json
from collections import Counter

import pytest

import fixture_treebank as ft
from conftest import parse_service_routes
from genmine.dataset import DocumentStore
from genmine.pipeline import RunConfig, StageError, mine
from genmine.scoring import ScorerConfig


def run_config(inputs, out_dir, parses=None, **kw):
    kw.setdefault("emit_candidates", True)
    if parses is not None:
        kw.setdefault("parses_path", str(parses))
    return RunConfig(inputs=list(inputs), output_dir=str(out_dir), **kw)


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture()
def golden_run(fixture_corpus, tmp_path):
    inputs, parses = fixture_corpus
    result = mine(run_config(inputs, tmp_path / "run", parses=parses))
    return result


class TestGoldenFileModeRun:
    def test_accepted_records_match_goldens(self, golden_run):
        expected = ft.expected_accepted()
        assert len(expected) == 63  # drift alarm for the fixture itself
        assert read_jsonl(golden_run.records_path) == expected

    def test_candidate_records_match_goldens(self, golden_run):
        expected = ft.expected_candidates()
        assert len(expected) == 73
        assert read_jsonl(golden_run.candidates_path) == expected

    def test_emission_sorted_by_doc_then_index(self, golden_run):
        keys = [(r["doc_id"], r["sent_index"])
                for r in read_jsonl(golden_run.records_path)]
        assert keys == sorted(keys)
        # arxiv ids sort before web ids, opposite of ingestion order
        assert keys[0][0].startswith("arx-")
        assert keys[-1][0].startswith("web-")

    def test_no_accepted_score_below_threshold(self, golden_run):
        for rec in read_jsonl(golden_run.records_path):
            assert rec["score"] >= 0.8

    def test_counts_table_matches_label_tallies(self, golden_run):
        counts = golden_run.counts
        assert counts.candidates == Counter(
            r["label"] for r in ft.expected_candidates())
        assert counts.generalizations == Counter(
            r["label"] for r in ft.expected_accepted())
        counts.validate()
        for label, n in counts.generalizations.items():
            assert n <= counts.candidates[label]

    def test_stage_counts_and_tally(self, golden_run):
        manifest = json.loads(golden_run.manifest_path.read_text(encoding="utf-8"))
        assert manifest["stage_counts"] == {
            "candidates": 73, "documents": 60, "parsed": 98, "sentences": 100}
        # the two filler sentences have no parse in the fixture file
        assert golden_run.tally.counts["missing-parse"] == 2
        assert manifest["tally"]["counts"]["missing-parse"] == 2

    def test_document_store_holds_docs_with_candidates(self, golden_run):
        stored = DocumentStore(golden_run.run_dir / "documents").doc_ids()
        expected = sorted({r["doc_id"] for r in ft.expected_candidates()})
        assert stored == expected

    def test_stored_document_text_round_trips_offsets(self, golden_run):
        store = DocumentStore(golden_run.run_dir / "documents")
        for rec in read_jsonl(golden_run.records_path):
            text = store.get(rec["doc_id"])
            assert text[rec["char_start"]:rec["char_end"]] == rec["sentence"]

    def test_report_files_written(self, golden_run):
        run_dir = golden_run.run_dir
        counts = json.loads((run_dir / "counts.json").read_text(encoding="utf-8"))
        assert counts == golden_run.counts.as_dict()
        assert counts["totals"] == {"candidates": 73, "generalizations": 63}
        table = (run_dir / "counts.txt").read_text(encoding="utf-8")
        assert table.splitlines()[0].startswith("label")
        stats = json.loads((run_dir / "length_stats.json").read_text(encoding="utf-8"))
        assert stats["n"] == 63
        csv = (run_dir / "length_hist.csv").read_text(encoding="utf-8")
        assert csv.splitlines()[0] == "length,percentage"


class TestManifest:
    def test_manifest_core_fields(self, golden_run, fixture_corpus):
        inputs, parses = fixture_corpus
        manifest = json.loads(golden_run.manifest_path.read_text(encoding="utf-8"))
        assert manifest["version"]
        assert manifest["python"].count(".") == 2
        assert manifest["config"]["threshold"] == 0.8
        # effective scorer carries the run threshold
        assert manifest["config"]["scorer"]["threshold"] == 0.8
        assert [i["source"] for i in manifest["inputs"]] == ["refinedweb", "arxiv"]
        assert all(len(i["sha256"]) == 64 for i in manifest["inputs"])
        assert len(manifest["parses_sha256"]) == 64

    def test_manifest_output_digests_match_files(self, golden_run):
        import hashlib
        manifest = json.loads(golden_run.manifest_path.read_text(encoding="utf-8"))
        recs = manifest["outputs"]["records"]
        data = golden_run.records_path.read_bytes()
        assert recs["sha256"] == hashlib.sha256(data).hexdigest()
        assert recs["lines"] == 63
        cands = manifest["outputs"]["candidates"]
        assert cands["lines"] == 73

    def test_candidates_entry_null_when_not_emitted(self, fixture_corpus, tmp_path):
        inputs, parses = fixture_corpus
        result = mine(run_config(inputs, tmp_path / "run", parses=parses,
                                 emit_candidates=False))
        assert result.candidates_path is None
        assert not (result.run_dir / "candidates.jsonl").exists()
        manifest = json.loads(result.manifest_path.read_text(encoding="utf-8"))
        assert manifest["outputs"]["candidates"] is None


class TestDeterminism:
    def test_worker_count_never_changes_output_bytes(self, fixture_corpus, tmp_path):
        inputs, parses = fixture_corpus
        one = mine(run_config(inputs, tmp_path / "w1", parses=parses, workers=1))
        eight = mine(run_config(inputs, tmp_path / "w8", parses=parses, workers=8))
        assert one.records_path.read_bytes() == eight.records_path.read_bytes()
        assert one.candidates_path.read_bytes() == eight.candidates_path.read_bytes()
        assert one.counts.as_dict() == eight.counts.as_dict()
        assert one.tally.as_dict() == eight.tally.as_dict()

    def test_rerun_is_byte_identical(self, fixture_corpus, tmp_path):
        inputs, parses = fixture_corpus
        first = mine(run_config(inputs, tmp_path / "a", parses=parses))
        second = mine(run_config(inputs, tmp_path / "b", parses=parses))
        assert first.records_path.read_bytes() == second.records_path.read_bytes()

    def test_duplicate_doc_ids_skipped_everywhere(self, fixture_corpus, tmp_path):
        inputs, parses = fixture_corpus
        doubled = list(inputs) + [inputs[1]]  # arxiv file listed twice
        base = mine(run_config(inputs, tmp_path / "base", parses=parses))
        doubled_run = mine(run_config(doubled, tmp_path / "doubled", parses=parses))
        assert doubled_run.tally.counts["duplicate-doc-id"] == 20
        assert doubled_run.records_path.read_bytes() == base.records_path.read_bytes()
        manifest = json.loads(doubled_run.manifest_path.read_text(encoding="utf-8"))
        assert manifest["stage_counts"]["documents"] == 60


class TestInlineContext:
    def test_records_carry_full_document_text(self, fixture_corpus, tmp_path):
        inputs, parses = fixture_corpus
        result = mine(run_config(inputs, tmp_path / "run", parses=parses,
                                 inline_context=True))
        store = DocumentStore(result.run_dir / "documents")
        by_doc = {}
        for rec in read_jsonl(result.records_path):
            assert rec["context"] == store.get(rec["doc_id"])
            assert rec["context"][rec["char_start"]:rec["char_end"]] == rec["sentence"]
            by_doc.setdefault(rec["doc_id"], set()).add(rec["context"])
        # records from one document share one context string
        assert all(len(ctx) == 1 for ctx in by_doc.values())
        multi = [d for d, ctx in by_doc.items() if len(next(iter(ctx))) > 80]
        assert multi, "fixture should include multi-sentence documents"

    def test_context_absent_by_default(self, golden_run):
        assert all("context" not in r for r in read_jsonl(golden_run.records_path))


class TestServiceMode:
    def test_matches_file_mode_byte_for_byte(self, fixture_corpus, tmp_path,
                                             http_stub):
        inputs, parses = fixture_corpus
        file_run = mine(run_config(inputs, tmp_path / "file", parses=parses))
        endpoint = http_stub(parse_service_routes())
        service_run = mine(run_config(inputs, tmp_path / "svc",
                                      parse_endpoint=endpoint, workers=4))
        assert (service_run.records_path.read_bytes()
                == file_run.records_path.read_bytes())
        assert (service_run.candidates_path.read_bytes()
                == file_run.candidates_path.read_bytes())
        assert service_run.counts.as_dict() == file_run.counts.as_dict()

    def test_service_mode_manifest_and_stages(self, fixture_corpus, tmp_path,
                                              http_stub):
        inputs, _ = fixture_corpus
        endpoint = http_stub(parse_service_routes())
        result = mine(run_config(inputs, tmp_path / "svc",
                                 parse_endpoint=endpoint))
        manifest = json.loads(result.manifest_path.read_text(encoding="utf-8"))
        assert manifest["parses_sha256"] is None
        assert manifest["config"]["parse_endpoint"] == endpoint
        # the placeholder parses for the two fillers count as parsed here
        assert manifest["stage_counts"]["parsed"] == 100
        assert manifest["stage_counts"]["candidates"] == 73
        assert "missing-parse" not in result.tally.counts


class TestStageErrors:
    def test_config_errors(self, tmp_path):
        with pytest.raises(StageError, match=r"\[config\].*input"):
            mine(RunConfig(inputs=[], output_dir=str(tmp_path / "r"),
                           parses_path="x"))
        with pytest.raises(StageError, match=r"\[config\].*parse source"):
            mine(RunConfig(inputs=[("a", "s")], output_dir=str(tmp_path / "r")))
        with pytest.raises(StageError, match=r"\[config\].*parse source"):
            mine(RunConfig(inputs=[("a", "s")], output_dir=str(tmp_path / "r"),
                           parses_path="x", parse_endpoint="http://y"))
        with pytest.raises(StageError, match=r"\[config\].*workers"):
            mine(RunConfig(inputs=[("a", "s")], output_dir=str(tmp_path / "r"),
                           parses_path="x", workers=0))

    def test_missing_parse_file_is_a_parse_stage_error(self, fixture_corpus,
                                                       tmp_path):
        inputs, _ = fixture_corpus
        with pytest.raises(StageError, match=r"\[parse\]") as exc:
            mine(run_config(inputs, tmp_path / "run",
                            parses=tmp_path / "absent.conllu"))
        assert exc.value.stage == "parse"

    def test_missing_corpus_file_is_an_ingest_stage_error(self, fixture_corpus,
                                                          tmp_path):
        _, parses = fixture_corpus
        bad_inputs = [(str(tmp_path / "absent.jsonl"), "refinedweb")]
        with pytest.raises(StageError, match=r"\[ingest\]") as exc:
            mine(run_config(bad_inputs, tmp_path / "run", parses=parses))
        assert exc.value.stage == "ingest"

    def test_unreachable_scorer_is_a_score_stage_error(self, fixture_corpus,
                                                       tmp_path):
        inputs, parses = fixture_corpus
        scorer = ScorerConfig(kind="external-service", endpoint="http://127.0.0.1:9",
                              max_retries=0, backoff_base=0.0, timeout=0.5)
        with pytest.raises(StageError, match=r"\[score\]") as exc:
            mine(run_config(inputs, tmp_path / "run", parses=parses,
                            scorer=scorer))
        assert exc.value.stage == "score"
