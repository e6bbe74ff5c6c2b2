"""Surface statistics, embedding diversity, lexical diversity, head lemmas."""

import json
import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fixture_treebank as ft
from genmine.analysis import (DiversityReport, common_words, default_tokens,
                              distinct_n, diversity_cossim, head_lemma_triple,
                              head_lemmas, length_stats, load_embeddings,
                              sample_groups, word_count, write_length_csv)
from genmine.tally import RunTally

SOYBEAN = ft.BY_KEY["soybeans"].text


class TestWordCount:
    def test_published_three_word_example(self):
        assert word_count("Words have power.") == 3

    def test_published_eighteen_word_example(self):
        assert word_count(SOYBEAN) == 18

    def test_whitespace_runs_collapse(self):
        assert word_count("  a \t b\n c  ") == 3
        assert word_count("") == 0


class TestLengthStats:
    def test_length_sample_fixture_statistics(self):
        stats = length_stats(ft.LENGTH_SAMPLE_SENTENCES)
        lengths = [len(s.split()) for s in ft.LENGTH_SAMPLE_SENTENCES]
        assert stats.n == 23
        assert stats.histogram == {n: 1 for n in range(3, 26)}
        assert stats.mean == 14.0  # sum is 322 over 23 sentences, exactly 14
        assert stats.median == 14
        assert stats.std == pytest.approx(statistics.pstdev(lengths), abs=1e-12)

    def test_lower_median_on_even_count(self):
        stats = length_stats(["a", "a b", "a b c", "a b c d"])
        assert stats.median == 2

    def test_empty_input(self):
        stats = length_stats([])
        assert (stats.n, stats.histogram) == (0, {})

    def test_percentages_sum_to_100_sorted_by_length(self):
        stats = length_stats(["three little words", "one", "two words"])
        pairs = stats.percentages()
        assert [length for length, _ in pairs] == [1, 2, 3]
        assert math.fsum(pct for _, pct in pairs) == pytest.approx(100.0)

    def test_csv_output(self, tmp_path):
        stats = length_stats(["a", "a", "a b c"])
        path = tmp_path / "hist.csv"
        write_length_csv(stats, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "length,percentage"
        assert lines[1] == "1,66.666667"
        assert lines[2] == "3,33.333333"


class TestDefaultTokens:
    def test_strips_surrounding_punctuation_and_lowercases(self):
        assert default_tokens("Hello, World!") == ["hello", "world"]

    def test_inner_punctuation_survives(self):
        assert default_tokens("beta-carotene isn't rare") == \
            ["beta-carotene", "isn't", "rare"]

    def test_pure_punctuation_tokens_vanish(self):
        assert default_tokens("wait -- what ?!") == ["wait", "what"]


class TestCommonWords:
    def test_counts_stopwords_and_tie_break(self):
        sentences = ["Tigers hunt deer", "tigers hunt boar",
                     "the tigers rest"]
        out = common_words(sentences, stopwords={"the"}, k=3)
        assert out == [("tigers", 3), ("hunt", 2), ("boar", 1)]

    def test_k_caps_output(self):
        out = common_words(["a b c d"], stopwords=set(), k=2)
        assert len(out) == 2


class TestLoadEmbeddings:
    def test_reads_ids_and_matrix(self, tmp_path):
        path = tmp_path / "vecs.jsonl"
        rows = [{"id": "a", "vec": [1.0, 0.0]}, {"id": "b", "vec": [0.0, 2.0]}]
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        ids, mat = load_embeddings(path)
        assert ids == ["a", "b"]
        assert mat.dtype == np.float64
        np.testing.assert_array_equal(mat, [[1.0, 0.0], [0.0, 2.0]])

    def test_malformed_and_mismatched_lines_tallied(self, tmp_path):
        path = tmp_path / "vecs.jsonl"
        path.write_text("\n".join([
            json.dumps({"id": "a", "vec": [1.0, 2.0]}),
            "{oops",
            json.dumps({"id": "bad", "vec": "nope"}),
            json.dumps({"id": "short", "vec": [1.0]}),
            json.dumps({"id": "b", "vec": [3.0, 4.0]}),
        ]), encoding="utf-8")
        tally = RunTally()
        ids, mat = load_embeddings(path, tally=tally)
        assert ids == ["a", "b"]
        assert mat.shape == (2, 2)
        assert tally.counts["malformed-embedding"] == 2
        assert tally.counts["embedding-dim-mismatch"] == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "vecs.jsonl"
        path.write_text("", encoding="utf-8")
        ids, mat = load_embeddings(path)
        assert ids == [] and mat.shape == (0, 0)


class TestDiversityCossim:
    def test_identical_vectors_score_minus_one(self):
        group = np.tile([2.0, 0.0], (4, 1))
        result = diversity_cossim([group])
        assert result.mean == pytest.approx(-1.0, abs=1e-9)

    def test_orthonormal_pair_scores_zero(self):
        result = diversity_cossim([np.eye(2)])
        assert result.mean == pytest.approx(0.0, abs=1e-9)

    def test_three_vector_case(self):
        group = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        result = diversity_cossim([group])
        assert result.mean == pytest.approx(-0.4714, abs=1e-3)
        assert result.mean == pytest.approx(-math.sqrt(2) / 3, abs=1e-12)

    def test_mean_and_population_std_across_groups(self):
        groups = [np.tile([1.0, 0.0], (3, 1)), np.eye(2)]
        result = diversity_cossim(groups)
        assert result.per_group == pytest.approx([-1.0, 0.0])
        assert result.mean == pytest.approx(-0.5)
        assert result.std == pytest.approx(0.5)  # population, not sample

    def test_zero_vectors_dropped_and_tallied(self):
        tally = RunTally()
        group = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        result = diversity_cossim([group], tally=tally)
        assert result.mean == pytest.approx(-1.0)
        assert tally.counts["zero-embedding"] == 1

    def test_degenerate_group_rejected(self):
        with pytest.raises(ValueError):
            diversity_cossim([np.array([[0.0, 0.0], [1.0, 0.0]])])
        with pytest.raises(ValueError):
            diversity_cossim([])


class TestSampleGroups:
    def test_deterministic_per_seed(self):
        rows = np.arange(20.0).reshape(10, 2)
        a = sample_groups(rows, n_groups=4, group_size=5, seed=9)
        b = sample_groups(rows, n_groups=4, group_size=5, seed=9)
        for ga, gb in zip(a, b):
            np.testing.assert_array_equal(ga, gb)

    def test_seed_changes_sample(self):
        rows = np.arange(40.0).reshape(20, 2)
        a = sample_groups(rows, n_groups=1, group_size=10, seed=0)[0]
        b = sample_groups(rows, n_groups=1, group_size=10, seed=1)[0]
        assert not np.array_equal(a, b)

    def test_no_replacement_within_group_and_cap(self):
        rows = np.arange(12.0).reshape(6, 2)
        groups = sample_groups(rows, n_groups=3, group_size=50, seed=2)
        for group in groups:
            assert group.shape == (6, 2)  # capped at the row count
            assert len({tuple(r) for r in group}) == 6

    def test_too_few_rows_rejected(self):
        with pytest.raises(ValueError):
            sample_groups(np.ones((1, 3)))


def brute_force_distinct(sentences, n_values, budget):
    """Set-based oracle with the same whole-sentence budget rule."""
    chosen = []
    used = 0
    for text in sentences:
        if used >= budget:
            break
        toks = default_tokens(text)
        if not toks:
            continue
        chosen.append(toks)
        used += len(toks)
    out = {}
    for n in n_values:
        grams = set()
        for toks in chosen:
            grams.update(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))
        out[n] = len(grams)
    return out


class TestDistinctN:
    def test_worked_example(self):
        assert distinct_n(["a b a b c"], n_values=(1, 2)) == {1: 3, 2: 3}

    def test_ngrams_never_cross_sentence_boundaries(self):
        assert distinct_n(["a b", "b a"], n_values=(2,)) == {2: 2}

    def test_budget_keeps_crossing_sentence_whole(self):
        sentences = ["a b c", "d e f", "g h i"]
        assert distinct_n(sentences, n_values=(1,), budget=4) == {1: 6}

    def test_longer_ngram_than_sentence_contributes_nothing(self):
        assert distinct_n(["a"], n_values=(3,)) == {3: 0}

    @settings(max_examples=120, deadline=None)
    @given(
        st.lists(
            st.lists(st.sampled_from("abcdef"), max_size=40).map(" ".join),
            max_size=60),
        st.integers(min_value=1, max_value=10_000),
    )
    def test_matches_brute_force_oracle(self, sentences, budget):
        n_values = (1, 2, 3)
        assert distinct_n(sentences, n_values=n_values, budget=budget) == \
            brute_force_distinct(sentences, n_values, budget)


class TestHeadLemmas:
    def test_published_bees_example(self):
        sent = ft.parsed(ft.BY_KEY["bees-feed"])
        assert head_lemma_triple(sent) == ("bee", "feed", "flower")

    @pytest.mark.parametrize(
        "entry", [e for e in ft.ENTRIES if e.lemmas is not None],
        ids=lambda e: e.key)
    def test_treebank_expectations(self, entry):
        assert head_lemma_triple(ft.parsed(entry)) == entry.lemmas

    def test_unique_counts_over_parses(self):
        parses = [ft.parsed(ft.BY_KEY[k]) for k in
                  ("tigers-stripes", "tigers-sleep", "words-power")]
        counts = head_lemmas(parses)
        # subjects {tiger, word}, verbs {have, sleep}, objects {stripe, power}
        assert counts == {"subject": 2, "verb": 2, "object": 2}

    def test_budget_caps_consumption(self):
        parses = [ft.parsed(ft.BY_KEY[k]) for k in
                  ("tigers-stripes", "words-power")]
        counts = head_lemmas(parses, budget=1)
        assert counts == {"subject": 1, "verb": 1, "object": 1}


class TestDiversityReport:
    def test_dict_and_text_rendering(self):
        report = DiversityReport(
            d_cossim_mean=-0.42, d_cossim_std=0.01,
            distinct={1: 10, 2: 20, 3: 30},
            head_lemmas={"subject": 4, "verb": 5, "object": 6},
            sampling={"groups": 2, "group_size": 3, "seed": 0},
        )
        data = report.as_dict()
        assert data["d_cossim"] == {"mean": -0.42, "std": 0.01}
        assert data["distinct"] == {"1": 10, "2": 20, "3": 30}
        text = report.render_text()
        assert "d_cossim" in text and "distinct-2" in text
