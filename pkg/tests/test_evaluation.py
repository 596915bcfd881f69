import json
import random

import pytest
from hypothesis import given, strategies as st

from conftest import utt
from oracles import chunks_by_scanning
from slotforge.corpus import bio_tags
from slotforge.evaluation import (AugmentationStats, ChunkMetrics, augmentation_stats,
                                  chunk_prf, extract_chunks, metrics_to_json, metrics_to_text)


def test_extract_chunks_examples():
    assert extract_chunks(["B-a", "I-a", "O", "B-b"]) == {("a", 0, 2), ("b", 3, 4)}
    assert extract_chunks(["I-a", "I-a"]) == {("a", 0, 2)}
    assert extract_chunks(["O", "O"]) == set()
    assert extract_chunks([]) == set()


def test_extract_chunks_repair_cases():
    assert extract_chunks(["B-a", "I-b"]) == {("a", 0, 1), ("b", 1, 2)}
    assert extract_chunks(["B-a", "B-a"]) == {("a", 0, 1), ("a", 1, 2)}
    assert extract_chunks(["O", "I-a", "O", "I-a", "I-a"]) == {("a", 1, 2), ("a", 3, 5)}


def test_extract_chunks_matches_scanning_oracle():
    rng = random.Random(5)
    tags = ["O", "B-a", "I-a", "B-b", "I-b"]
    for _ in range(2000):
        seq = [rng.choice(tags) for _ in range(rng.randint(0, 9))]
        assert extract_chunks(seq) == chunks_by_scanning(seq)


tag_seq = st.lists(st.sampled_from(["O", "B-a", "I-a", "B-b", "I-b"]), max_size=10)


@given(tag_seq)
def test_reexpansion_is_identity(tags):
    chunks = extract_chunks(tags)
    out = ["O"] * len(tags)
    for typ, start, end in chunks:
        out[start:end] = [str(t) for t in bio_tags(typ, end - start)]
    assert extract_chunks(out) == chunks


def test_chunk_prf_perfect_and_empty_predictions():
    gold = [utt("a/B-x b/I-x c"), utt("d/B-y")]
    m = chunk_prf(gold, [u.tags for u in gold])
    assert (m.precision, m.recall, m.f1) == (100.0, 100.0, 100.0)
    m = chunk_prf(gold, [["O"] * 3, ["O"]])
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert (m.gold, m.predicted, m.correct) == (2, 0, 0)


def test_chunk_prf_half_right():
    gold = [utt("a/B-x b c/B-y")]
    m = chunk_prf(gold, [["B-x", "O", "B-z"]])
    assert (m.precision, m.recall, m.f1) == (50.0, 50.0, 50.0)


def test_chunk_prf_boundary_must_match_exactly():
    gold = [utt("new/B-city york/I-city")]
    m = chunk_prf(gold, [["B-city", "O"]])
    assert (m.correct, m.predicted, m.gold) == (0, 1, 1)


def test_chunk_prf_length_mismatch():
    with pytest.raises(ValueError):
        chunk_prf([utt("a b")], [["O"]])


def test_chunk_prf_is_permutation_invariant():
    gold = [utt("a/B-x b"), utt("c/B-y d/I-y"), utt("e f/B-x")]
    pred = [["B-x", "O"], ["B-y", "B-y"], ["O", "B-x"]]
    m1 = chunk_prf(gold, pred)
    m2 = chunk_prf(gold[::-1], pred[::-1])
    assert m1 == m2


def test_swapping_gold_and_prediction_swaps_p_and_r():
    gold = [utt("a/B-x b/B-y c"), utt("d/B-x")]
    pred = [["B-x", "O", "B-z"], ["I-x"]]
    m = chunk_prf(gold, pred)
    swapped = chunk_prf([utt(" ".join(f"w/{t}" if t != "O" else "w" for t in p)) for p in pred],
                        [u.tags for u in gold])
    assert (swapped.precision, swapped.recall) == (m.recall, m.precision)
    assert swapped.f1 == pytest.approx(m.f1)


def test_metrics_invariants():
    m = ChunkMetrics.from_counts(gold=4, predicted=3, correct=2)
    assert m.precision == pytest.approx(200 / 3)
    assert m.recall == 50.0
    assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))


def test_augmentation_stats_examples():
    train = [("a", "<x>"), ("b", "<x>")]
    assert augmentation_stats(train, {("a", "<x>"): [("b", "<x>")]}).num_new_delex == 0
    assert augmentation_stats(train, {}) == AugmentationStats(0, 0.0)
    src = ("a", "b", "c", "d")
    stats = augmentation_stats(train, {src: [("a", "b", "c", "e"), ("w", "x", "y", "z")]})
    assert stats.avg_max_edit_distance == 4
    assert stats.num_new_delex == 2


def test_augmentation_stats_dedups_and_averages_over_sources():
    gens = {("a",): [("q",), ("a",)], ("b",): [("q",)], ("c",): []}
    stats = augmentation_stats([("a",), ("b",)], gens)
    assert stats.num_new_delex == 1
    assert stats.avg_max_edit_distance == 1.0


def test_report_formats():
    metrics = {"precision": 50.0, "f1": 40.0}
    assert metrics_to_text(metrics) == "precision\t50.0\nf1\t40.0\n"
    assert json.loads(metrics_to_json(metrics)) == metrics
