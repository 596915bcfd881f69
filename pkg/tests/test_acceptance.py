"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The slow end-to-end criteria share module-scoped pipeline runs. The desk
configuration they use lives in configs/desk.cfg.
"""

import math
import random
import time
from pathlib import Path

import pytest
import torch

from conftest import record_criterion, utt
from gradcheck import finite_difference_grads, relative_error
from oracles import exhaustive_best_sequence, levenshtein_recursive
from slotforge.config import load_config
from slotforge.corpus import Utterance
from slotforge.delex import build_slot_value_map, delexicalise, realise
from slotforge.diversity import TranslationPair, build_training_pairs, diversity_score, ldp
from slotforge.evaluation import chunk_prf
from slotforge.pipeline import run_pipeline
from slotforge.distance import edit_distance
from slotforge.seq2seq import (GenConfig, beam_search, build_vocab, forward_loss, init_params,
                               load_checkpoint, save_checkpoint)
from slotforge.seq2seq.model import token_nll
from slotforge.synthetic import make_synthetic, synthetic_vectors
from slotforge.tagger import (TaggerConfig, build_vocabs, init_tagger, load_tagger, save_tagger,
                              save_vectors)
from slotforge.vocab import Vocab

DESK = Path(__file__).resolve().parent.parent / "configs" / "desk.cfg"
SYNTH_SEED = 0
N_TEST = 300


def desk_config(tmp_dir, **overrides):
    vectors = Path(tmp_dir) / "vectors.txt"
    if not vectors.exists():
        save_vectors(synthetic_vectors(TaggerConfig().embed_size, SYNTH_SEED), vectors)
    settings = {"paths.vectors": str(vectors)}
    settings.update({k: str(v) for k, v in overrides.items()})
    return load_config(DESK, settings)


def timed_run(config, n_train):
    start = time.perf_counter()
    report = run_pipeline(config, corpora=make_synthetic(SYNTH_SEED, n_train, N_TEST))
    return report, time.perf_counter() - start


@pytest.fixture(scope="module")
def work_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def run_120(work_dir):
    return timed_run(desk_config(work_dir), 120)


@pytest.fixture(scope="module")
def run_500(work_dir):
    return timed_run(desk_config(work_dir), 500)


def test_criterion_01_edit_distance_oracle():
    rng = random.Random(2024)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        a = [rng.choice("abcd") for _ in range(rng.randint(0, 6))]
        b = [rng.choice("abcd") for _ in range(rng.randint(0, 6))]
        mismatches += edit_distance(a, b) != levenshtein_recursive(a, b)
    elapsed = time.perf_counter() - start
    passed = mismatches == 0 and elapsed < 5
    record_criterion(1, passed, f"1000 pairs, {mismatches} mismatches, {elapsed:.2f}s (< 5s)")
    assert passed


def test_criterion_02_diversity_anchor():
    source = "find me the <distance> route to <poi_type>".split()
    other = "give me the <distance> route to <poi_type>".split()
    score = diversity_score(source, other)
    ratio = ldp(["w"] * 7, ["w"] * 13)
    passed = score == 1.0 and abs(ratio - math.exp(-6 / 7)) <= 1e-9
    record_criterion(2, passed, f"equal-length score {score!r}, LDP(7,13) {ratio:.12f}")
    assert passed


def test_criterion_03_filtering_combinatorics():
    counts = {}
    for k in range(2, 9):
        cluster = [utt(f"w{i} " * i + "x/B-slot") for i in range(1, k + 1)]
        counts[k] = len(build_training_pairs(cluster, dedup=False))
    expected = {k: k * math.ceil((k - 1) / 2) for k in counts}
    passed = counts == expected
    record_criterion(3, passed, f"pairs per K {counts}, expected {expected}")
    assert passed


def _seq2seq_worst_error():
    config = GenConfig(num_layers=2, hidden_size=4, embed_size=3, seed=3)
    pairs = [TranslationPair("find me the <distance> #1".split(), "is there a <distance>".split()),
             TranslationPair("where is <poi_type> #2".split(), "show me <poi_type> now".split())]
    vocab = build_vocab(pairs)
    model = init_params(config, vocab, dtype=torch.float64)
    with torch.no_grad():
        for p in model.parameters():
            p.mul_(10)
    _, grads = forward_loss(model, pairs, vocab, config)

    def loss():
        nll, n = token_nll(model, pairs, vocab, config)
        return nll / n

    numeric = finite_difference_grads(model, loss)
    return {f"seq2seq.{k}": relative_error(grads[k], numeric[k]) for k in grads}


def _tagger_worst_error():
    corpus = [utt("show me flights from boston/B-from_city to denver/B-to_city"),
              utt("where is the nearest/B-distance coffee/B-poi_type shop/I-poi_type")]
    words, tags = build_vocabs(corpus, [])
    cfg = TaggerConfig(embed_size=4, hidden_size=3, dropout=0.0, seed=3)
    tagger = init_tagger(cfg, words, tags, dtype=torch.float64)
    with torch.no_grad():
        for p in tagger.model.parameters():
            p.mul_(10)
    tagger.model.eval()
    tagger.model.zero_grad()
    tagger.loss(corpus).backward()
    analytic = {n: p.grad.clone() for n, p in tagger.model.named_parameters()}
    numeric = finite_difference_grads(tagger.model, lambda: tagger.loss(corpus))
    return {f"tagger.{k}": relative_error(analytic[k], numeric[k]) for k in analytic}


def test_criterion_04_gradient_checks():
    start = time.perf_counter()
    errors = {**_seq2seq_worst_error(), **_tagger_worst_error()}
    elapsed = time.perf_counter() - start
    worst = max(errors, key=errors.get)
    passed = all(e <= 1e-4 for e in errors.values()) and elapsed < 60
    record_criterion(4, passed, f"{len(errors)} tensors, worst {worst} rel. err "
                                f"{errors[worst]:.2e} (<= 1e-4), {elapsed:.1f}s (< 60s)")
    assert passed


def test_criterion_05_beam_oracle():
    agree = 0
    for seed in range(20):
        config = GenConfig(num_layers=1, hidden_size=5, embed_size=3, seed=seed)
        vocab = Vocab(["a"])
        model = init_params(config, vocab, dtype=torch.float64)
        with torch.no_grad():
            model.out.weight.mul_(30)
            model.out.bias.mul_(30)
        source = ["a", "a", "#1"]
        _, best = exhaustive_best_sequence(model, source, vocab, config, 3)
        top = beam_search(model, source, vocab, config, beam_size=125, max_len=3)[0]
        agree += top.ids == best
    passed = agree == 20 and len(vocab) == 5
    record_criterion(5, passed, f"vocab 5, max len 3, beam 125: top-1 agrees on {agree}/20 seeds")
    assert passed


CHUNK_FIXTURES = [
    # (gold tags per utterance, predicted tags per utterance, hand-computed P, R, F1)
    ([["B-a", "I-a", "O", "B-b"]], [["B-a", "I-a", "O", "B-b"]], 100.0, 100.0, 100.0),
    # orphan I-a in gold is repaired into the chunk (a, 0, 2)
    ([["I-a", "I-a", "O"]], [["B-a", "I-a", "O"]], 100.0, 100.0, 100.0),
    ([["B-a", "O", "B-b"]], [["B-a", "O", "B-c"]], 50.0, 50.0, 50.0),
    # 3 gold chunks, 2 predicted, 1 correct: P = 50, R = 100/3, F1 = 40
    ([["B-a", "O"], ["O", "B-b", "I-b", "B-c"]], [["B-a", "O"], ["O", "O", "I-b", "O"]],
     50.0, 100 / 3, 40.0),
    # B-a followed by I-b is two chunks on both sides; the x chunk is missed: P = 100, R = 200/3
    ([["O", "B-a", "I-b"], ["B-x", "I-x"]], [["O", "B-a", "B-b"], ["O", "O"]],
     100.0, 200 / 3, 80.0),
]


def test_criterion_06_chunk_scorer_parity():
    results = []
    for gold_tags, pred, p, r, f in CHUNK_FIXTURES:
        gold = [Utterance(tuple(f"w{i}" for i in range(len(t))), tuple(t)) for t in gold_tags]
        m = chunk_prf(gold, pred)
        results.append(math.isclose(m.precision, p) and math.isclose(m.recall, r)
                       and math.isclose(m.f1, f))
    passed = all(results)
    record_criterion(6, passed, f"{sum(results)}/{len(results)} fixtures match hand-computed P/R/F1")
    assert passed


def test_criterion_07_ablation_diagnostics(run_120, work_dir):
    full, _ = run_120
    no_ranks, _ = timed_run(desk_config(work_dir, **{"aug.no_ranks": "true",
                                                     "skip_tagger": "true"}), 120)
    no_seq2seq, _ = timed_run(desk_config(work_dir, **{"aug.no_seq2seq": "true",
                                                       "skip_tagger": "true"}), 120)
    new = {"full": full["num_new_delex"], "no_ranks": no_ranks["num_new_delex"],
           "no_seq2seq": no_seq2seq["num_new_delex"]}
    passed = new["no_seq2seq"] == 0 and new["full"] > new["no_ranks"]
    record_criterion(7, passed, f"num_new_delex {new} (need no_seq2seq = 0, full > no_ranks)")
    assert passed


def test_criterion_08_trend_replication(run_120, run_500):
    small, t_small = run_120
    large, t_large = run_500
    margin_small, margin_large = small["f1_margin"], large["f1_margin"]
    total = t_small + t_large
    passed = (len(small["runs"]) == 5 and small["augmented_f1_mean"] >= small["baseline_f1_mean"]
              and margin_small >= margin_large and total < 30 * 60)
    record_criterion(8, passed,
                     f"120: baseline {small['baseline_f1_mean']:.2f} augmented "
                     f"{small['augmented_f1_mean']:.2f} (margin {margin_small:+.2f}); "
                     f"500: margin {margin_large:+.2f}; runtime {total / 60:.1f} min (< 30)")
    assert passed


def test_criterion_09_determinism(work_dir):
    cfg = desk_config(work_dir, **{"seeds": "1,2", "gen.max_updates": "200",
                                   "tagger.max_epochs": "5"})
    corpora = make_synthetic(SYNTH_SEED, 40, 40)
    outputs = []
    for name in ("first", "second"):
        out = work_dir / f"determinism-{name}"
        run_pipeline(cfg, corpora=corpora, output_dir=out)
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    checked = [n for n in outputs[0] if n.endswith((".json", ".txt", ".ckpt"))]
    same = outputs[0] == outputs[1]
    passed = same and "report.json" in checked and "generator.ckpt" in checked
    record_criterion(9, passed, f"{len(outputs[0])} artifacts byte-identical across two runs "
                                f"({len(checked)} reports/checkpoints)" if same else
                                "artifacts differ between identical runs")
    assert passed


def test_criterion_10_roundtrips(tmp_path):
    gen_cfg = GenConfig(hidden_size=16, embed_size=8, seed=4)
    pairs = [TranslationPair("where is <poi_type> #1".split(), "show me <poi_type>".split())]
    vocab = build_vocab(pairs)
    model = init_params(gen_cfg, vocab)
    save_checkpoint(model, vocab, gen_cfg, tmp_path / "gen.ckpt")
    loaded, _, _ = load_checkpoint(tmp_path / "gen.ckpt")
    gen_exact = all(torch.equal(a, b) for a, b in
                    zip(model.state_dict().values(), loaded.state_dict().values()))

    train, dev, test = make_synthetic(SYNTH_SEED, 500, N_TEST)
    words, tags = build_vocabs(train, dev)
    tagger = init_tagger(TaggerConfig(seed=2), words, tags)
    save_tagger(tagger, tmp_path / "tagger.ckpt")
    reloaded = load_tagger(tmp_path / "tagger.ckpt")
    tag_exact = all(torch.equal(a, b) for a, b in
                    zip(tagger.model.state_dict().values(), reloaded.model.state_dict().values()))

    corpus = list(train) + list(dev) + list(test)
    failures = 0
    for seed, u in enumerate(corpus):
        delex, _ = delexicalise(u)
        failures += realise(delex, build_slot_value_map([u]), random.Random(seed)) != u
    passed = gen_exact and tag_exact and failures == 0
    record_criterion(10, passed, f"checkpoints bit-exact: generator {gen_exact}, tagger "
                                 f"{tag_exact}; delex/realise exact on "
                                 f"{len(corpus) - failures}/{len(corpus)} utterances")
    assert passed
