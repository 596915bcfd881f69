"""End-to-end augmentation and evaluation pipeline."""

from __future__ import annotations

import contextlib
import dataclasses
import json
import logging
import random
import shutil
import statistics
from pathlib import Path
from typing import Sequence

import torch

from .config import PipelineConfig
from .corpus import Corpus, Utterance, cluster_by_frame, frame_of, read_corpus, save_corpus
from .delex import SlotValueMap, build_slot_value_map, delexicalise, placeholder_types, realise
from .corpus import SemanticFrame
from .diversity import (TranslationPair, augmentation_ranks, build_training_pairs, rank_token,
                        save_pairs)
from .errors import PipelineError, SlotforgeError
from .evaluation import AugmentationStats, augmentation_stats, metrics_to_text
from .seq2seq import (beam_search_batch, load_checkpoint, save_checkpoint, train_generator,
                      truncate_source, unk_replace)
from .tagger import evaluate_tagger, save_tagger, train_tagger

log = logging.getLogger(__name__)


@contextlib.contextmanager
def stage(name: str):
    log.info("stage: %s", name)
    try:
        yield
    except PipelineError:
        raise
    except (SlotforgeError, ValueError, OSError, RuntimeError) as exc:
        raise PipelineError(name, exc) from exc


def split_dev_pairs(pairs: Sequence[TranslationPair], fraction: float,
                    seed: int) -> tuple[list[TranslationPair], list[TranslationPair]]:
    """Hold out ``fraction`` of the pairs (at least one when there are two or more)."""
    pairs = list(pairs)
    n_dev = int(round(len(pairs) * fraction))
    if fraction > 0 and len(pairs) >= 2:
        n_dev = max(1, n_dev)
    if n_dev == 0:
        return pairs, []
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    dev_idx = set(order[:n_dev])
    train = [p for i, p in enumerate(pairs) if i not in dev_idx]
    dev = [p for i, p in enumerate(pairs) if i in dev_idx]
    return train, dev


def merge_corpora(original: Sequence[Utterance], extra: Sequence[Utterance]) -> list[Utterance]:
    return list(dict.fromkeys(list(original) + list(extra)))


class Generator:
    """Memoised rank-conditioned decoding on top of a trained model."""

    def __init__(self, model, vocab, config, batch_size: int = 64):
        self.model, self.vocab, self.config = model, vocab, config
        self.batch_size = batch_size
        self._cache: dict[tuple, list[tuple[str, ...]]] = {}

    def prefetch(self, requests, top_m: int) -> None:
        """Decode every uncached (delex, rank) request, several sources per batch."""
        todo = sorted({(tuple(d), r) for d, r in requests} - {k[:2] for k in self._cache},
                      key=lambda k: (len(k[0]), k))
        for i in range(0, len(todo), self.batch_size):
            chunk = todo[i:i + self.batch_size]
            sources = [self._source(d, r) for d, r in chunk]
            results = beam_search_batch(self.model, sources, self.vocab, self.config)
            for (d, r), source, hyps in zip(chunk, sources, results):
                self._cache[(d, r, top_m)] = self._outputs(hyps, source, top_m)

    def generate(self, delex: Sequence[str], rank: int, top_m: int) -> list[tuple[str, ...]]:
        key = (tuple(delex), rank, top_m)
        if key not in self._cache:
            source = self._source(delex, rank)
            hyps = beam_search_batch(self.model, [source], self.vocab, self.config)[0]
            self._cache[key] = self._outputs(hyps, source, top_m)
        return self._cache[key]

    def _source(self, delex, rank):
        return truncate_source(list(delex) + [rank_token(rank)], self.config.max_source_len)

    @staticmethod
    def _outputs(hyps, source, top_m):
        outs = []
        for hyp in hyps[:top_m]:
            tokens = tuple(unk_replace(hyp, source))
            if tokens:
                outs.append(tokens)
        return outs


def augment(train: Sequence[Utterance], generator: Generator | None, value_map: SlotValueMap,
            config: PipelineConfig):
    """Generate and realise alternatives for every training utterance.

    Returns (augmented utterances, generations keyed by source delex form).
    """
    aug = config.aug
    rng = random.Random(aug.seed)
    clusters = cluster_by_frame(train)
    generated: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
    new_utts = []

    def requests(u):
        delex = delexicalise(u)[0]
        return [(delex, 1 if aug.no_ranks else rank)
                for rank in augmentation_ranks(frame_of(u), clusters)]

    if generator is not None:
        generator.prefetch([r for u in train for r in requests(u)], aug.top_m)
    for u in train:
        delex, _ = delexicalise(u)
        frame = frame_of(u)
        if generator is None:
            outs = [delex]
        else:
            outs = []
            for src, rank in requests(u):
                outs.extend(generator.generate(src, rank, aug.top_m))
        bucket = generated.setdefault(delex, [])
        for out in outs:
            if aug.enforce_frame_match and SemanticFrame.from_types(placeholder_types(out)) != frame:
                continue
            if out not in bucket:
                bucket.append(out)
            new_utts.append(realise(out, value_map, rng))
    return new_utts, generated


def _mean(xs):
    return statistics.fmean(xs) if xs else 0.0


def _train_eval(train, dev, test, config: PipelineConfig, seed: int, ckpt: Path | None):
    grid = config.dropout_grid or (config.tagger.dropout,)
    best = None
    for dropout in grid:
        tcfg = dataclasses.replace(config.tagger, seed=seed, dropout=dropout,
                                   pretrained_vectors_path=(config.paths.vectors
                                                            or config.tagger.pretrained_vectors_path))
        tagger, history = train_tagger(train, dev, tcfg)
        dev_f1 = evaluate_tagger(tagger, dev).f1 if dev else 0.0
        if best is None or dev_f1 > best[0]:
            best = (dev_f1, dropout, tagger)
    dev_f1, dropout, tagger = best
    if ckpt is not None:
        save_tagger(tagger, ckpt)
    test_m = evaluate_tagger(tagger, test)
    return {"dev_f1": dev_f1, "dropout": dropout, "test_f1": test_m.f1,
            "test_precision": test_m.precision, "test_recall": test_m.recall}


def run_pipeline(config: PipelineConfig, corpora: tuple[Corpus, Corpus, Corpus] | None = None,
                 output_dir: str | Path | None = None) -> dict:
    """Run every stage and return the report dictionary.

    ``corpora`` overrides the train/dev/test paths. When an output directory
    is given, artifacts are staged and only moved into place on success.
    """
    out = Path(output_dir or config.paths.output) if (output_dir or config.paths.output) else None
    staging = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        staging = out / ".staging"
        shutil.rmtree(staging, ignore_errors=True)
        staging.mkdir()
    try:
        report = _run(config, corpora, staging)
    except BaseException:
        if staging is not None:
            shutil.rmtree(staging, ignore_errors=True)
        raise
    if staging is not None:
        for item in sorted(staging.iterdir()):
            target = out / item.name
            if target.exists():
                target.unlink()
            item.rename(target)
        staging.rmdir()
    return report


def _run(config: PipelineConfig, corpora, staging: Path | None) -> dict:
    def artifact(name):
        return staging / name if staging is not None else None

    torch.set_num_threads(1)
    with stage("config"):
        config.validate(require_paths=corpora is None)
    with stage("parse"):
        if corpora is None:
            train, dev, test = (read_corpus(getattr(config.paths, n)) for n in ("train", "dev", "test"))
        else:
            train, dev, test = corpora
        train, dev, test = list(train), list(dev), list(test)

    with stage("delexicalise"):
        clusters = cluster_by_frame(train)
        train_delex = [delexicalise(u)[0] for u in train]
        value_map = build_slot_value_map(train)
        if staging is not None:
            value_map.save(artifact("slot_values.tsv"))

    aug = config.aug
    generator = None
    pair_counts = {"pairs": 0, "train_pairs": 0, "dev_pairs": 0}
    gen_history = []
    if not aug.no_seq2seq:
        with stage("pairs"):
            pairs = build_training_pairs(train, filter_half=not aug.no_filter,
                                         use_ranks=not aug.no_ranks, char_level=aug.char_level)
            if not pairs:
                raise PipelineError("pairs", "no frame cluster has two or more utterances")
            gen_train, gen_dev = split_dev_pairs(pairs, config.dev_fraction, config.gen.seed)
            pair_counts = {"pairs": len(pairs), "train_pairs": len(gen_train),
                           "dev_pairs": len(gen_dev)}
            if staging is not None:
                save_pairs(pairs, artifact("pairs.tsv"))
        with stage("train-gen"):
            if config.paths.generator and Path(config.paths.generator).exists():
                model, vocab, gen_cfg = load_checkpoint(config.paths.generator)
            else:
                model, vocab, gen_history = train_generator(gen_train, gen_dev, config.gen)
                gen_cfg = config.gen
            if staging is not None:
                save_checkpoint(model, vocab, gen_cfg, artifact("generator.ckpt"))
            generator = Generator(model, vocab, gen_cfg)

    with stage("augment"):
        new_utts, generated = augment(train, generator, value_map, config)
        merged = merge_corpora(train, new_utts)
        stats = augmentation_stats(train_delex, generated)
        if staging is not None:
            save_corpus(merged, artifact("augmented.conll"))
            lines = [f"{' '.join(src)}\t{' '.join(g)}\n" for src, gens in generated.items() for g in gens]
            artifact("generations.tsv").write_text("".join(lines), encoding="utf-8")

    report = {
        "train_size": len(train),
        "augmented_size": len(merged),
        "clusters": len(clusters),
        **pair_counts,
        "num_new_delex": stats.num_new_delex,
        "avg_max_edit_distance": stats.avg_max_edit_distance,
        "generator_epochs": len(gen_history),
        "generator_best_dev_ppl": min((r["dev_ppl"] for r in gen_history if "dev_ppl" in r),
                                      default=None),
    }

    if not config.skip_tagger:
        with stage("train-tagger"):
            runs = []
            for seed in config.seeds:
                base = _train_eval(train, dev, test, config, seed,
                                   artifact(f"tagger-baseline-{seed}.ckpt"))
                augd = _train_eval(merged, dev, test, config, seed,
                                   artifact(f"tagger-augmented-{seed}.ckpt"))
                log.info("seed %d: baseline F1 %.2f, augmented F1 %.2f",
                         seed, base["test_f1"], augd["test_f1"])
                runs.append({"seed": seed, "baseline": base, "augmented": augd})
        report["runs"] = runs
        report["baseline_f1_mean"] = _mean([r["baseline"]["test_f1"] for r in runs])
        report["augmented_f1_mean"] = _mean([r["augmented"]["test_f1"] for r in runs])
        report["f1_margin"] = report["augmented_f1_mean"] - report["baseline_f1_mean"]

    if staging is not None:
        with stage("report"):
            artifact("report.json").write_text(report_json(report), encoding="utf-8")
            artifact("report.txt").write_text(report_text(report), encoding="utf-8")
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def report_text(report: dict) -> str:
    flat = {k: v for k, v in report.items() if k != "runs"}
    for run in report.get("runs", []):
        for arm in ("baseline", "augmented"):
            flat[f"{arm}_f1_seed{run['seed']}"] = run[arm]["test_f1"]
    return metrics_to_text(flat)


def stats_of(report: dict) -> AugmentationStats:
    return AugmentationStats(report["num_new_delex"], report["avg_max_edit_distance"])
