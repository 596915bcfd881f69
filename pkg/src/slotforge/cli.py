"""Command-line entry point: ``slotforge <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

from .config import PipelineConfig, load_config
from .corpus import cluster_by_frame, read_corpus, save_corpus, segments
from .delex import build_slot_value_map, delexicalise
from .diversity import build_training_pairs, load_pairs, save_pairs
from .errors import ConfigError, SlotforgeError
from .evaluation import metrics_dict, metrics_to_json, metrics_to_text
from .pipeline import (Generator, augment, merge_corpora, report_json, report_text,
                       run_pipeline, split_dev_pairs)
from .seq2seq import load_checkpoint, save_checkpoint, train_generator
from .synthetic import make_synthetic, synthetic_vectors
from .tagger import evaluate_tagger, load_tagger, save_tagger, save_vectors, train_tagger

log = logging.getLogger("slotforge")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
              "debug": logging.DEBUG}


def setup_logging() -> None:
    name = os.environ.get("SLOTFORGE_LOG", "warn").strip().lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"SLOTFORGE_LOG must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], format="%(asctime)s %(levelname)s %(message)s",
                        stream=sys.stderr)


def parse_setting(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_config(args) -> PipelineConfig:
    overrides = dict(args.set or [])
    if args.seed_list is not None:
        overrides["seeds"] = args.seed_list
    return load_config(args.config, overrides)


def write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_stats(args, config):
    corpus = read_corpus(args.corpus)
    delex = {delexicalise(u)[0] for u in corpus}
    slot_types = {s.slot_type for u in corpus for s in segments(u)}
    stats = {
        "utterances": len(corpus),
        "tokens": sum(len(u) for u in corpus),
        "slots": sum(len(segments(u)) for u in corpus),
        "slot_types": len(slot_types),
        "frames": len(cluster_by_frame(corpus)),
        "delex_forms": len(delex),
    }
    write_text(metrics_to_text(stats), args.output)


def cmd_pairs(args, config):
    aug = config.aug
    pairs = build_training_pairs(read_corpus(args.corpus), filter_half=not aug.no_filter,
                                 use_ranks=not aug.no_ranks, char_level=aug.char_level)
    save_pairs(pairs, args.output)
    log.info("wrote %d pairs to %s", len(pairs), args.output)


def cmd_train_gen(args, config):
    pairs = load_pairs(args.pairs)
    if args.dev_pairs:
        train, dev = pairs, load_pairs(args.dev_pairs)
    else:
        train, dev = split_dev_pairs(pairs, config.dev_fraction, config.gen.seed)
    model, vocab, history = train_generator(train, dev, config.gen)
    save_checkpoint(model, vocab, config.gen, args.output)
    for record in history:
        log.info("epoch %s", record)


def cmd_augment(args, config):
    train = list(read_corpus(args.train))
    value_map = build_slot_value_map(train)
    generator = None
    if not config.aug.no_seq2seq:
        path = args.generator or config.paths.generator
        if not path:
            raise ConfigError("augment needs --generator unless aug.no_seq2seq is set")
        generator = Generator(*load_checkpoint(path))
    new_utts, generated = augment(train, generator, value_map, config)
    save_corpus(merge_corpora(train, new_utts), args.output)
    if args.generations:
        lines = [f"{' '.join(src)}\t{' '.join(g)}\n" for src, gens in generated.items() for g in gens]
        Path(args.generations).write_text("".join(lines), encoding="utf-8")


def cmd_train_tagger(args, config):
    tcfg = config.tagger
    if args.seed is not None:
        tcfg.seed = args.seed
    if config.paths.vectors:
        tcfg.pretrained_vectors_path = config.paths.vectors
    dev = read_corpus(args.dev) if args.dev else []
    tagger, history = train_tagger(read_corpus(args.train), dev, tcfg)
    save_tagger(tagger, args.output)
    for record in history:
        log.info("epoch %s", record)


def cmd_evaluate(args, config):
    metrics = evaluate_tagger(load_tagger(args.tagger), read_corpus(args.test))
    fmt = metrics_to_json if args.json else metrics_to_text
    write_text(fmt(metrics_dict(metrics)), args.output)


def cmd_pipeline(args, config):
    if args.output:
        config.paths.output = args.output
    with tempfile.TemporaryDirectory() as tmp:
        corpora = None
        if args.synthetic:
            corpora = make_synthetic(args.synthetic_seed, args.synthetic, args.n_test)
            if not config.paths.vectors and not args.no_vectors:
                config.paths.vectors = str(Path(tmp) / "vectors.txt")
                save_vectors(synthetic_vectors(config.tagger.embed_size, args.synthetic_seed),
                             config.paths.vectors)
        report = run_pipeline(config, corpora=corpora)
    sys.stdout.write(report_json(report) if args.json else report_text(report))


def cmd_synth(args, config):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    train, dev, test = make_synthetic(args.seed, args.n_train, args.n_test, args.n_dev)
    for name, corpus in (("train", train), ("dev", dev), ("test", test)):
        save_corpus(corpus, out / f"{name}.conll")
    if args.vector_dim:
        save_vectors(synthetic_vectors(args.vector_dim, args.seed), out / "vectors.txt")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--set", action="append", type=parse_setting, metavar="KEY=VALUE",
                        help="override a config value, e.g. gen.beam_size=5 (repeatable)")
    common.add_argument("--seed-list", help="comma-separated tagger seeds, e.g. 1,2,3,4,5")

    parser = argparse.ArgumentParser(prog="slotforge",
                                     description="Diversity-ranked seq2seq augmentation for slot filling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pairs", parents=[common], help="build ranked translation pairs")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("train-gen", parents=[common], help="train the seq2seq generator")
    p.add_argument("pairs")
    p.add_argument("--dev-pairs", help="held-out pairs (default: split off dev_fraction)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train_gen)

    p = sub.add_parser("augment", parents=[common], help="generate and realise new utterances")
    p.add_argument("train")
    p.add_argument("--generator", help="generator checkpoint")
    p.add_argument("--generations", help="also write source/generation TSV here")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train-tagger", parents=[common], help="train one BiLSTM tagger")
    p.add_argument("train")
    p.add_argument("--dev")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train_tagger)

    p = sub.add_parser("evaluate", parents=[common], help="chunk F1 of a tagger on a corpus")
    p.add_argument("tagger")
    p.add_argument("test")
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="run augmentation and evaluation end to end")
    p.add_argument("-o", "--output", help="artifact directory (overrides paths.output)")
    p.add_argument("--synthetic", type=int, metavar="N_TRAIN",
                   help="use a synthetic corpus with N_TRAIN training utterances")
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--n-test", type=int, default=300)
    p.add_argument("--no-vectors", action="store_true",
                   help="with --synthetic, do not use the synthetic word vectors")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic train/dev/test corpus")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=120)
    p.add_argument("--n-test", type=int, default=300)
    p.add_argument("--n-dev", type=int)
    p.add_argument("--vector-dim", type=int, default=100,
                   help="dimension of the word vectors written alongside (0 to skip)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging()
        config = build_config(args)
        args.func(args, config)
    except SlotforgeError as exc:
        print(f"slotforge {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"slotforge {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
