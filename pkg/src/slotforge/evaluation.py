"""conlleval-style chunk scoring and augmentation diagnostics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import SlotTag, Utterance, as_tag
from .distance import edit_distance


def _end_of_chunk(prev_kind, prev_type, kind, typ):
    if prev_kind in ("B", "I"):
        if kind in ("B", "O"):
            return True
        return prev_type != typ
    return False


def _start_of_chunk(prev_kind, prev_type, kind, typ):
    if kind == "B":
        return True
    if kind == "I":
        return prev_kind == "O" or prev_type != typ
    return False


def extract_chunks(tags: Sequence[SlotTag | str]) -> set[tuple[str, int, int]]:
    """Chunks as ``(slot_type, start, end)`` with end exclusive (IOB2, conlleval repair)."""
    chunks = set()
    prev_kind, prev_type = "O", None
    start = None
    for i, raw in enumerate(tags):
        tag = as_tag(raw)
        if _end_of_chunk(prev_kind, prev_type, tag.kind, tag.slot_type):
            chunks.add((prev_type, start, i))
        if _start_of_chunk(prev_kind, prev_type, tag.kind, tag.slot_type):
            start = i
        prev_kind, prev_type = tag.kind, tag.slot_type
    if prev_kind != "O":
        chunks.add((prev_type, start, len(tags)))
    return chunks


@dataclass(frozen=True)
class ChunkMetrics:
    precision: float
    recall: float
    f1: float
    gold: int
    predicted: int
    correct: int

    @classmethod
    def from_counts(cls, gold: int, predicted: int, correct: int) -> "ChunkMetrics":
        p = 100.0 * correct / predicted if predicted else 0.0
        r = 100.0 * correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, gold, predicted, correct)


def chunk_prf(gold: Iterable[Utterance], predicted: Sequence[Sequence[SlotTag | str]]) -> ChunkMetrics:
    n_gold = n_pred = n_correct = 0
    gold = list(gold)
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold utterances but {len(predicted)} predictions")
    for u, pred in zip(gold, predicted):
        if len(pred) != len(u.tags):
            raise ValueError(f"prediction length {len(pred)} != gold length {len(u.tags)}")
        g = extract_chunks(u.tags)
        p = extract_chunks(pred)
        n_gold += len(g)
        n_pred += len(p)
        n_correct += len(g & p)
    return ChunkMetrics.from_counts(n_gold, n_pred, n_correct)


@dataclass(frozen=True)
class AugmentationStats:
    num_new_delex: int
    avg_max_edit_distance: float


def augmentation_stats(train_delex: Iterable[Sequence[str]],
                       generated: Mapping[Sequence[str], Sequence[Sequence[str]]]) -> AugmentationStats:
    known = {tuple(d) for d in train_delex}
    distinct = {tuple(g) for gens in generated.values() for g in gens}
    maxima = [max(edit_distance(tuple(src), tuple(g)) for g in gens)
              for src, gens in generated.items() if gens]
    avg = sum(maxima) / len(maxima) if maxima else 0.0
    return AugmentationStats(len(distinct - known), avg)


def metrics_to_text(metrics: Mapping[str, object]) -> str:
    return "".join(f"{k}\t{v}\n" for k, v in metrics.items())


def metrics_to_json(metrics: Mapping[str, object]) -> str:
    return json.dumps(dict(metrics), indent=2, sort_keys=False) + "\n"


def metrics_dict(m: ChunkMetrics | AugmentationStats) -> dict:
    return asdict(m)
