"""Delexicalisation and context-keyed surface realisation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .corpus import OUTSIDE_TAG, SlotSegment, Utterance, bio_tags, segments
from .distance import edit_distance
from .errors import ParseError, RealisationError

LEFT_CONTEXT = 2
RIGHT_CONTEXT = 3

DelexTokens = tuple[str, ...]


def placeholder(slot_type: str) -> str:
    return f"<{slot_type}>"


def is_placeholder(token: str) -> bool:
    return len(token) > 2 and token[0] == "<" and token[-1] == ">"


def placeholder_type(token: str) -> str:
    return token[1:-1]


def placeholder_types(delex: Sequence[str]) -> list[str]:
    return [placeholder_type(t) for t in delex if is_placeholder(t)]


def delexicalise(u: Utterance) -> tuple[DelexTokens, list[tuple[int, SlotSegment]]]:
    """Collapse every slot segment of ``u`` into a single ``<type>`` token.

    Returns the delexicalised tokens and, for each placeholder, its position
    in the output alongside the segment it replaced.
    """
    out: list[str] = []
    alignment = []
    pos = 0
    for seg in segments(u):
        out.extend(u.tokens[pos:seg.start])
        alignment.append((len(out), seg))
        out.append(placeholder(seg.slot_type))
        pos = seg.end
    out.extend(u.tokens[pos:])
    return tuple(out), alignment


class ContextKey(NamedTuple):
    slot_type: str
    left: tuple[str, ...]
    right: tuple[str, ...]

    def serialize(self) -> str:
        return "\t".join((self.slot_type, " ".join(self.left), " ".join(self.right)))


def context_key(delex: Sequence[str], index: int,
                left: int = LEFT_CONTEXT, right: int = RIGHT_CONTEXT) -> ContextKey:
    return ContextKey(
        placeholder_type(delex[index]),
        tuple(delex[max(0, index - left):index]),
        tuple(delex[index + 1:index + 1 + right]),
    )


@dataclass
class SlotValueMap:
    entries: dict[ContextKey, tuple[tuple[str, ...], ...]] = field(default_factory=dict)
    left: int = LEFT_CONTEXT
    right: int = RIGHT_CONTEXT

    def __post_init__(self):
        self.by_type: dict[str, list[ContextKey]] = {}
        for key in sorted(self.entries, key=ContextKey.serialize):
            self.by_type.setdefault(key.slot_type, []).append(key)

    def __len__(self):
        return len(self.entries)

    def values(self, key: ContextKey) -> tuple[tuple[str, ...], ...]:
        """Values for ``key``, falling back to the nearest context of the same type."""
        found = self.entries.get(key)
        if found is not None:
            return found
        candidates = self.by_type.get(key.slot_type)
        if not candidates:
            raise RealisationError(key.slot_type)
        ctx = key.left + key.right
        # by_type is already sorted by serialized key, so min() keeps the
        # lexicographically first key among equally distant ones
        best = min(candidates, key=lambda k: edit_distance(ctx, k.left + k.right))
        return self.entries[best]

    def to_text(self) -> str:
        lines = sorted(f"{key.serialize()}\t{' '.join(value)}"
                       for key, vals in self.entries.items() for value in vals)
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_text(cls, text: str, left: int = LEFT_CONTEXT,
                  right: int = RIGHT_CONTEXT) -> "SlotValueMap":
        collected: dict[ContextKey, set] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4 or not cols[0] or not cols[3].split():
                raise ParseError(f"malformed slot value line {line!r}", lineno)
            key = ContextKey(cols[0], tuple(cols[1].split()), tuple(cols[2].split()))
            collected.setdefault(key, set()).add(tuple(cols[3].split()))
        return cls({k: tuple(sorted(v)) for k, v in collected.items()}, left, right)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path: str | Path) -> "SlotValueMap":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def build_slot_value_map(corpus: Iterable[Utterance], left: int = LEFT_CONTEXT,
                         right: int = RIGHT_CONTEXT) -> SlotValueMap:
    collected: dict[ContextKey, set] = {}
    for u in corpus:
        delex, alignment = delexicalise(u)
        for index, seg in alignment:
            key = context_key(delex, index, left, right)
            collected.setdefault(key, set()).add(seg.value)
    return SlotValueMap({k: tuple(sorted(v)) for k, v in collected.items()}, left, right)


def realise(delex: Sequence[str], m: SlotValueMap, rng: random.Random) -> Utterance:
    """Fill each placeholder with a slot value picked uniformly for its context."""
    tokens: list[str] = []
    tags = []
    for i, tok in enumerate(delex):
        if not is_placeholder(tok):
            tokens.append(tok)
            tags.append(OUTSIDE_TAG)
            continue
        key = context_key(delex, i, m.left, m.right)
        options = m.values(key)
        value = options[rng.randrange(len(options))] if len(options) > 1 else options[0]
        tokens.extend(value)
        tags.extend(bio_tags(key.slot_type, len(value)))
    return Utterance(tuple(tokens), tuple(tags))
