"""BIO-tagged slot-filling corpora: types, CONLL I/O and frame clustering."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import ParseError

OUTSIDE = "O"
BEGIN = "B"
INSIDE = "I"

_TAG_RE = re.compile(r"^([BI])-(\S+)$")


class SlotTag(NamedTuple):
    kind: str
    slot_type: str | None = None

    @classmethod
    def parse(cls, text: str) -> "SlotTag":
        if text == OUTSIDE:
            return OUTSIDE_TAG
        m = _TAG_RE.match(text)
        if m is None:
            raise ValueError(f"malformed tag {text!r}")
        return cls(m.group(1), m.group(2))

    @classmethod
    def begin(cls, slot_type: str) -> "SlotTag":
        return cls(BEGIN, slot_type)

    @classmethod
    def inside(cls, slot_type: str) -> "SlotTag":
        return cls(INSIDE, slot_type)

    def __str__(self) -> str:
        if self.kind == OUTSIDE:
            return OUTSIDE
        return f"{self.kind}-{self.slot_type}"


OUTSIDE_TAG = SlotTag(OUTSIDE, None)


def as_tag(tag: SlotTag | str) -> SlotTag:
    return tag if isinstance(tag, SlotTag) else SlotTag.parse(tag)


def bio_tags(slot_type: str, length: int) -> list[SlotTag]:
    """Tags for a slot value of ``length`` tokens: one B followed by I's."""
    return [SlotTag.begin(slot_type)] + [SlotTag.inside(slot_type)] * (length - 1)


@dataclass(frozen=True)
class Utterance:
    tokens: tuple[str, ...]
    tags: tuple[SlotTag, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(as_tag(t) for t in self.tags))
        if len(self.tokens) == 0:
            raise ValueError("utterance must contain at least one token")
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags")
        for tok in self.tokens:
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"invalid token {tok!r}")
        for tag in self.tags:
            if tag.kind != OUTSIDE and (not tag.slot_type
                                        or any(c.isspace() for c in tag.slot_type)):
                raise ValueError(f"invalid slot type in tag {tag!r}")

    def __len__(self):
        return len(self.tokens)

    @property
    def tag_strings(self) -> list[str]:
        return [str(t) for t in self.tags]


class SlotSegment(NamedTuple):
    slot_type: str
    start: int
    end: int
    value: tuple[str, ...]


def segments(u: Utterance) -> list[SlotSegment]:
    """Maximal slot segments; an I-x that does not continue an x chunk opens one."""
    out: list[SlotSegment] = []
    start = None
    cur = None
    for i, tag in enumerate(u.tags):
        continues = tag.kind == INSIDE and tag.slot_type == cur
        if cur is not None and not continues:
            out.append(SlotSegment(cur, start, i, u.tokens[start:i]))
            cur = None
        if tag.kind != OUTSIDE and not continues:
            cur, start = tag.slot_type, i
    if cur is not None:
        out.append(SlotSegment(cur, start, len(u), u.tokens[start:]))
    return out


@dataclass(frozen=True)
class SemanticFrame:
    """Order-insensitive multiset of slot types."""

    items: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_types(cls, slot_types: Iterable[str]) -> "SemanticFrame":
        return cls(tuple(sorted(Counter(slot_types).items())))

    @property
    def counts(self) -> dict[str, int]:
        return dict(self.items)

    def __len__(self):
        return sum(n for _, n in self.items)

    def __str__(self):
        if not self.items:
            return "{}"
        return "{" + ", ".join(f"{t}:{n}" for t, n in self.items) + "}"


def frame_of(u: Utterance) -> SemanticFrame:
    return SemanticFrame.from_types(seg.slot_type for seg in segments(u))


@dataclass
class Corpus:
    utterances: list[Utterance] = field(default_factory=list)
    provenance: str = ""

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, i):
        return self.utterances[i]


def parse_conll(text: str, provenance: str = "<string>") -> Corpus:
    """Parse blank-line separated blocks of ``token ... tag`` lines."""
    utterances = []
    tokens: list[str] = []
    tags: list[SlotTag] = []
    block_start = 0

    def flush():
        if tokens:
            try:
                utterances.append(Utterance(tuple(tokens), tuple(tags)))
            except ValueError as exc:
                raise ParseError(str(exc), block_start) from None
            tokens.clear()
            tags.clear()

    for lineno, line in enumerate(text.splitlines(), start=1):
        cols = line.split()
        if not cols:
            flush()
            continue
        if not tokens:
            block_start = lineno
        if len(cols) < 2:
            raise ParseError(f"expected token and tag columns, got {line!r}", lineno)
        try:
            tag = SlotTag.parse(cols[-1])
        except ValueError:
            raise ParseError(f"malformed tag {cols[-1]!r}", lineno) from None
        tokens.append(cols[0])
        tags.append(tag)
    flush()
    if not utterances:
        raise ParseError("empty corpus")
    return Corpus(utterances, provenance)


def write_conll(corpus: Corpus | Sequence[Utterance]) -> str:
    blocks = []
    for u in corpus:
        blocks.append("\n".join(f"{tok} {tag}" for tok, tag in zip(u.tokens, u.tags)))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def read_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    return parse_conll(path.read_text(encoding="utf-8"), str(path))


def save_corpus(corpus: Corpus | Sequence[Utterance], path: str | Path) -> None:
    Path(path).write_text(write_conll(corpus), encoding="utf-8", newline="\n")


def cluster_by_frame(c: Corpus | Sequence[Utterance]) -> dict[SemanticFrame, list[int]]:
    clusters: dict[SemanticFrame, list[int]] = {}
    for i, u in enumerate(c):
        clusters.setdefault(frame_of(u), []).append(i)
    return clusters
