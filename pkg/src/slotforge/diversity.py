"""Diversity scores, rank assignment and seq2seq training-pair construction."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import SemanticFrame, Utterance, cluster_by_frame
from .delex import delexicalise
from .distance import edit_distance
from .errors import DomainError, ParseError

_RANK_RE = re.compile(r"^#[1-9][0-9]*$")

__all__ = [
    "RankedAlternative", "TranslationPair", "edit_distance", "ldp", "diversity_score",
    "rank_alternatives", "build_training_pairs", "augmentation_ranks", "rank_token",
    "is_rank_token", "save_pairs", "load_pairs", "pairs_to_text", "pairs_from_text",
]


def rank_token(k: int) -> str:
    return f"#{k}"


def is_rank_token(token: str) -> bool:
    return bool(_RANK_RE.match(token))


def ldp(u: Sequence, u_prime: Sequence) -> float:
    """Length difference penalty, normalised by the length of ``u``."""
    if len(u) == 0:
        raise DomainError("length difference penalty is undefined for an empty source")
    return math.exp(-abs(len(u) - len(u_prime)) / len(u))


def diversity_score(u: Sequence, u_prime: Sequence, char_level: bool = False) -> float:
    if char_level:
        dist = edit_distance(" ".join(u), " ".join(u_prime))
    else:
        dist = edit_distance(u, u_prime)
    return dist * ldp(u, u_prime)


@dataclass(frozen=True)
class RankedAlternative:
    target: tuple[str, ...]
    score: float
    rank: int


@dataclass(frozen=True)
class TranslationPair:
    source: tuple[str, ...]
    target: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        if not self.source or not is_rank_token(self.source[-1]):
            raise ValueError("source must end with a rank token")
        if any(is_rank_token(t) for t in self.source[:-1]):
            raise ValueError("source must contain exactly one rank token")
        if any(is_rank_token(t) for t in self.target):
            raise ValueError("target must not contain a rank token")

    @property
    def rank(self) -> int:
        return int(self.source[-1][1:])


def rank_alternatives(u: Sequence[str], cluster: Sequence[Sequence[str]],
                      char_level: bool = False) -> list[RankedAlternative]:
    """Rank ``cluster`` by diversity against ``u``; rank 1 is the most diverse.

    Ties fall back to the target tokens, then to cluster position.
    """
    scored = [(diversity_score(u, alt, char_level), tuple(alt), i)
              for i, alt in enumerate(cluster)]
    scored.sort(key=lambda s: (-s[0], s[1], s[2]))
    return [RankedAlternative(alt, score, rank)
            for rank, (score, alt, _) in enumerate(scored, start=1)]


def build_training_pairs(corpus: Iterable[Utterance], filter_half: bool = True,
                         use_ranks: bool = True, char_level: bool = False,
                         dedup: bool = True) -> list[TranslationPair]:
    """Build rank-tagged translation pairs between same-frame utterances.

    With ``filter_half`` only ranks ``1..ceil((K-1)/2)`` of each utterance's
    alternatives are kept, where ``K`` is the cluster size. With
    ``use_ranks=False`` every source carries ``#1``.
    """
    utterances = list(corpus)
    delex = [delexicalise(u)[0] for u in utterances]
    pairs = []
    for members in cluster_by_frame(utterances).values():
        k = len(members)
        if k < 2:
            continue
        keep = math.ceil((k - 1) / 2) if filter_half else k - 1
        for i in members:
            others = [delex[j] for j in members if j != i]
            for alt in rank_alternatives(delex[i], others, char_level)[:keep]:
                token = rank_token(alt.rank if use_ranks else 1)
                pairs.append(TranslationPair(delex[i] + (token,), alt.target))
    if dedup:
        pairs = list(dict.fromkeys(pairs))
    return pairs


def augmentation_ranks(frame: SemanticFrame,
                       clusters: Mapping[SemanticFrame, Sequence[int]]) -> list[int]:
    members = clusters.get(frame)
    if not members:
        return []
    return list(range(1, max(1, len(members) // 2) + 1))


def pairs_to_text(pairs: Iterable[TranslationPair]) -> str:
    return "".join(f"{' '.join(p.source)}\t{' '.join(p.target)}\n" for p in pairs)


def pairs_from_text(text: str) -> list[TranslationPair]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError(f"expected two tab-separated columns, got {line!r}", lineno)
        try:
            pairs.append(TranslationPair(cols[0].split(), cols[1].split()))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return pairs


def save_pairs(pairs: Iterable[TranslationPair], path: str | Path) -> None:
    Path(path).write_text(pairs_to_text(pairs), encoding="utf-8", newline="\n")


def load_pairs(path: str | Path) -> list[TranslationPair]:
    return pairs_from_text(Path(path).read_text(encoding="utf-8"))
