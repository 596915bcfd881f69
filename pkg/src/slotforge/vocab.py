"""Token/id vocabularies with fixed reserved ids."""

from __future__ import annotations

from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = "@pad@", "@bos@", "@eos@", "@unk@"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED = (PAD, BOS, EOS, UNK)


class Vocab:
    """Bijective token/id mapping; ids 0-3 are pad, bos, eos and unk."""

    def __init__(self, tokens: Iterable[str] = (), reserved: Sequence[str] = RESERVED):
        self.itos: list[str] = list(reserved)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        for tok in tokens:
            self.add(tok)

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]], reserved: Sequence[str] = RESERVED) -> "Vocab":
        """Vocabulary over all tokens of ``sequences`` in sorted order."""
        return cls(sorted({t for seq in sequences for t in seq}), reserved)

    @classmethod
    def from_list(cls, itos: Sequence[str]) -> "Vocab":
        vocab = cls(reserved=())
        for tok in itos:
            if tok in vocab.stoi:
                raise ValueError(f"duplicate vocabulary entry {tok!r}")
            vocab.add(tok)
        return vocab

    def add(self, token: str) -> int:
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.itos == other.itos

    def id(self, token: str, unk: int = UNK_ID) -> int:
        return self.stoi.get(token, unk)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.itos[i] for i in ids]
