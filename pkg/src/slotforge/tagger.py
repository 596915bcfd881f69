"""BiLSTM slot tagger with per-token softmax output."""

from __future__ import annotations

import copy
import logging
import random
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .checkpoint import read_container, write_container
from .corpus import SlotTag, Utterance
from .errors import CheckpointError, ConfigError, TrainingError
from .evaluation import chunk_prf
from .vocab import PAD_ID, Vocab

log = logging.getLogger(__name__)

MAGIC = b"SFTG"
INIT_RANGE = 0.1


@dataclass
class TaggerConfig:
    embed_size: int = 100
    hidden_size: int = 100
    dropout: float = 0.1
    batch_size: int = 16
    learning_rate: float = 0.001
    max_epochs: int = 100
    patience: int = 10
    seed: int = 1
    pretrained_vectors_path: str | None = None

    def __post_init__(self):
        for name in ("embed_size", "hidden_size", "batch_size", "max_epochs", "patience"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"tagger.{name} must be positive")
        if not 0 <= self.dropout < 1:
            raise ConfigError("tagger.dropout must lie in [0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "TaggerConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


class BiLSTMTagger(nn.Module):
    def __init__(self, config: TaggerConfig, n_words: int, n_tags: int):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(n_words, config.embed_size)
        self.lstm = nn.LSTM(config.embed_size, config.hidden_size, batch_first=True,
                            bidirectional=True)
        self.drop = nn.Dropout(config.dropout)
        self.out = nn.Linear(2 * config.hidden_size, n_tags)

    def forward(self, words: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        """Per-token tag log-probabilities, shape (B, T, n_tags)."""
        x = self.drop(self.embed(words))
        packed = pack_padded_sequence(x, lengths.cpu(), batch_first=True, enforce_sorted=False)
        h, _ = self.lstm(packed)
        h, _ = pad_packed_sequence(h, batch_first=True, total_length=words.size(1))
        return F.log_softmax(self.out(self.drop(h)), dim=-1)


@dataclass
class Tagger:
    """Trained parameters together with their vocabularies."""

    model: BiLSTMTagger
    words: Vocab
    tags: Vocab
    config: TaggerConfig

    def batch(self, sentences: Sequence[Sequence[str]]):
        ids = [self.words.encode(s) for s in sentences]
        width = max(len(s) for s in ids)
        words = torch.tensor([s + [PAD_ID] * (width - len(s)) for s in ids], dtype=torch.long)
        lengths = torch.tensor([len(s) for s in ids], dtype=torch.long)
        return words, lengths

    def loss(self, utterances: Sequence[Utterance]) -> torch.Tensor:
        words, lengths = self.batch([u.tokens for u in utterances])
        gold = torch.full(words.shape, -100, dtype=torch.long)
        for i, u in enumerate(utterances):
            gold[i, :len(u)] = torch.tensor([self.tags.stoi[str(t)] for t in u.tags])
        logp = self.model(words, lengths)
        return F.nll_loss(logp.reshape(-1, logp.size(-1)), gold.reshape(-1), ignore_index=-100)

    @torch.no_grad()
    def tag_distributions(self, sentences: Sequence[Sequence[str]]) -> list[torch.Tensor]:
        self.model.eval()
        words, lengths = self.batch(sentences)
        probs = self.model(words, lengths).exp()
        return [probs[i, :n] for i, n in enumerate(lengths.tolist())]

    def predict_batch(self, sentences: Sequence[Sequence[str]]) -> list[list[SlotTag]]:
        return [[SlotTag.parse(self.tags.itos[j]) for j in dist.argmax(-1).tolist()]
                for dist in self.tag_distributions(sentences)]


def predict_tags(tagger: Tagger, tokens: Sequence[str]) -> list[SlotTag]:
    if not tokens:
        raise ValueError("cannot tag an empty token sequence")
    return tagger.predict_batch([tokens])[0]


def predict_corpus(tagger: Tagger, utterances: Sequence[Utterance],
                   batch_size: int = 256) -> list[list[SlotTag]]:
    out = []
    for i in range(0, len(utterances), batch_size):
        out.extend(tagger.predict_batch([u.tokens for u in utterances[i:i + batch_size]]))
    return out


def load_vectors(path: str | Path, dim: int) -> dict[str, list[float]]:
    """Read a text vector file: one word per line followed by its components."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.split()
            if not cols:
                continue
            if lineno == 1 and len(cols) == 2 and all(c.isdigit() for c in cols):
                continue  # word2vec-style "count dim" header
            if len(cols) - 1 != dim:
                raise ConfigError(
                    f"{path}:{lineno}: vector has {len(cols) - 1} components, "
                    f"tagger.embed_size is {dim}")
            vectors[cols[0]] = [float(c) for c in cols[1:]]
    return vectors


def save_vectors(vectors: dict[str, Sequence[float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(vectors):
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in vectors[word]) + "\n")


def init_tagger(config: TaggerConfig, words: Vocab, tags: Vocab, dtype=torch.float32,
                vectors: dict[str, list[float]] | None = None) -> Tagger:
    """Uniform init in [-0.1, 0.1]; rows of words with a pretrained vector copy it."""
    model = BiLSTMTagger(config, len(words), len(tags)).to(dtype)
    gen = torch.Generator().manual_seed(config.seed)
    if vectors is None and config.pretrained_vectors_path:
        vectors = load_vectors(config.pretrained_vectors_path, config.embed_size)
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.rand(p.shape, generator=gen, dtype=torch.float64)
                    .mul_(2 * INIT_RANGE).sub_(INIT_RANGE).to(dtype))
        for word, vec in (vectors or {}).items():
            if word in words:
                model.embed.weight[words.stoi[word]] = torch.tensor(vec, dtype=dtype)
    return Tagger(model, words, tags, config)


def build_vocabs(train: Sequence[Utterance], dev: Sequence[Utterance],
                 pretrained: Iterable[str] = ()) -> tuple[Vocab, Vocab]:
    """Word vocabulary over training tokens plus any pretrained words; tags over train and dev.

    Pretrained words are included so that test words never seen in training
    still get their pretrained embedding instead of unk.
    """
    words = Vocab(sorted({t for u in train for t in u.tokens} | set(pretrained)))
    tag_set = {str(t) for u in list(train) + list(dev) for t in u.tags} | {"O"}
    return words, Vocab(sorted(tag_set), reserved=())


def evaluate_tagger(tagger: Tagger, corpus: Sequence[Utterance]):
    return chunk_prf(corpus, predict_corpus(tagger, list(corpus)))


class BestEpoch:
    """Track the best dev score; ties keep the earlier epoch."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score = None
        self.best_epoch = 0
        self.state = None

    def update(self, epoch: int, score: float, state=None) -> bool:
        if self.best_score is None or score > self.best_score:
            self.best_score, self.best_epoch, self.state = score, epoch, state
            return True
        return False

    def exhausted(self, epoch: int) -> bool:
        return epoch - self.best_epoch >= self.patience


def train_tagger(train: Sequence[Utterance], dev: Sequence[Utterance],
                 config: TaggerConfig) -> tuple[Tagger, list[dict]]:
    train, dev = list(train), list(dev)
    if not train:
        raise ValueError("empty training corpus")
    vectors = (load_vectors(config.pretrained_vectors_path, config.embed_size)
               if config.pretrained_vectors_path else {})
    words, tags = build_vocabs(train, dev, vectors)
    torch.manual_seed(config.seed)  # dropout masks
    tagger = init_tagger(config, words, tags, vectors=vectors)
    model = tagger.model
    optim = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    rng = random.Random(config.seed)
    order = list(range(len(train)))
    tracker = BestEpoch(config.patience)
    history = []

    for epoch in range(1, config.max_epochs + 1):
        model.train()
        rng.shuffle(order)
        total = 0.0
        for b, start in enumerate(range(0, len(order), config.batch_size), start=1):
            batch = [train[i] for i in order[start:start + config.batch_size]]
            optim.zero_grad(set_to_none=True)
            loss = tagger.loss(batch)
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite tagger loss at epoch {epoch}, batch {b}")
            loss.backward()
            optim.step()
            total += loss.item() * len(batch)
        record = {"epoch": epoch, "train_loss": total / len(train)}
        if dev:
            f1 = evaluate_tagger(tagger, dev).f1
            record["dev_f1"] = f1
            tracker.update(epoch, f1, copy.deepcopy(model.state_dict()))
        history.append(record)
        log.debug("tagger epoch %d: %s", epoch, record)
        if dev and tracker.exhausted(epoch):
            break

    if tracker.state is not None:
        model.load_state_dict(tracker.state)
    model.eval()
    return tagger, history


def save_tagger(tagger: Tagger, path: str | Path) -> None:
    header = {"config": asdict(tagger.config), "words": tagger.words.itos,
              "tags": tagger.tags.itos}
    write_container(path, MAGIC, header, dict(tagger.model.state_dict()))


def load_tagger(path: str | Path) -> Tagger:
    header, tensors = read_container(path, MAGIC)
    try:
        config = TaggerConfig(**header["config"])
        words = Vocab.from_list(header["words"])
        tags = Vocab.from_list(header["tags"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid header ({exc})") from None
    model = BiLSTMTagger(config, len(words), len(tags))
    try:
        model.load_state_dict(tensors)
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: tensor mismatch ({exc})") from None
    model.eval()
    return Tagger(model, words, tags, config)
