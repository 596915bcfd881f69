"""Attentional LSTM encoder-decoder with input feeding."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from ..diversity import TranslationPair
from ..errors import ConfigError
from ..vocab import BOS_ID, EOS_ID, PAD_ID, Vocab

INIT_RANGE = 0.1


@dataclass
class GenConfig:
    num_layers: int = 2
    hidden_size: int = 64
    embed_size: int = 32
    max_source_len: int = 50
    beam_size: int = 10
    learning_rate: float = 0.001
    lr_halving: bool = True
    max_epochs: int = 30
    max_updates: int = 0
    clip_norm: float = 5.0
    batch_size: int = 32
    seed: int = 1
    attention: str = "general"
    bidirectional: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("num_layers", "hidden_size", "embed_size", "max_epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"gen.{name} must be positive")
        if self.max_updates < 0:
            raise ConfigError("gen.max_updates must be >= 0 (0 means no limit)")
        if self.beam_size < 1:
            raise ConfigError("gen.beam_size must be >= 1")
        if self.max_source_len < 2:
            raise ConfigError("gen.max_source_len must be >= 2")
        if self.attention not in ("general", "dot"):
            raise ConfigError(f"gen.attention must be 'general' or 'dot', got {self.attention!r}")
        if self.bidirectional and self.hidden_size % 2:
            raise ConfigError("gen.hidden_size must be even for a bidirectional encoder")

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


class Seq2Seq(nn.Module):
    def __init__(self, config: GenConfig, vocab_size: int):
        super().__init__()
        self.config = config
        H, E, L = config.hidden_size, config.embed_size, config.num_layers
        self.src_embed = nn.Embedding(vocab_size, E)
        self.tgt_embed = nn.Embedding(vocab_size, E)
        enc_hidden = H // 2 if config.bidirectional else H
        self.encoder = nn.LSTM(E, enc_hidden, L, batch_first=True,
                               bidirectional=config.bidirectional)
        self.decoder = nn.LSTM(E + H, H, L, batch_first=True)
        if config.attention == "general":
            self.attn = nn.Linear(H, H, bias=False)
        self.combine = nn.Linear(2 * H, H, bias=False)
        self.out = nn.Linear(H, vocab_size)

    @property
    def vocab_size(self):
        return self.out.out_features

    def encode(self, src: torch.Tensor, lengths: torch.Tensor):
        """Returns encoder states, attention keys, source mask and the initial decoder state."""
        emb = self.src_embed(src)
        packed = pack_padded_sequence(emb, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, (h, c) = self.encoder(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=src.size(1))
        if self.config.bidirectional:
            L, B = self.config.num_layers, src.size(0)
            h = h.view(L, 2, B, -1).transpose(1, 2).reshape(L, B, -1)
            c = c.view(L, 2, B, -1).transpose(1, 2).reshape(L, B, -1)
        keys = self.attn(out) if self.config.attention == "general" else out
        mask = src != PAD_ID
        return out, keys, mask, (h, c)

    def initial_feed(self, batch: int, like: torch.Tensor) -> torch.Tensor:
        return like.new_zeros(batch, self.config.hidden_size)

    def step(self, prev: torch.Tensor, feed: torch.Tensor, state, memory, keys, mask):
        """One decoder step; returns (log-probs, attentional state, new state, attention)."""
        x = torch.cat([self.tgt_embed(prev), feed], dim=-1).unsqueeze(1)
        out, state = self.decoder(x, state)
        h = out.squeeze(1)
        scores = torch.bmm(keys, h.unsqueeze(2)).squeeze(2)
        scores = scores.masked_fill(~mask, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        context = torch.bmm(attn.unsqueeze(1), memory).squeeze(1)
        feed = torch.tanh(self.combine(torch.cat([context, h], dim=-1)))
        return F.log_softmax(self.out(feed), dim=-1), feed, state, attn

    def forward(self, src, lengths, tgt_in):
        """Teacher-forced log-probs (B, T, V) and attention (B, T, S)."""
        memory, keys, mask, state = self.encode(src, lengths)
        feed = self.initial_feed(src.size(0), memory)
        logps, attns = [], []
        for t in range(tgt_in.size(1)):
            logp, feed, state, attn = self.step(tgt_in[:, t], feed, state, memory, keys, mask)
            logps.append(logp)
            attns.append(attn)
        return torch.stack(logps, 1), torch.stack(attns, 1)


def init_params(config: GenConfig, vocab: Vocab, dtype=torch.float32) -> Seq2Seq:
    """Fresh model with every weight drawn from U(-0.1, 0.1) under ``config.seed``."""
    model = Seq2Seq(config, len(vocab)).to(dtype)
    gen = torch.Generator().manual_seed(config.seed)
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.rand(p.shape, generator=gen, dtype=torch.float64)
                    .mul_(2 * INIT_RANGE).sub_(INIT_RANGE).to(dtype))
    return model


def truncate_source(source: Sequence[str], max_len: int) -> list[str]:
    """Cut a source to ``max_len`` tokens, always keeping its final rank token."""
    source = list(source)
    if len(source) > max_len:
        source = source[:max_len - 1] + source[-1:]
    return source


def source_ids(source: Sequence[str], vocab: Vocab, max_len: int) -> list[int]:
    return vocab.encode(truncate_source(source, max_len))


def target_ids(target: Sequence[str], vocab: Vocab, max_len: int) -> list[int]:
    return vocab.encode(list(target)[:max_len])


def _pad(seqs: list[list[int]]) -> torch.Tensor:
    width = max(len(s) for s in seqs)
    return torch.tensor([s + [PAD_ID] * (width - len(s)) for s in seqs], dtype=torch.long)


def make_batch(pairs: Sequence[TranslationPair], vocab: Vocab, config: GenConfig):
    srcs = [source_ids(p.source, vocab, config.max_source_len) for p in pairs]
    tgts = [target_ids(p.target, vocab, config.max_source_len) for p in pairs]
    src = _pad(srcs)
    lengths = torch.tensor([len(s) for s in srcs], dtype=torch.long)
    tgt_in = _pad([[BOS_ID] + t for t in tgts])
    tgt_out = _pad([t + [EOS_ID] for t in tgts])
    return src, lengths, tgt_in, tgt_out


def token_nll(model: Seq2Seq, pairs: Sequence[TranslationPair], vocab: Vocab,
              config: GenConfig) -> tuple[torch.Tensor, int]:
    """Summed negative log-likelihood of gold targets and the number of scored tokens."""
    src, lengths, tgt_in, tgt_out = make_batch(pairs, vocab, config)
    logp, _ = model(src, lengths, tgt_in)
    nll = F.nll_loss(logp.reshape(-1, logp.size(-1)), tgt_out.reshape(-1),
                     ignore_index=PAD_ID, reduction="sum")
    return nll, int((tgt_out != PAD_ID).sum())


def forward_loss(model: Seq2Seq, batch: Sequence[TranslationPair], vocab: Vocab,
                 config: GenConfig) -> tuple[float, dict[str, torch.Tensor]]:
    """Mean token cross-entropy of ``batch`` and its gradient for every parameter."""
    if not batch:
        raise ValueError("empty batch")
    model.zero_grad(set_to_none=True)
    nll, n = token_nll(model, batch, vocab, config)
    loss = nll / n
    loss.backward()
    grads = {name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
             for name, p in model.named_parameters()}
    return loss.item(), grads


def perplexity_from_log_probs(log_probs: Sequence[float]) -> float:
    return math.exp(-sum(log_probs) / len(log_probs))


@torch.no_grad()
def perplexity(model: Seq2Seq, pairs: Sequence[TranslationPair], vocab: Vocab,
               config: GenConfig, batch_size: int = 256) -> float:
    if not pairs:
        raise ValueError("perplexity needs at least one pair")
    total, count = 0.0, 0
    for i in range(0, len(pairs), batch_size):
        nll, n = token_nll(model, pairs[i:i + batch_size], vocab, config)
        total += nll.item()
        count += n
    return math.exp(total / count)


@torch.no_grad()
def sequence_log_prob(model: Seq2Seq, source: Sequence[str], target_ids_: Sequence[int],
                      vocab: Vocab, config: GenConfig) -> float:
    """Teacher-forced log-probability of an explicit output id sequence."""
    src = torch.tensor([source_ids(source, vocab, config.max_source_len)])
    lengths = torch.tensor([src.size(1)])
    tgt_in = torch.tensor([[BOS_ID] + list(target_ids_[:-1])])
    logp, _ = model(src, lengths, tgt_in)
    idx = torch.tensor(list(target_ids_)).view(1, -1, 1)
    return logp.gather(2, idx).sum().item()
