"""Generator training loop and checkpoint I/O."""

from __future__ import annotations

import copy
import logging
import math
import random
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import torch

from ..checkpoint import read_container, write_container
from ..diversity import TranslationPair
from ..errors import CheckpointError, TrainingError
from ..vocab import Vocab
from .model import GenConfig, Seq2Seq, init_params, perplexity, token_nll

log = logging.getLogger(__name__)

MAGIC = b"SFGN"


class HalvingSchedule:
    """Halve the learning rate whenever dev perplexity fails to beat the best so far."""

    def __init__(self, lr: float, enabled: bool = True):
        self.lr = lr
        self.enabled = enabled
        self.best = math.inf

    def step(self, dev_ppl: float) -> bool:
        """Record one epoch's perplexity; returns True if this is a new best."""
        if dev_ppl < self.best:
            self.best = dev_ppl
            return True
        if self.enabled:
            self.lr /= 2
        return False


def build_vocab(pairs: Sequence[TranslationPair]) -> Vocab:
    return Vocab.build([p.source for p in pairs] + [p.target for p in pairs])


def train_generator(pairs: Sequence[TranslationPair], dev_pairs: Sequence[TranslationPair],
                    config: GenConfig, vocab: Vocab | None = None):
    """Train with Adam and per-epoch shuffling; returns (model, vocab, log).

    The returned parameters are those of the epoch with the lowest dev
    perplexity, or of the final epoch when ``dev_pairs`` is empty. A positive
    ``config.max_updates`` ends training after the epoch that reaches it.
    """
    if not pairs:
        raise ValueError("no training pairs")
    vocab = vocab or build_vocab(pairs)
    model = init_params(config, vocab)
    optim = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    schedule = HalvingSchedule(config.learning_rate, config.lr_halving)
    rng = random.Random(config.seed)
    order = list(range(len(pairs)))
    best_state = None
    history = []
    updates = 0

    for epoch in range(1, config.max_epochs + 1):
        model.train()
        rng.shuffle(order)
        total, count = 0.0, 0
        for b, start in enumerate(range(0, len(order), config.batch_size), start=1):
            batch = [pairs[i] for i in order[start:start + config.batch_size]]
            optim.zero_grad(set_to_none=True)
            nll, n = token_nll(model, batch, vocab, config)
            loss = nll / n
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
            optim.step()
            updates += 1
            total += nll.item()
            count += n
        record = {"epoch": epoch, "lr": schedule.lr, "train_ppl": math.exp(total / count)}
        model.eval()
        if dev_pairs:
            dev_ppl = perplexity(model, dev_pairs, vocab, config)
            record["dev_ppl"] = dev_ppl
            if schedule.step(dev_ppl):
                best_state = copy.deepcopy(model.state_dict())
            for group in optim.param_groups:
                group["lr"] = schedule.lr
        history.append(record)
        log.info("generator epoch %d: %s", epoch,
                 " ".join(f"{k}={v:.4g}" for k, v in record.items() if k != "epoch"))
        if config.max_updates and updates >= config.max_updates:
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return model, vocab, history


def save_checkpoint(model: Seq2Seq, vocab: Vocab, config: GenConfig, path: str | Path) -> None:
    header = {"config": asdict(config), "vocab": vocab.itos}
    write_container(path, MAGIC, header, dict(model.state_dict()))


def load_checkpoint(path: str | Path) -> tuple[Seq2Seq, Vocab, GenConfig]:
    header, tensors = read_container(path, MAGIC)
    try:
        config = GenConfig(**header["config"])
        vocab = Vocab.from_list(header["vocab"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid header ({exc})") from None
    model = Seq2Seq(config, len(vocab))
    try:
        model.load_state_dict(tensors)
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: tensor mismatch ({exc})") from None
    model.eval()
    return model, vocab, config
