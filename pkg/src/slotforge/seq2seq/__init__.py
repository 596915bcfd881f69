"""Rank-conditioned delexicalised paraphrase generator."""

from .beam import Hypothesis, beam_search, beam_search_batch, max_decode_len, unk_replace
from .model import (GenConfig, Seq2Seq, forward_loss, init_params, perplexity,
                    perplexity_from_log_probs, sequence_log_prob, truncate_source)
from .train import HalvingSchedule, build_vocab, load_checkpoint, save_checkpoint, train_generator

__all__ = [
    "GenConfig", "Seq2Seq", "Hypothesis", "HalvingSchedule", "init_params", "forward_loss",
    "perplexity", "perplexity_from_log_probs", "sequence_log_prob", "truncate_source",
    "beam_search", "beam_search_batch", "max_decode_len", "unk_replace", "build_vocab",
    "train_generator", "save_checkpoint", "load_checkpoint",
]
