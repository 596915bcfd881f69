"""Beam-search decoding and attention-based unk replacement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch

from ..diversity import is_rank_token
from ..vocab import BOS_ID, EOS_ID, PAD_ID, UNK, Vocab
from .model import GenConfig, Seq2Seq, source_ids


@dataclass
class Hypothesis:
    ids: tuple[int, ...]
    log_prob: float
    attention: tuple[tuple[float, ...], ...]
    tokens: tuple[str, ...]
    finished: bool = True


def max_decode_len(source_len: int) -> int:
    return 2 * source_len + 5


def beam_search(model: Seq2Seq, source: Sequence[str], vocab: Vocab, config: GenConfig,
                beam_size: int | None = None, max_len: int | None = None) -> list[Hypothesis]:
    """Decode ``source`` (delexicalised tokens plus rank token).

    Scores are plain summed log-probabilities. Pad and bos are never emitted.
    Hypotheses still open after ``max_len`` steps are returned unfinished.
    """
    return beam_search_batch(model, [source], vocab, config, beam_size, max_len)[0]


@torch.no_grad()
def beam_search_batch(model: Seq2Seq, sources: Sequence[Sequence[str]], vocab: Vocab,
                      config: GenConfig, beam_size: int | None = None,
                      max_len: int | None = None) -> list[list[Hypothesis]]:
    """Run independent beam searches for several sources in one batch.

    Each source keeps its own beam, length cap and candidate selection, so the
    result for a source does not depend on what else is in the batch.
    """
    beam_size = beam_size or config.beam_size
    encoded = [source_ids(s, vocab, config.max_source_len) for s in sources]
    if not encoded:
        return []
    width = max(len(x) for x in encoded)
    src = torch.tensor([x + [PAD_ID] * (width - len(x)) for x in encoded])
    memory, keys, mask, state = model.encode(src, torch.tensor([len(x) for x in encoded]))
    limits = [max_len or max_decode_len(len(x)) for x in encoded]

    # live rows, grouped by source; owner[i] is the source of row i
    owner = list(range(len(encoded)))
    prev = torch.full((len(encoded),), BOS_ID)
    feed = model.initial_feed(len(encoded), memory)
    scores = torch.zeros(len(encoded), dtype=memory.dtype)
    histories: list[tuple[tuple[int, ...], tuple]] = [((), ())] * len(encoded)
    finished: list[list[Hypothesis]] = [[] for _ in encoded]

    step = 0
    while owner:
        step += 1
        rows = torch.tensor(owner)
        logp, feed, state, attn = model.step(prev, feed, state, memory[rows], keys[rows], mask[rows])
        logp = logp.clone()
        logp[:, PAD_ID] = float("-inf")
        logp[:, BOS_ID] = float("-inf")
        k = min(beam_size, logp.size(1) - 2)
        # per-row candidate pool, then a stable selection within each source
        top_lp, top_ix = torch.sort(logp, dim=1, descending=True, stable=True)
        top_lp, top_ix = top_lp[:, :k], top_ix[:, :k]
        totals = scores.unsqueeze(1) + top_lp
        attn_rows = attn.tolist()

        keep_rows, keep_tok, keep_scores, keep_hist, keep_owner = [], [], [], [], []
        start = 0
        while start < len(owner):
            s = owner[start]
            end = start
            while end < len(owner) and owner[end] == s:
                end += 1
            group = totals[start:end].reshape(-1)
            n_src = len(encoded[s])
            live = []
            for flat in torch.sort(group, descending=True, stable=True).indices[:beam_size].tolist():
                r, col = divmod(flat, k)
                row = start + r
                tok = int(top_ix[row, col])
                total = float(group[flat])
                hist_ids, hist_attn = histories[row]
                new_ids = hist_ids + (tok,)
                new_attn = hist_attn + (tuple(attn_rows[row][:n_src]),)
                if tok == EOS_ID:
                    finished[s].append(Hypothesis(new_ids, total, new_attn,
                                                  tuple(vocab.decode(new_ids[:-1]))))
                else:
                    live.append((row, tok, total, (new_ids, new_attn)))
            if step >= limits[s]:
                for _, _, total, (hist_ids, hist_attn) in live:
                    finished[s].append(Hypothesis(hist_ids, total, hist_attn,
                                                  tuple(vocab.decode(hist_ids)), finished=False))
            else:
                for row, tok, total, hist in live:
                    keep_rows.append(row)
                    keep_tok.append(tok)
                    keep_scores.append(total)
                    keep_hist.append(hist)
                    keep_owner.append(s)
            start = end
        if not keep_rows:
            break
        idx = torch.tensor(keep_rows)
        prev = torch.tensor(keep_tok)
        feed = feed[idx]
        state = (state[0][:, idx], state[1][:, idx])
        scores = torch.tensor(keep_scores, dtype=memory.dtype)
        histories = keep_hist
        owner = keep_owner

    out = []
    for hyps in finished:
        hyps.sort(key=lambda h: -h.log_prob)
        out.append(hyps[:beam_size])
    return out


def unk_replace(hyp: Hypothesis, source: Sequence[str]) -> list[str]:
    """Swap each unk for the source word with the highest attention at that step.

    Rank tokens in the source are never copied; ties go to the leftmost word.
    """
    out = []
    for step, tok in enumerate(hyp.tokens):
        if tok != UNK:
            out.append(tok)
            continue
        weights = hyp.attention[step]
        best, best_w = None, float("-inf")
        for pos, w in enumerate(weights[:len(source)]):
            if is_rank_token(source[pos]):
                continue
            if w > best_w:
                best, best_w = pos, w
        out.append(source[best] if best is not None else tok)
    return out
