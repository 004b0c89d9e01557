"""Copy-prone bigram language model.

The model stands in for a generation-capable LM in a retrieval pipeline. Its
background behavior is an add-one smoothed bigram table fitted on a training
stream. When retrieved context is present, the next-token logits get a fixed
additive bonus on the token the copy pointer designates, which makes verbatim
continuation of context the preferred move unless noise or a strong prior
overrides it. That retrieval-conditioned preference is the leakage channel
the decoding mechanism is meant to suppress.

Logits are log probabilities of the background table plus the bonus, so the
gap between the copy candidate and its strongest rival is controlled exactly
by the training counts.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["CopyProneLM"]


class CopyProneLM:
    """Add-one smoothed bigram model with a copy bonus on context tokens.

    Attributes set by fit: vocabulary_ (sorted token tuple), token_index_,
    and log_probs_, a dense (V, V) matrix with log_probs_[i, j] equal to
    ln((count(i, j) + 1) / (count(i, *) + V)).
    """

    def __init__(self, copy_bonus: float = 4.0) -> None:
        if not (math.isfinite(copy_bonus) and copy_bonus >= 0.0):
            raise ValueError("copy_bonus must be finite and >= 0")
        self.copy_bonus = float(copy_bonus)

    def fit(self, sequences, extra_tokens=()) -> "CopyProneLM":
        """Count bigrams over token sequences.

        extra_tokens widens the vocabulary with tokens that may not occur in
        the stream (prompt commands, corpus words) so they stay scorable.
        """
        vocab = set(extra_tokens)
        seqs = [list(s) for s in sequences]
        for seq in seqs:
            vocab.update(seq)
        if len(vocab) < 2:
            raise ValueError("model vocabulary needs at least 2 tokens")
        self.vocabulary_ = tuple(sorted(vocab))
        self.token_index_ = {tok: i for i, tok in enumerate(self.vocabulary_)}

        size = len(self.vocabulary_)
        counts = np.zeros((size, size), dtype=np.float64)
        for seq in seqs:
            for a, b in zip(seq, seq[1:]):
                counts[self.token_index_[a], self.token_index_[b]] += 1.0
        totals = counts.sum(axis=1, keepdims=True)
        self.log_probs_ = np.log(counts + 1.0) - np.log(totals + size)
        return self

    def _index(self, token: str) -> int:
        idx = self.token_index_.get(token)
        if idx is None:
            raise ValueError(f"token not in model vocabulary: {token!r}")
        return idx

    def logits_at(self, prev_token: str, context=None,
                  copy_pos: int | None = None) -> np.ndarray:
        """Next-token logits after prev_token.

        With copy_pos set, context[copy_pos] receives the copy bonus. The
        position must index into context and the token there must be in the
        vocabulary.
        """
        logits = self.log_probs_[self._index(prev_token)].copy()
        if copy_pos is not None:
            if context is None:
                raise ValueError("copy_pos given without context")
            if not 0 <= copy_pos < len(context):
                raise ValueError(f"copy_pos {copy_pos} outside context of length {len(context)}")
            logits[self._index(context[copy_pos])] += self.copy_bonus
        return logits

    def bigram_logprob(self, prev_token: str, next_token: str) -> float:
        """Background ln p(next | prev), no copy bonus."""
        return float(self.log_probs_[self._index(prev_token), self._index(next_token)])
