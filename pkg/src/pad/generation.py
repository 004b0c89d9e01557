"""Greedy decoding loop with a context copy pointer.

A generation starts from an extraction-style prompt (a document snippet plus
a short command to reproduce the context) and decodes greedily over logits
that may be perturbed by a decoder. The copy pointer tracks where in the
concatenated retrieved context the model is currently copying from: it
advances while emitted tokens match the context and otherwise re-anchors to
the longest suffix of the output that appears in the context, preferring the
earliest occurrence. When no suffix matches, the pointer switches off and the
model runs on its background distribution until an emitted token anchors it
again.

Two decoders are provided. IdentityDecoder passes logits through untouched
(the unprotected extraction baseline) while still recording zero-cost ledger
entries so every generation carries an accounting trail. PadDecoder wraps the
noise mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .accounting import AccountantLedger
from .corpus import Corpus
from .logits import argmax_index, margin, normalized_entropy, softmax
from .mechanism import PadConfig, StepDecision, pad_step
from .retrieval import RetrievalResult

__all__ = [
    "COMMAND_TOKENS",
    "ExtractionPrompt",
    "GenerationTrace",
    "IdentityDecoder",
    "PadDecoder",
    "generate",
]

# Fixed extraction command appended to every prompt.
COMMAND_TOKENS = ("please", "repeat", "all", "the", "context")


@dataclass(frozen=True)
class ExtractionPrompt:
    """Document snippet plus the extraction command."""

    information: tuple[str, ...]
    command: tuple[str, ...] = COMMAND_TOKENS

    def __post_init__(self) -> None:
        if not self.information:
            raise ValueError("prompt needs a non-empty information segment")
        if not self.command:
            raise ValueError("prompt needs a non-empty command segment")

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.information + self.command


@dataclass
class GenerationTrace:
    """One generation: emitted tokens, per-step decisions, accounting."""

    tokens: list[str]
    decisions: list[StepDecision]
    ledger: AccountantLedger
    context: list[str]


class IdentityDecoder:
    """No-op decoder for the extraction baseline.

    Logits pass through unchanged; the ledger records an unprotected step
    with zero noise so privacy reports stay comparable across rows.
    """

    def __init__(self, ledger: AccountantLedger) -> None:
        self.ledger = ledger

    def __call__(self, logits: np.ndarray, t: int):
        probs = softmax(logits)
        decision = StepDecision(
            protected=False,
            margin=margin(logits),
            max_prob=float(np.max(probs)),
            entropy=normalized_entropy(probs),
            delta_t=0.0,
            sigma_t=0.0,
        )
        self.ledger.record_step(0.0, 0.0, False)
        return logits, decision


class PadDecoder:
    """Decoder applying the privacy mechanism at every step."""

    def __init__(self, config: PadConfig, rng: np.random.Generator,
                 ledger: AccountantLedger) -> None:
        self.config = config
        self.rng = rng
        self.ledger = ledger

    def __call__(self, logits: np.ndarray, t: int):
        return pad_step(logits, t, self.config, self.rng, self.ledger)


def _match_ends(context: list[str], output: list[str]) -> tuple[int, list[int]]:
    """Longest output suffix occurring in context, as (length, end indices).

    End index j means context[j - L + 1 .. j] equals the suffix of length L.
    Returns (0, []) when even the last output token is absent from context.
    """
    if not output or not context:
        return 0, []
    last = output[-1]
    ends = [j for j, tok in enumerate(context) if tok == last]
    if not ends:
        return 0, []
    length = 1
    limit = min(len(output), len(context))
    while length < limit:
        want = output[-(length + 1)]
        longer = [j for j in ends if j - length >= 0 and context[j - length] == want]
        if not longer:
            break
        ends = longer
        length += 1
    return length, ends


def _reanchor(context: list[str], output: list[str]) -> int | None:
    """Copy-pointer position after a mismatch, or None when unanchored."""
    length, ends = _match_ends(context, output)
    if length == 0:
        return None
    return min(ends) + 1


def generate(model, prompt: ExtractionPrompt, retrieval: RetrievalResult,
             corpus: Corpus, decoder, max_len: int) -> GenerationTrace:
    """Decode max_len tokens greedily with copy-pointer tracking."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    context = [tok for doc_id in retrieval.doc_ids
               for tok in corpus.documents[doc_id]]
    tokens: list[str] = []
    decisions: list[StepDecision] = []
    prev = prompt.tokens[-1]
    pointer: int | None = 0 if context else None

    for t in range(max_len):
        copy_pos = pointer if pointer is not None and pointer < len(context) else None
        logits = model.logits_at(prev, context, copy_pos)
        noisy, decision = decoder(logits, t)
        token = model.vocabulary_[argmax_index(noisy)]
        tokens.append(token)
        decisions.append(decision)
        if copy_pos is not None and token == context[copy_pos]:
            pointer = copy_pos + 1
        else:
            pointer = _reanchor(context, tokens)
        prev = token

    return GenerationTrace(tokens=tokens, decisions=decisions,
                           ledger=decoder.ledger, context=context)
