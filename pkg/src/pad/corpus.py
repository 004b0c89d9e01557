"""Token corpora for the desk-scale retrieval testbed.

Tokenization is whitespace splitting on lowercased text. A corpus is an
ordered list of documents (token sequences) plus the sorted vocabulary of
every token that appears.

Two synthetic pieces live here as well:

* make_toy_corpus builds the default experiment corpus: content-word chains
  that stand in for private free-text records.
* synth_background builds the token stream the language model's background
  bigram table is fitted on. It plays the role of generic pretraining text:
  every vocabulary token gets a heavily reinforced "generic" continuation,
  generic tokens funnel into a short reference phrase whose transitions are
  near-deterministic, and the phrase tail fans back out thinly. None of the
  generic or reference tokens appear in corpus documents, so text produced by
  drifting along the background never string-matches a document.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "tokenize",
    "Corpus",
    "make_toy_corpus",
    "synth_background",
    "GENERIC_TOKENS",
    "REFERENCE_PHRASE",
    "CONTENT_WORDS",
]

# Generic continuations the background prior prefers after any token.
GENERIC_TOKENS = (
    "unremarkable", "stable", "normal", "routine", "noted",
    "reviewed", "pending", "negative", "baseline", "typical",
)

# Short high-frequency phrase the background funnels into; its internal
# transitions are reinforced hard enough to pass the confidence screen.
REFERENCE_PHRASE = ("chart", "review", "complete", "today")

# Content vocabulary for the toy corpus: 60 clinical-flavored words.
CONTENT_WORDS = (
    "fever", "rash", "cough", "fatigue", "nausea", "headache", "dizziness",
    "insomnia", "anxiety", "tremor", "swelling", "itching", "bruising",
    "cramping", "numbness", "tingling", "stiffness", "weakness",
    "palpitations", "sweating", "migraine", "asthma", "eczema", "allergy",
    "anemia", "arthritis", "bronchitis", "colitis", "dermatitis", "gastritis",
    "hypertension", "hypotension", "tachycardia", "vertigo", "sciatica",
    "tendonitis", "neuropathy", "fibromyalgia", "psoriasis", "rosacea",
    "ibuprofen", "paracetamol", "amoxicillin", "lisinopril", "metformin",
    "omeprazole", "prednisone", "salbutamol", "atorvastatin", "warfarin",
    "dosage", "referral", "biopsy", "ultrasound", "bloodwork", "imaging",
    "prescription", "symptom", "diagnosis", "treatment",
)

# Background construction constants. PUMP_COUNT sets the copy-step contest:
# an in-document bigram has background count 0, so with copy bonus b the
# copied token leads its generic rival by b - ln(PUMP_COUNT + 1), which is
# 0.2865 at b = 4. REFERENCE_COUNT keeps the reference-phrase transitions
# above the confidence screen for vocabularies up to a few hundred tokens.
PUMP_COUNT = 40
REFERENCE_COUNT_MIN = 900
WANDER_COUNT = 2


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace."""
    return text.lower().split()


def _check_token(tok: str) -> str:
    if not isinstance(tok, str) or not tok:
        raise ValueError(f"tokens must be non-empty strings, got {tok!r}")
    if any(ch.isspace() for ch in tok):
        raise ValueError(f"token contains whitespace: {tok!r}")
    return tok


@dataclass
class Corpus:
    """Ordered documents plus their sorted vocabulary."""

    documents: list[list[str]]
    vocabulary: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.documents:
            raise ValueError("corpus needs at least one document")
        vocab = set()
        for i, doc in enumerate(self.documents):
            if not doc:
                raise ValueError(f"document {i} is empty")
            for tok in doc:
                vocab.add(_check_token(tok))
        if len(vocab) < 2:
            raise ValueError("corpus vocabulary needs at least 2 distinct tokens")
        self.vocabulary = tuple(sorted(vocab))

    def __len__(self) -> int:
        return len(self.documents)

    @classmethod
    def from_file(cls, path) -> "Corpus":
        """One document per non-blank line, UTF-8."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        docs = [tokenize(line) for line in lines if line.strip()]
        return cls(docs)

    @classmethod
    def from_dir(cls, path) -> "Corpus":
        """One document per .txt file, files ordered by name."""
        files = sorted(Path(path).glob("*.txt"))
        if not files:
            raise ValueError(f"no .txt files under {path}")
        docs = [tokenize(f.read_text(encoding="utf-8")) for f in files]
        return cls(docs)

    def to_file(self, path) -> None:
        """Inverse of from_file: one space-joined document per line."""
        text = "\n".join(" ".join(doc) for doc in self.documents)
        Path(path).write_text(text + "\n", encoding="utf-8")


def make_toy_corpus(n_docs: int = 200, seed: int = 0,
                    min_tokens: int = 30, max_tokens: int = 60) -> Corpus:
    """Synthesize the default experiment corpus.

    Each document is a chain over CONTENT_WORDS with no immediate repeats,
    standing in for a private record. Deterministic given the seed.
    """
    if n_docs < 1:
        raise ValueError("n_docs must be >= 1")
    if not (1 <= min_tokens <= max_tokens):
        raise ValueError("need 1 <= min_tokens <= max_tokens")
    rng = np.random.default_rng(seed)
    words = CONTENT_WORDS
    docs = []
    for _ in range(n_docs):
        length = int(rng.integers(min_tokens, max_tokens + 1))
        doc = [words[int(rng.integers(len(words)))]]
        while len(doc) < length:
            nxt = words[int(rng.integers(len(words)))]
            if nxt != doc[-1]:
                doc.append(nxt)
        docs.append(doc)
    return Corpus(docs)


def synth_background(vocabulary, n_generics: int = len(GENERIC_TOKENS)) -> list[list[str]]:
    """Build the background-prior token stream for a vocabulary.

    Emits short sequences whose bigram counts are exact by construction:

    * (token, generic_of(token)) x PUMP_COUNT for every vocabulary token, so
      every in-document transition is contested by a generic continuation;
    * (generic, phrase[0]) x PUMP_COUNT, funneling drift into the phrase;
    * (phrase[i], phrase[i+1]) x max(REFERENCE_COUNT_MIN, 10 |V|), strong
      enough that these steps clear the confidence screen;
    * (phrase[-1], token) x WANDER_COUNT for every vocabulary token, a flat
      fan-out so decoding wanders after the phrase.

    The generic assignment is the token's rank in the sorted vocabulary mod
    n_generics. Raises if the vocabulary already contains generic or
    reference tokens (they must stay out of retrievable documents).
    """
    vocab = sorted(set(vocabulary))
    if not vocab:
        raise ValueError("vocabulary must be non-empty")
    if not (1 <= n_generics <= len(GENERIC_TOKENS)):
        raise ValueError(f"n_generics must lie in [1, {len(GENERIC_TOKENS)}]")
    generics = GENERIC_TOKENS[:n_generics]
    reserved = set(generics) | set(REFERENCE_PHRASE)
    clash = reserved.intersection(vocab)
    if clash:
        raise ValueError(f"vocabulary collides with background tokens: {sorted(clash)}")

    full_size = len(vocab) + n_generics + len(REFERENCE_PHRASE)
    ref_count = max(REFERENCE_COUNT_MIN, 10 * full_size)

    stream: list[list[str]] = []
    for rank, tok in enumerate(vocab):
        stream.extend([tok, generics[rank % n_generics]] for _ in range(PUMP_COUNT))
    for g in generics:
        stream.extend([g, REFERENCE_PHRASE[0]] for _ in range(PUMP_COUNT))
    for a, b in zip(REFERENCE_PHRASE, REFERENCE_PHRASE[1:]):
        stream.extend([a, b] for _ in range(ref_count))
    tail = REFERENCE_PHRASE[-1]
    for tok in vocab:
        stream.extend([tail, tok] for _ in range(WANDER_COUNT))
    return stream
