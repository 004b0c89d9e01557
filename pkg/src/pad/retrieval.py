"""Tf-idf retrieval over a small corpus.

Documents and queries are embedded as l2-normalized tf-idf vectors with the
smooth idf ln((1 + N) / (1 + df)) + 1, and ranked by cosine similarity.
Ranking is fully deterministic: score ties break toward the lower document
id. An optional distance gate drops documents whose Euclidean distance to
the query (on the unit sphere) exceeds a threshold before ranking, which
models a retriever that refuses to return far-away context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus

__all__ = ["RetrievalResult", "TfidfIndex", "build_index"]


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked document ids with their cosine scores.

    doc_ids are distinct and scores are non-increasing. Both lists are empty
    when the distance gate filtered everything out.
    """

    doc_ids: tuple[int, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.doc_ids) != len(self.scores):
            raise ValueError("doc_ids and scores must have equal length")
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError("doc_ids must be distinct")
        if any(b > a + 1e-12 for a, b in zip(self.scores, self.scores[1:])):
            raise ValueError("scores must be non-increasing")


class TfidfIndex:
    """Immutable tf-idf index over a corpus."""

    def __init__(self, corpus: Corpus) -> None:
        self.corpus = corpus
        self.vocabulary_ = corpus.vocabulary
        self.token_index_ = {tok: i for i, tok in enumerate(self.vocabulary_)}
        n_docs = len(corpus)
        n_terms = len(self.vocabulary_)

        tf = np.zeros((n_docs, n_terms), dtype=np.float64)
        for d, doc in enumerate(corpus.documents):
            for tok in doc:
                tf[d, self.token_index_[tok]] += 1.0
        df = np.count_nonzero(tf, axis=0)
        self.idf_ = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0

        mat = tf * self.idf_
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        # Documents are non-empty and idf is positive, so norms are too.
        self.doc_matrix_ = mat / norms

    def vectorize(self, tokens) -> np.ndarray:
        """Embed a token sequence; unknown tokens are ignored.

        Returns the l2-normalized tf-idf vector, or the zero vector when no
        token is in the vocabulary.
        """
        vec = np.zeros(len(self.vocabulary_), dtype=np.float64)
        for tok in tokens:
            i = self.token_index_.get(tok)
            if i is not None:
                vec[i] += 1.0
        vec *= self.idf_
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
        return vec

    def retrieve(self, query_tokens, k: int,
                 max_distance: float | None = None) -> RetrievalResult:
        """Top-k documents by cosine similarity to the query.

        With max_distance set, documents farther than that Euclidean
        distance from the query vector are excluded before ranking. Fewer
        than k documents may come back after exclusion.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if max_distance is not None and max_distance < 0.0:
            raise ValueError("max_distance must be non-negative")
        q = self.vectorize(query_tokens)
        sims = self.doc_matrix_ @ q

        candidates = np.arange(len(sims))
        if max_distance is not None:
            # Document vectors are unit length, so the distance follows from
            # the similarity; a zero query sits at distance 1 from them all.
            if np.any(q):
                dist = np.sqrt(np.maximum(2.0 - 2.0 * sims, 0.0))
            else:
                dist = np.ones_like(sims)
            candidates = candidates[dist <= max_distance]
        order = np.argsort(-sims[candidates], kind="stable")
        chosen = candidates[order][:k]
        return RetrievalResult(
            doc_ids=tuple(int(i) for i in chosen),
            scores=tuple(float(sims[i]) for i in chosen),
        )


def build_index(corpus: Corpus) -> TfidfIndex:
    return TfidfIndex(corpus)
