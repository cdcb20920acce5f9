"""Frozen table encoders: TF-IDF, word-vector header/body, pooled LM vectors.

Every encoder maps a sampled table to a fixed-dimension vector and is frozen:
classifier training never updates encoder state. TF-IDF is the only encoder
with a fit step, and by default it is fitted on training folds only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingLexicon, VectorStore
from .errors import ConfigError, DataError
from .preprocess import SampledTable, body_sequence, header_sequence, table_sequence
from .tables import TableSequence

log = logging.getLogger(__name__)

# Encoders return plain 1-D float64 arrays.
FeatureVector = np.ndarray


@dataclass
class TfIdfModel:
    """Fitted vocabulary and smoothed idf weights."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_count: int


def fit_tfidf(corpus: Sequence[TableSequence | list[str]]) -> TfIdfModel:
    """Fit vocabulary and idf over a sequence corpus.

    Vocabulary is every token in the corpus, sorted lexicographically;
    idf(t) = ln((1 + n) / (1 + df(t))) + 1 with n the corpus size.
    """
    if not corpus:
        raise DataError("cannot fit TF-IDF on an empty corpus")
    docs = [seq.tokens if isinstance(seq, TableSequence) else list(seq) for seq in corpus]
    df: dict[str, int] = {}
    for tokens in docs:
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    n = len(docs)
    idf = np.empty(len(vocabulary), dtype=np.float64)
    for token, i in vocabulary.items():
        idf[i] = math.log((1.0 + n) / (1.0 + df[token])) + 1.0
    return TfIdfModel(vocabulary, idf, n)


def encode_tfidf(model: TfIdfModel, seq: TableSequence | list[str]) -> FeatureVector:
    """Raw term counts times idf, L2-normalized. Unknown tokens are ignored;
    a sequence with no in-vocabulary token encodes to the zero vector."""
    tokens = seq.tokens if isinstance(seq, TableSequence) else seq
    vec = np.zeros(len(model.vocabulary), dtype=np.float64)
    for token in tokens:
        i = model.vocabulary.get(token)
        if i is not None:
            vec[i] += 1.0
    vec *= model.idf
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def _mean_pool(lexicon: EmbeddingLexicon, tokens: list[str]) -> np.ndarray:
    total = np.zeros(lexicon.dim, dtype=np.float64)
    hits = 0
    for token in tokens:
        vec = lexicon.lookup(token)
        if vec is not None:
            total += vec
            hits += 1
    if hits:
        total /= hits
    return total


def encode_wordvec(lexicon: EmbeddingLexicon, sampled: SampledTable) -> FeatureVector:
    """Mean header vector concatenated with mean body vector (dim 2 * lexicon.dim).

    The mean runs over token occurrences, not types; a side with zero
    in-vocabulary tokens contributes the zero vector.
    """
    x_header = _mean_pool(lexicon, header_sequence(sampled).tokens)
    x_body = _mean_pool(lexicon, body_sequence(sampled).tokens)
    return np.concatenate([x_header, x_body])


def encode_pooled_rows(
    store: VectorStore, table_id: str, q: int, masked: bool, utterance: str
) -> FeatureVector:
    """Arithmetic mean of the precomputed row vectors for a table."""
    record = store.get(table_id, "row", masked, q, utterance)
    return record.vectors.astype(np.float64).mean(axis=0)


def encode_pooled_columns(
    store: VectorStore, table_id: str, q: int, masked: bool, utterance: str
) -> FeatureVector:
    """Arithmetic mean of the precomputed column vectors for a table."""
    record = store.get(table_id, "column", masked, q, utterance)
    return record.vectors.astype(np.float64).mean(axis=0)


class TfidfEncoder:
    """Bag-of-words table encoder over the full table sequence (header + body)."""

    name = "tfidf"
    requires_fit = True

    def __init__(self) -> None:
        self.model: TfIdfModel | None = None

    def fit(self, sampled: list[SampledTable]) -> None:
        self.model = fit_tfidf([table_sequence(st) for st in sampled])

    def encode(self, sampled: SampledTable) -> FeatureVector:
        if self.model is None:
            raise ConfigError("TF-IDF encoder used before fit")
        return encode_tfidf(self.model, table_sequence(sampled))

    def stats(self) -> dict:
        return {"vocabulary_size": len(self.model.vocabulary) if self.model else 0}


class WordVecEncoder:
    """Pre-trained word-vector encoder: mean header vector || mean body vector."""

    name = "wordvec"
    requires_fit = False

    def __init__(self, lexicon: EmbeddingLexicon) -> None:
        self.lexicon = lexicon
        self._hits = 0
        self._total = 0

    def fit(self, sampled: list[SampledTable]) -> None:
        pass

    def encode(self, sampled: SampledTable) -> FeatureVector:
        tokens = table_sequence(sampled).tokens
        hits, total = self.lexicon.coverage(tokens)
        self._hits += hits
        self._total += total
        return encode_wordvec(self.lexicon, sampled)

    def stats(self) -> dict:
        coverage = self._hits / self._total if self._total else 0.0
        return {
            "lexicon": self.lexicon.name,
            "lexicon_size": len(self.lexicon),
            "token_coverage": round(coverage, 4),
        }


class PooledEncoder:
    """Consumer of precomputed row- or column-granular LM vectors.

    ``utterance`` is either one string for the whole corpus or a per-table
    map (utterance ablations assign class-dependent strings per table).
    """

    requires_fit = False

    def __init__(
        self,
        store: VectorStore,
        granularity: str,
        utterance: str | dict[str, str] = " ",
    ) -> None:
        if granularity not in ("row", "column"):
            raise ConfigError(f"granularity must be 'row' or 'column', got {granularity!r}")
        self.store = store
        self.granularity = granularity
        self.utterance = utterance
        self.name = "pooled-rows" if granularity == "row" else "pooled-cols"

    def _utterance_for(self, table_id: str) -> str:
        if isinstance(self.utterance, dict):
            try:
                return self.utterance[table_id]
            except KeyError:
                raise ConfigError(f"no utterance assigned for table {table_id!r}") from None
        return self.utterance

    def fit(self, sampled: list[SampledTable]) -> None:
        pass

    def encode(self, sampled: SampledTable) -> FeatureVector:
        utterance = self._utterance_for(sampled.base.id)
        if self.granularity == "row":
            return encode_pooled_rows(
                self.store, sampled.base.id, sampled.q_requested, sampled.masked, utterance
            )
        return encode_pooled_columns(
            self.store, sampled.base.id, sampled.q_requested, sampled.masked, utterance
        )

    def stats(self) -> dict:
        return {
            "store": self.store.source,
            "store_records": len(self.store),
            "vector_dim": self.store.dim,
        }


def encode_dataset(
    encoder, sampled: list[SampledTable], labels: list[int] | None = None
) -> np.ndarray:
    """Encode every sampled table, preserving order.

    Returns the (n, d) feature matrix; raises if dimensions are inconsistent
    or any entry is non-finite.
    """
    if not sampled:
        raise DataError("nothing to encode")
    vectors = []
    dim = None
    for st in sampled:
        vec = np.asarray(encoder.encode(st), dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise DataError(f"table {st.base.id!r}: encoder produced a non-vector")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DataError(
                f"table {st.base.id!r}: dim {vec.size} differs from {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise DataError(f"table {st.base.id!r}: non-finite feature values")
        vectors.append(vec)
    return np.vstack(vectors)
