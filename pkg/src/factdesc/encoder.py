"""Fact encoder: positionally weighted word embeddings plus a mean fact.

A fact's phrase (property name followed by value) is folded into one
vector.  In ``positional`` mode word j of a J-word phrase is weighted
elementwise by the column l_j with

    l[k, j] = (1 - j/J) - (k/d) * (1 - 2*j/J),   k, j 1-indexed,

so early and late phrase positions project into different embedding
subspaces; ``mean_pool`` mode replaces this with a plain average.  The
mean of all fact embeddings is appended as one extra slot (the phantom
fact that generates vocabulary words), and the slot list is padded to a
fixed width with an attention mask marking the live entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import DEFAULT_MAX_FACTS
from .errors import ConfigError
from .tensor import Tensor, concat, embedding_rows, matmul, mul, sum_rows

ENCODING_MODES = ("positional", "mean_pool")
MEAN_FACT_MODES = ("mean", "fixed_random")


@dataclass
class EncoderConfig:
    embedding_dim: int = 100
    encoding: str = "positional"
    mean_fact: str = "mean"
    max_phrase_len: int = 60

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.encoding not in ENCODING_MODES:
            raise ConfigError(f"unknown encoding mode {self.encoding!r}")
        if self.mean_fact not in MEAN_FACT_MODES:
            raise ConfigError(f"unknown mean_fact mode {self.mean_fact!r}")


@dataclass
class EncodedEntity:
    """Slot matrix an entity exposes to the decoder.

    ``embeddings`` has ``slots`` rows: the N fact embeddings, the mean
    fact, then zero padding; ``mask`` is true on the first N+1 rows.
    ``word_counts`` holds each fact's number of copyable words.
    """

    embeddings: Tensor
    mask: np.ndarray
    n_facts: int
    word_counts: list[int]

    @property
    def mean_slot(self):
        return self.n_facts

    @property
    def slots(self):
        return self.mask.shape[0]


def positional_weights(phrase_len, dim):
    """The (dim, phrase_len) weight matrix of the closed form above."""
    if phrase_len < 1:
        raise ConfigError(f"positional_weights needs a phrase length >= 1, got {phrase_len}")
    if dim < 1:
        raise ConfigError(f"positional_weights needs dim >= 1, got {dim}")
    k = np.arange(1, dim + 1, dtype=np.float64)[:, None]
    j = np.arange(1, phrase_len + 1, dtype=np.float64)[None, :]
    return (1.0 - j / phrase_len) - (k / dim) * (1.0 - 2.0 * j / phrase_len)


@lru_cache(maxsize=None)
def _positional_rows(phrase_len, dim):
    # (J, d) constant, one row of weights per phrase position
    return Tensor(positional_weights(phrase_len, dim).T)


@lru_cache(maxsize=None)
def _inverse(n):
    return Tensor(1.0 / n)


@lru_cache(maxsize=None)
def _mean_weights(n):
    return Tensor(np.full((1, n), 1.0 / n))


@lru_cache(maxsize=None)
def _zero_rows(rows, dim):
    return Tensor(np.zeros((rows, dim)))


def fixed_mean_vector(rng, dim):
    """The frozen stand-in for the mean fact, sampled once at init."""
    bound = 1.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=(1, dim))


def encode_fact(fact, word_embeddings, vocab, cfg):
    """One fact phrase -> one (1, d) embedding.

    Phrase words outside the vocabulary fall back to the ``<UNK>``
    embedding; phrases are truncated to ``cfg.max_phrase_len`` words.
    """
    phrase = fact.phrase()[: cfg.max_phrase_len]
    if not phrase:
        raise ConfigError("cannot encode a fact with an empty phrase")
    emb = embedding_rows(word_embeddings, vocab.indices(phrase))
    if cfg.encoding == "positional":
        return sum_rows(mul(emb, _positional_rows(len(phrase), cfg.embedding_dim)))
    return mul(sum_rows(emb), _inverse(len(phrase)))


def encode_entity(entity, word_embeddings, vocab, cfg, max_facts=DEFAULT_MAX_FACTS,
                  fixed_mean=None):
    """All fact embeddings plus the mean-fact slot, padded and masked."""
    facts = entity.facts[:max_facts]
    n = len(facts)
    if n == 0:
        raise ConfigError(f"entity {entity.id} has no facts to encode")
    stacked = concat([encode_fact(f, word_embeddings, vocab, cfg) for f in facts], axis=0)
    if cfg.mean_fact == "mean":
        mean_row = matmul(_mean_weights(n), stacked)
    else:
        if fixed_mean is None:
            raise ConfigError("fixed_random mean-fact mode needs the frozen vector")
        mean_row = fixed_mean
    parts = [stacked, mean_row]
    pad = max_facts - n
    if pad:
        parts.append(_zero_rows(pad, cfg.embedding_dim))
    mask = np.zeros(max_facts + 1, dtype=bool)
    mask[: n + 1] = True
    return EncodedEntity(
        embeddings=concat(parts, axis=0),
        mask=mask,
        n_facts=n,
        word_counts=[len(f.factual_words) for f in facts],
    )
