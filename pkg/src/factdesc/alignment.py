"""Greedy alignment of description tokens to facts or the vocabulary.

Each description token is annotated with its generation source: the
first fact whose factual words contain it (with the copy position of
the first occurrence), else the vocabulary, else unknown.  A trailing
``<EOS>`` aligned to the vocabulary path closes every description.
These annotations are the teacher-forcing targets for training.

The matching is a heuristic and can be noisy when a token occurs in
several facts; per-corpus statistics are reported so corpora can be
audited.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .corpus import EOS

log = logging.getLogger(__name__)


class Source(Enum):
    FACT = "fact"
    VOCAB = "vocab"
    UNK = "unk"


@dataclass
class AlignedToken:
    """One description token with exactly one generation source.

    Fact-aligned tokens carry the fact index and copy position; the
    other two kinds carry the vocabulary index used as the training
    target (unknown tokens target ``<UNK>`` but keep their surface for
    auditing).
    """

    surface: str
    source: Source
    fact_index: Optional[int] = None
    copy_pos: Optional[int] = None
    word_index: Optional[int] = None


@dataclass
class AlignedDescription:
    entity_id: str
    tokens: list[AlignedToken]


def align_description(entity, vocab):
    """Annotate one entity's description, token by token, in order.

    Facts are scanned in stored order and the first hit wins, with the
    copy position taken as the first occurrence inside that fact.  A
    token that is both factual and in-vocabulary is always fact-aligned.
    """
    if entity.description_tokens is None:
        raise ValueError(f"entity {entity.id} has no description to align")
    aligned = []
    for token in entity.description_tokens:
        hit = None
        for i, fact in enumerate(entity.facts):
            if token in fact.factual_words:
                hit = AlignedToken(token, Source.FACT, fact_index=i,
                                   copy_pos=fact.factual_words.index(token))
                break
        if hit is None:
            if token in vocab:
                hit = AlignedToken(token, Source.VOCAB, word_index=vocab.word_index(token))
            else:
                hit = AlignedToken(token, Source.UNK, word_index=0)
        aligned.append(hit)
    aligned.append(AlignedToken(EOS, Source.VOCAB, word_index=vocab.word_index(EOS)))
    return AlignedDescription(entity.id, aligned)


def align_corpus(entities, vocab):
    """Align every entity; returns the alignments and source counts.

    Entities without a description are skipped with a warning.  The
    statistics count tokens per source kind, the appended ``<EOS>``
    included.
    """
    alignments = []
    stats = {"fact": 0, "vocab": 0, "unk": 0}
    for entity in entities:
        if entity.description_tokens is None:
            log.warning("skipping entity %s: no description", entity.id)
            continue
        aligned = align_description(entity, vocab)
        for token in aligned.tokens:
            stats[token.source.value] += 1
        alignments.append(aligned)
    return alignments, stats


def alignment_to_record(aligned):
    """JSON-ready form: {"id": ..., "tokens": [{"w", "src", "fact", "pos"}...]}."""
    tokens = []
    for tok in aligned.tokens:
        entry = {"w": tok.surface, "src": tok.source.value}
        if tok.source is Source.FACT:
            entry["fact"] = tok.fact_index
            entry["pos"] = tok.copy_pos
        tokens.append(entry)
    return {"id": aligned.entity_id, "tokens": tokens}
