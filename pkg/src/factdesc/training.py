"""Training loop, objective, checkpoints, and parameter accounting.

The objective sums, over every aligned description token, the negative
log-likelihood of the gold slot under the attention distribution and
the negative log-likelihood of the gold word under the head that slot
routes to (copy position for fact-aligned tokens, vocabulary index
otherwise, ``<UNK>`` included).  Teacher forcing feeds the gold slot's
embedding and the gold previous-word feedback throughout.

Checkpoint files are binary: magic ``FKS1``, a little-endian uint32
manifest length, a UTF-8 JSON manifest (version, config, vocabulary,
metadata, ordered tensor entries with byte offsets), then the tensors'
row-major little-endian float32 payloads back to back.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import struct
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .alignment import Source, align_description
from .corpus import Vocabulary, build_vocabulary
from .decoder import (
    DecoderParams,
    ModelDims,
    attention_context,
    decoder_step,
    fact_attention,
    greedy_decode,
    param_shapes,
    slot_embedding,
    vocab_logits,
    copy_logits,
    _copy_onehot,
    _zero_row,
)
from .encoder import EncoderConfig
from .errors import CheckpointError, ConfigError, DataError, TrainingDivergenceError
from .metrics import EvalPair, bleu
from .tensor import AdamState, Tape, Tensor, adam_step, add, backward, embedding_rows, nll

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"FKS1"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    epochs: int = 25
    learning_rate: float = 0.001
    batch_size: int = 32
    seed: int = 42
    max_facts: int = 60
    max_factual_words: int = 60
    vocab_size: int = 1000
    embed_dim: int = 100
    hidden_dim: int = 100
    attn_dim: int = 100
    head_dim: int = 100
    encoding: str = "positional"
    mean_fact: str = "mean"
    copy_only: bool = False
    max_decode_len: int = 20
    grad_clip: float | None = None  # off by default; the recurrence is shallow
    vocab_source: str = "descriptions"

    def __post_init__(self):
        positive = ("epochs", "learning_rate", "batch_size", "max_facts",
                    "max_factual_words", "vocab_size", "embed_dim", "hidden_dim",
                    "attn_dim", "head_dim", "max_decode_len")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        self.encoder_config()  # validates the mode names

    def dims(self):
        return ModelDims(self.embed_dim, self.hidden_dim, self.attn_dim,
                         self.head_dim, self.vocab_size + 3, self.max_factual_words)

    def encoder_config(self):
        return EncoderConfig(self.embed_dim, self.encoding, self.mean_fact,
                             max_phrase_len=self.max_factual_words)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid config JSON: {exc.msg}") from exc
        return cls.from_dict(data)


@dataclass
class Checkpoint:
    params: DecoderParams
    config: TrainConfig
    vocab: Vocabulary
    meta: dict = field(default_factory=dict)


def step_loss(entity, aligned, params, vocab, config, parts=False):
    """Teacher-forced loss for one entity, optionally split into terms.

    Returns the scalar loss, or ``(loss, fact_term, word_term)`` when
    ``parts`` is set.  In ``copy_only`` mode the mean-fact slot is
    masked out of attention and tokens aligned to it contribute no loss
    (the restricted model cannot emit them), though the recurrence
    still advances on their gold feedback.
    """
    if aligned.entity_id != entity.id:
        raise DataError(f"alignment for {aligned.entity_id} applied to entity {entity.id}")
    dims = params.dims
    enc = params.encode(entity, vocab, config.encoder_config(), config.max_facts)
    mask = enc.mask
    if config.copy_only:
        mask = mask.copy()
        mask[enc.mean_slot] = False
    h = _zero_row(dims.hidden_dim)
    w_prev = _zero_row(dims.embed_dim)
    v_prev = _zero_row(dims.copy_width)
    fact_terms = []
    word_terms = []
    for token in aligned.tokens:
        if token.source is Source.FACT:
            if not 0 <= token.fact_index < enc.n_facts:
                raise DataError(f"entity {entity.id}: aligned fact index "
                                f"{token.fact_index} out of range")
            if not 0 <= token.copy_pos < enc.word_counts[token.fact_index]:
                raise DataError(f"entity {entity.id}: copy position {token.copy_pos} "
                                f"out of range for fact {token.fact_index}")
            gold_slot = token.fact_index
        else:
            gold_slot = enc.mean_slot
        scored = not (config.copy_only and token.source is not Source.FACT)
        if scored:
            alpha = fact_attention(enc.embeddings, mask, h, params)
            fact_terms.append(nll(alpha, gold_slot))
        f_t = slot_embedding(enc.embeddings, gold_slot)
        h = decoder_step(f_t, w_prev, v_prev, h, params)
        if token.source is Source.FACT:
            dist = copy_logits(f_t, h, enc.word_counts[gold_slot], params)
            word_terms.append(nll(dist, token.copy_pos))
            v_prev = _copy_onehot(dims.copy_width, token.copy_pos)
            w_prev = _zero_row(dims.embed_dim)
        else:
            if scored:
                dist = vocab_logits(attention_context(alpha, enc.embeddings), h, params)
                word_terms.append(nll(dist, token.word_index))
            w_prev = embedding_rows(params.word_emb, [token.word_index])
            v_prev = _zero_row(dims.copy_width)

    def _total(terms):
        if not terms:
            return Tensor(0.0)
        out = terms[0]
        for term in terms[1:]:
            out = add(out, term)
        return out

    fact_total = _total(fact_terms)
    word_total = _total(word_terms)
    total = add(word_total, fact_total) if (fact_terms or word_terms) else Tensor(0.0)
    if parts:
        return total, fact_total, word_total
    return total


def _clip_gradients(grads, clip):
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads))
    if norm > clip:
        scale = clip / norm
        for g in grads:
            g *= scale
    return grads


def _dev_bleu4(entities, params, vocab, config):
    pairs = []
    for entity in entities:
        if not entity.description_tokens:
            continue
        candidate = greedy_decode(entity, params, vocab, config.encoder_config(),
                                  config.max_facts, config.max_decode_len,
                                  copy_only=config.copy_only)
        pairs.append(EvalPair(candidate, entity.description_tokens))
    if not pairs:
        return None
    return bleu(pairs, 4)


def train(train_entities, dev_entities, config):
    """Minibatch Adam over shuffled entities; keeps the best-dev model.

    Dev decoding scores BLEU-4 after every epoch; with an empty dev
    split the final-epoch model is returned instead.  All randomness
    flows from ``config.seed``, so single-threaded runs reproduce
    bit-identically.
    """
    usable = [e for e in train_entities if e.description_tokens is not None]
    if not usable:
        raise ConfigError("training split has no described entities")
    rng = np.random.default_rng(config.seed)
    vocab = build_vocabulary(usable, config.vocab_size, config.vocab_source)
    aligned = [align_description(e, vocab) for e in usable]
    params = DecoderParams(config.dims(), config.mean_fact, rng=rng)
    state = AdamState(learning_rate=config.learning_rate)
    learnable = params.learnable()
    best = None
    best_score = None
    best_epoch = None
    loss_history = []
    dev_history = []
    order = np.arange(len(usable))
    for epoch in range(1, config.epochs + 1):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            params.zero_grads()
            for i in batch:
                entity = usable[i]
                with Tape() as tape:
                    loss = step_loss(entity, aligned[i], params, vocab, config)
                value = float(loss.data)
                if not np.isfinite(value):
                    raise TrainingDivergenceError(
                        f"non-finite loss for entity {entity.id} in epoch {epoch}")
                epoch_loss += value
                if loss.requires_grad:
                    backward(loss, tape)
            grads = []
            inv = 1.0 / len(batch)
            for p in learnable:
                p.grad *= inv
                grads.append(p.grad)
            if config.grad_clip is not None:
                _clip_gradients(grads, config.grad_clip)
            adam_step(learnable, grads, state)
        mean_loss = epoch_loss / len(usable)
        loss_history.append(mean_loss)
        dev_score = _dev_bleu4(dev_entities, params, vocab, config)
        if dev_score is not None:
            dev_history.append(dev_score)
            if best_score is None or dev_score > best_score:
                best_score = dev_score
                best_epoch = epoch
                best = params.clone()
        log.info("epoch %d: loss %.4f%s", epoch, mean_loss,
                 "" if dev_score is None else f", dev BLEU-4 {dev_score:.2f}")
    if best is None:
        best = params.clone()
        best_epoch = config.epochs
    meta = {
        "epoch": best_epoch,
        "dev_bleu4": best_score,
        "seed": config.seed,
        "loss_history": loss_history,
        "dev_bleu4_history": dev_history,
    }
    return Checkpoint(best, config, vocab, meta)


def generate_description(checkpoint, entity, max_len=None, return_trace=False):
    """Greedy decoding with everything taken from the checkpoint."""
    config = checkpoint.config
    return greedy_decode(entity, checkpoint.params, checkpoint.vocab,
                         config.encoder_config(), config.max_facts,
                         max_len if max_len is not None else config.max_decode_len,
                         copy_only=config.copy_only, return_trace=return_trace)


def count_parameters(config):
    """Closed-form learnable parameter count and per-tensor breakdown."""
    rows = [(name, shape, prod(shape))
            for name, shape, kind in param_shapes(config.dims(), config.mean_fact)
            if kind != "frozen"]
    return sum(count for _, _, count in rows), rows


def format_param_table(config):
    total, rows = count_parameters(config)
    name_w = max(len(name) for name, _, _ in rows)
    lines = [f"{name:<{name_w}}  {str(tuple(shape)):<14}  {count:>9,}"
             for name, shape, count in rows]
    lines.append(f"{'total':<{name_w}}  {'':<14}  {total:>9,}")
    return "\n".join(lines)


def save_checkpoint(checkpoint, path):
    """Serialize to the FKS1 container; float32 payload, JSON manifest."""
    entries = []
    payloads = []
    offset = 0
    for name, t in checkpoint.params.named_tensors():
        buf = t.data.astype("<f4").tobytes(order="C")
        entries.append({"name": name, "shape": list(t.data.shape),
                        "dtype": "f32", "offset": offset})
        payloads.append(buf)
        offset += len(buf)
    manifest = {
        "version": CHECKPOINT_VERSION,
        "config": checkpoint.config.to_dict(),
        "vocab": checkpoint.vocab.words,
        "meta": checkpoint.meta,
        "tensors": entries,
    }
    blob = json.dumps(manifest, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<I", len(blob)))
        handle.write(blob)
        for buf in payloads:
            handle.write(buf)


def load_checkpoint(path):
    """Read an FKS1 file back into a :class:`Checkpoint`.

    Rejects bad magic, version mismatches, truncated payloads, and
    tensors whose shapes disagree with the embedded config.
    """
    with open(path, "rb") as handle:
        raw = handle.read()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes")
    if len(raw) < 8:
        raise CheckpointError(f"{path}: file too short for a manifest")
    (manifest_len,) = struct.unpack("<I", raw[4:8])
    blob = raw[8:8 + manifest_len]
    if len(blob) != manifest_len:
        raise CheckpointError(f"{path}: manifest truncated")
    try:
        manifest = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: manifest unreadable: {exc}") from exc
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {manifest.get('version')!r}")
    config = TrainConfig.from_dict(manifest["config"])
    vocab = Vocabulary(manifest["vocab"])
    payload = raw[8 + manifest_len:]
    expected = sum(prod(e["shape"]) * 4 for e in manifest["tensors"])
    if len(payload) != expected:
        raise CheckpointError(f"{path}: payload holds {len(payload)} bytes, "
                              f"manifest declares {expected}")
    arrays = {}
    for entry in manifest["tensors"]:
        n_bytes = prod(entry["shape"]) * 4
        chunk = payload[entry["offset"]:entry["offset"] + n_bytes]
        arrays[entry["name"]] = (np.frombuffer(chunk, dtype="<f4")
                                 .reshape(entry["shape"]).astype(np.float64))
    params = DecoderParams(config.dims(), config.mean_fact, arrays=arrays)
    return Checkpoint(params, config, vocab, manifest["meta"])
