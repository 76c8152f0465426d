"""Sequence decoder: attention over facts, GRU state, two output heads.

Each step selects one slot of the encoded entity by attention argmax.
Picking a real fact routes the step through the copy head, which points
at a position inside that fact's factual words; picking the mean-fact
slot routes it through the vocabulary softmax instead.  The GRU input
concatenates the selected fact embedding with feedback from the
previous step: the emitted vocabulary word's embedding or the copied
position's one-hot, never both.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import EOS, UNK
from .encoder import encode_entity, fixed_mean_vector
from .errors import ConfigError, EmptyFactError, ShapeError
from .tensor import (
    Tensor,
    add,
    affine,
    concat,
    embedding_rows,
    gate_blend,
    masked_softmax,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    tanh,
)


@dataclass(frozen=True)
class ModelDims:
    """Sizes every parameter shape derives from."""

    embed_dim: int = 100    # word and fact embeddings
    hidden_dim: int = 100   # GRU state
    attn_dim: int = 100     # attention hidden layer
    head_dim: int = 100     # vocab/copy head hidden layer
    vocab_size: int = 1003  # specials included
    copy_width: int = 60    # positions the copy head can point at

    @property
    def gru_input(self):
        # [selected fact; previous word embedding; previous copy one-hot]
        return 2 * self.embed_dim + self.copy_width

    @property
    def pair_dim(self):
        return self.embed_dim + self.hidden_dim


def param_shapes(dims, mean_fact_mode="mean"):
    """Ordered (name, shape, init kind) for every model tensor.

    Kinds: ``weight`` U(-1/sqrt(fan_in), +1/sqrt(fan_in)), ``bias``
    zeros, ``embedding`` U(-0.1, 0.1), ``frozen`` U(-1/sqrt(d), +1/sqrt(d))
    and excluded from training.
    """
    d, H = dims.embed_dim, dims.hidden_dim
    shapes = [
        ("word_emb", (dims.vocab_size, d), "embedding"),
        ("attn_hidden_w", (dims.attn_dim, dims.pair_dim), "weight"),
        ("attn_hidden_b", (dims.attn_dim,), "bias"),
        ("attn_energy_w", (1, dims.attn_dim), "weight"),
        ("attn_energy_b", (1,), "bias"),
    ]
    for gate in ("update", "reset", "cand"):
        shapes += [
            (f"gru_{gate}_x", (H, dims.gru_input), "weight"),
            (f"gru_{gate}_h", (H, H), "weight"),
            (f"gru_{gate}_b", (H,), "bias"),
        ]
    shapes += [
        ("vocab_hidden_w", (dims.head_dim, dims.pair_dim), "weight"),
        ("vocab_hidden_b", (dims.head_dim,), "bias"),
        ("vocab_out_w", (dims.vocab_size, dims.head_dim), "weight"),
        ("vocab_out_b", (dims.vocab_size,), "bias"),
        ("copy_hidden_w", (dims.head_dim, dims.pair_dim), "weight"),
        ("copy_hidden_b", (dims.head_dim,), "bias"),
        ("copy_out_w", (dims.copy_width, dims.head_dim), "weight"),
        ("copy_out_b", (dims.copy_width,), "bias"),
    ]
    if mean_fact_mode == "fixed_random":
        shapes.append(("mean_fact_fixed", (1, d), "frozen"))
    return shapes


def _init_array(rng, shape, kind):
    if kind == "bias":
        return np.zeros(shape)
    if kind == "embedding":
        return rng.uniform(-0.1, 0.1, shape)
    if kind == "frozen":
        return fixed_mean_vector(rng, shape[1])
    bound = 1.0 / np.sqrt(shape[1])
    return rng.uniform(-bound, bound, shape)


class DecoderParams:
    """Named tensor container for the whole model.

    Tensor order is fixed by :func:`param_shapes`, which keeps
    checkpoints, Adam state, and parameter counting consistent.
    """

    def __init__(self, dims, mean_fact_mode="mean", rng=None, arrays=None):
        self.dims = dims
        self.mean_fact_mode = mean_fact_mode
        self._names = []
        rng = rng if rng is not None else np.random.default_rng(0)
        for name, shape, kind in param_shapes(dims, mean_fact_mode):
            if arrays is None:
                data = _init_array(rng, shape, kind)
            else:
                if name not in arrays:
                    raise ConfigError(f"missing tensor {name!r}")
                data = arrays[name]
                if tuple(data.shape) != tuple(shape):
                    raise ShapeError(f"tensor {name!r} has shape {tuple(data.shape)}, "
                                     f"expected {tuple(shape)}")
            tensor = Tensor(data, requires_grad=(kind != "frozen"), name=name)
            setattr(self, name, tensor)
            self._names.append(name)

    def named_tensors(self):
        return [(name, getattr(self, name)) for name in self._names]

    def learnable(self):
        return [t for _, t in self.named_tensors() if t.requires_grad]

    def zero_grads(self):
        for t in self.learnable():
            t.zero_grad()

    def fixed_mean(self):
        return getattr(self, "mean_fact_fixed", None)

    def clone(self):
        arrays = {name: t.data.copy() for name, t in self.named_tensors()}
        return DecoderParams(self.dims, self.mean_fact_mode, arrays=arrays)

    def encode(self, entity, vocab, enc_cfg, max_facts):
        if enc_cfg.mean_fact != self.mean_fact_mode:
            raise ConfigError(f"encoder mean_fact mode {enc_cfg.mean_fact!r} does not match "
                              f"the parameters' {self.mean_fact_mode!r}")
        return encode_entity(entity, self.word_emb, vocab, enc_cfg, max_facts,
                             fixed_mean=self.fixed_mean())


@dataclass
class DecoderStepState:
    """Decoder state after one step; feedback vectors are mutually exclusive."""

    hidden: Tensor
    word_feedback: Tensor
    copy_feedback: Tensor
    alpha: np.ndarray
    context: np.ndarray

    def feedback_exclusive(self):
        w = bool(np.any(self.word_feedback.data))
        v = bool(np.any(self.copy_feedback.data))
        return not (w and v)


@lru_cache(maxsize=None)
def _ones_column(rows):
    return Tensor(np.ones((rows, 1)))


@lru_cache(maxsize=None)
def _zero_row(width):
    return Tensor(np.zeros((1, width)))


@lru_cache(maxsize=None)
def _slot_selector(slots, index):
    row = np.zeros((1, slots))
    row[0, index] = 1.0
    return Tensor(row)


@lru_cache(maxsize=None)
def _copy_onehot(width, pos):
    row = np.zeros((1, width))
    row[0, pos] = 1.0
    return Tensor(row)


@lru_cache(maxsize=None)
def _all_true(n):
    return np.ones(n, dtype=bool)


@lru_cache(maxsize=None)
def _first_n(width, n):
    mask = np.zeros(width, dtype=bool)
    mask[:n] = True
    return mask


def fact_attention(fact_embs, mask, h_prev, params):
    """Attention distribution over the entity's slots given h_{t-1}."""
    slots = fact_embs.data.shape[0]
    tiled = matmul(_ones_column(slots), h_prev)
    pairs = concat([fact_embs, tiled], axis=1)
    hidden = tanh(affine(pairs, params.attn_hidden_w, params.attn_hidden_b))
    energies = affine(hidden, params.attn_energy_w, params.attn_energy_b)
    return masked_softmax(reshape(energies, (slots,)), mask)


def select_fact(alpha):
    """Argmax slot; ties break toward the lowest index."""
    return int(np.argmax(alpha.data))


def slot_embedding(fact_embs, slot):
    """Row ``slot`` of the slot matrix as a (1, d) tensor."""
    return matmul(_slot_selector(fact_embs.data.shape[0], slot), fact_embs)


def attention_context(alpha, fact_embs):
    """Attention-weighted mix of all slots (the vocabulary head's input)."""
    return matmul(reshape(alpha, (1, alpha.data.shape[0])), fact_embs)


def decoder_step(f_t, w_prev, v_prev, h_prev, params):
    """One GRU update from [f_t; w_{t-1}; v_{t-1}] and h_{t-1}."""
    x = concat([f_t, w_prev, v_prev], axis=1)
    z = sigmoid(add(affine(x, params.gru_update_x, params.gru_update_b),
                    affine(h_prev, params.gru_update_h)))
    r = sigmoid(add(affine(x, params.gru_reset_x, params.gru_reset_b),
                    affine(h_prev, params.gru_reset_h)))
    cand = tanh(add(affine(x, params.gru_cand_x, params.gru_cand_b),
                    affine(mul(r, h_prev), params.gru_cand_h)))
    return gate_blend(z, h_prev, cand)


def vocab_logits(c_t, h_t, params):
    """Distribution over the vocabulary from [c_t; h_t]."""
    hidden = relu(affine(concat([c_t, h_t], axis=1),
                         params.vocab_hidden_w, params.vocab_hidden_b))
    scores = affine(hidden, params.vocab_out_w, params.vocab_out_b)
    size = params.dims.vocab_size
    return masked_softmax(reshape(scores, (size,)), _all_true(size))


def copy_logits(f_t, h_t, n_words, params):
    """Distribution over copy positions 1..n_words from [f_t; h_t]."""
    width = params.dims.copy_width
    if n_words == 0:
        raise EmptyFactError("copy head selected a fact with no factual words")
    if not 0 < n_words <= width:
        raise ShapeError(f"n_words {n_words} outside 1..{width}")
    hidden = relu(affine(concat([f_t, h_t], axis=1),
                         params.copy_hidden_w, params.copy_hidden_b))
    scores = affine(hidden, params.copy_out_w, params.copy_out_b)
    return masked_softmax(reshape(scores, (width,)), _first_n(width, n_words))


def _select_live_slot(enc, mask, h_prev, params):
    """Attend and pick a slot, masking out facts with nothing to copy."""
    while mask.any():
        alpha = fact_attention(enc.embeddings, mask, h_prev, params)
        slot = select_fact(alpha)
        if slot != enc.mean_slot and enc.word_counts[slot] == 0:
            mask[slot] = False
            continue
        return alpha, slot
    return None


def greedy_decode(entity, params, vocab, enc_cfg, max_facts, max_len,
                  copy_only=False, return_trace=False):
    """Greedy generation for one entity.

    Stops at ``<EOS>`` or ``max_len``; ``<UNK>`` emissions are stripped
    from the returned tokens (the trace keeps every step).  With
    ``copy_only`` the mean-fact slot is never selectable, so only
    factual words can be emitted and decoding runs until ``max_len``.
    """
    enc = params.encode(entity, vocab, enc_cfg, max_facts)
    mask = enc.mask.copy()
    if copy_only:
        mask[enc.mean_slot] = False
    dims = params.dims
    state = DecoderStepState(
        hidden=_zero_row(dims.hidden_dim),
        word_feedback=_zero_row(dims.embed_dim),
        copy_feedback=_zero_row(dims.copy_width),
        alpha=np.zeros(enc.slots),
        context=np.zeros(dims.embed_dim),
    )
    tokens = []
    trace = []
    for _ in range(max_len):
        selected = _select_live_slot(enc, mask, state.hidden, params)
        if selected is None:
            break
        alpha, slot = selected
        f_t = slot_embedding(enc.embeddings, slot)
        h_t = decoder_step(f_t, state.word_feedback, state.copy_feedback,
                           state.hidden, params)
        if slot == enc.mean_slot:
            context = attention_context(alpha, enc.embeddings)
            dist = vocab_logits(context, h_t, params)
            word_idx = int(np.argmax(dist.data))
            token = vocab.word(word_idx)
            trace.append((token, alpha.data.copy()))
            if token == EOS:
                break
            tokens.append(token)
            state = DecoderStepState(h_t, embedding_rows(params.word_emb, [word_idx]),
                                     _zero_row(dims.copy_width),
                                     alpha.data, context.data[0])
        else:
            dist = copy_logits(f_t, h_t, enc.word_counts[slot], params)
            pos = int(np.argmax(dist.data))
            token = entity.facts[slot].factual_words[pos]
            trace.append((token, alpha.data.copy()))
            tokens.append(token)
            state = DecoderStepState(h_t, _zero_row(dims.embed_dim),
                                     _copy_onehot(dims.copy_width, pos),
                                     alpha.data, np.zeros(dims.embed_dim))
        assert state.feedback_exclusive()
    tokens = [t for t in tokens if t != UNK]
    if return_trace:
        return tokens, trace
    return tokens
