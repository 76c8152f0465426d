"""Dense float64 tensors, a reverse-mode autodiff tape, and Adam.

Every model computation in this package is assembled from the primitives
here.  Recording is explicit: an operation appends a node to the
innermost active ``Tape`` only when at least one input requires
gradients, so inference code that runs outside a tape pays nothing for
bookkeeping.  ``backward`` replays a tape once in reverse and
accumulates into ``Tensor.grad``, which lets a trainer sum gradients
over a minibatch before taking an optimizer step.

All arithmetic is double precision; checkpoints downcast to float32 on
disk (see :mod:`factdesc.training`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, InvalidMaskError, ShapeError, TrainingDivergenceError


class Tensor:
    """A dense float64 array plus gradient bookkeeping.

    ``grad`` is lazily allocated by :func:`backward` and always matches
    ``data``'s shape.  ``name`` is optional and only used for error
    messages and checkpoint manifests.
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad.fill(0.0)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, requires_grad={self.requires_grad})"


class _RowUpdate:
    """Sparse gradient contribution: add ``g`` into the listed rows."""

    __slots__ = ("idx", "g")

    def __init__(self, idx, g):
        self.idx = idx
        self.g = g


@dataclass(slots=True)
class TapeNode:
    """One recorded primitive application.

    ``grad_fn`` maps the output gradient to one contribution per input
    (``None`` where no gradient flows); values saved for the backward
    rule live in the closure.
    """

    op: str
    inputs: tuple
    output: Tensor
    grad_fn: Callable


class Tape:
    """Ordered record of primitive applications.

    Nodes are appended in execution order, which makes the record
    topologically sorted by construction.  Use as a context manager;
    tapes nest, and recording always targets the innermost one.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False


_TAPE_STACK: list[Tape] = []


def _record(op, inputs, output, grad_fn):
    if _TAPE_STACK and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        _TAPE_STACK[-1].nodes.append(TapeNode(op, inputs, output, grad_fn))
    return output


def _unbroadcast(g, shape):
    """Sum ``g`` back down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    out = Tensor(a.data + b.data)

    def grad_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _record("add", (a, b), out, grad_fn)


def mul(a, b):
    out = Tensor(a.data * b.data)

    def grad_fn(g):
        return _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)

    return _record("mul", (a, b), out, grad_fn)


def matmul(a, b):
    """Matrix product; accepts 2-D operands or a 1-D vector on either side."""
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul needs 1-D or 2-D operands, got {ad.shape} and {bd.shape}")
    if ad.shape[-1] != (bd.shape[0] if bd.ndim > 0 else -1):
        raise ShapeError(f"matmul shapes {ad.shape} and {bd.shape} do not agree")
    out = Tensor(ad @ bd)

    def grad_fn(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        if ad.ndim == 1 and bd.ndim == 2:
            return g @ bd.T, np.outer(ad, g)
        return g * bd, g * ad  # inner product of two vectors

    return _record("matmul", (a, b), out, grad_fn)


def affine(x, w, b=None):
    """``x @ w.T (+ b)`` with ``x`` (n, i), ``w`` (o, i) and ``b`` (o,)."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeError(f"affine shapes {x.data.shape} and {w.data.shape} do not agree")
    y = x.data @ w.data.T
    if b is not None:
        y += b.data
    out = Tensor(y)

    if b is None:

        def grad_fn(g):
            return g @ w.data, g.T @ x.data

        return _record("affine", (x, w), out, grad_fn)

    def grad_fn(g):
        return g @ w.data, g.T @ x.data, g.sum(axis=0)

    return _record("affine", (x, w, b), out, grad_fn)


def concat(parts, axis=0):
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def grad_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _record("concat", tuple(parts), out, grad_fn)


def tanh(x):
    out = Tensor(np.tanh(x.data))
    y = out.data

    def grad_fn(g):
        return (g * (1.0 - y * y),)

    return _record("tanh", (x,), out, grad_fn)


def sigmoid(x):
    with np.errstate(over="ignore"):
        s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s)

    def grad_fn(g):
        return (g * s * (1.0 - s),)

    return _record("sigmoid", (x,), out, grad_fn)


def relu(x):
    out = Tensor(np.maximum(x.data, 0.0))
    pos = x.data > 0

    def grad_fn(g):
        return (g * pos,)

    return _record("relu", (x,), out, grad_fn)


def masked_softmax(v, mask):
    """Softmax over the unmasked entries of a 1-D tensor.

    Masked entries come out exactly zero; the rest are stabilized by
    max-subtraction (masking enters as a -inf energy).
    """
    mask = np.asarray(mask, dtype=bool)
    if v.data.ndim != 1 or v.data.shape != mask.shape:
        raise ShapeError(f"masked_softmax got values {v.data.shape} and mask {mask.shape}")
    if not mask.any():
        raise InvalidMaskError("masked_softmax: every entry is masked")
    energies = np.where(mask, v.data, -np.inf)
    e = np.exp(energies - energies.max())
    p = e / e.sum()
    out = Tensor(p)

    def grad_fn(g):
        inner = (g * p).sum()
        return (p * (g - inner),)

    return _record("masked_softmax", (v,), out, grad_fn)


def embedding_rows(table, indices):
    """Gather rows of a 2-D table; the gradient scatter-adds them back."""
    idx = np.asarray(indices, dtype=np.intp)
    out = Tensor(table.data[idx])

    def grad_fn(g):
        return (_RowUpdate(idx, g),)

    return _record("embedding_rows", (table,), out, grad_fn)


def nll(p, index):
    """Negative log-likelihood of class ``index`` under distribution ``p``."""
    i = int(index)
    val = p.data[i]
    out = Tensor(-np.log(val))

    def grad_fn(g):
        gp = np.zeros_like(p.data)
        gp[i] = -g / val
        return (gp,)

    return _record("nll", (p,), out, grad_fn)


def gate_blend(z, a, b):
    """``(1 - z) * a + z * b`` elementwise (the GRU state interpolation)."""
    out = Tensor((1.0 - z.data) * a.data + z.data * b.data)

    def grad_fn(g):
        return g * (b.data - a.data), g * (1.0 - z.data), g * z.data

    return _record("gate_blend", (z, a, b), out, grad_fn)


def sum_rows(x):
    """Sum a 2-D tensor over rows, keeping a (1, n) result."""
    out = Tensor(x.data.sum(axis=0, keepdims=True))
    shape = x.data.shape

    def grad_fn(g):
        return (np.broadcast_to(g, shape),)

    return _record("sum_rows", (x,), out, grad_fn)


def sum_all(x):
    out = Tensor(x.data.sum())
    shape = x.data.shape

    def grad_fn(g):
        return (np.broadcast_to(g, shape),)

    return _record("sum_all", (x,), out, grad_fn)


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))
    orig = x.data.shape

    def grad_fn(g):
        return (g.reshape(orig),)

    return _record("reshape", (x,), out, grad_fn)


def backward(loss, tape):
    """Reverse-mode accumulation from a scalar loss over one tape.

    Gradients are *added* into ``Tensor.grad`` (allocated as zeros when
    absent), so parameters not reached by the loss keep zero gradients
    and repeated calls accumulate across a minibatch.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if tape.nodes and not any(n.output is loss for n in reversed(tape.nodes)):
        raise ShapeError("backward: loss is not an output recorded on this tape")
    seed = np.ones_like(loss.data)
    loss.grad = seed if loss.grad is None else loss.grad + seed
    for node in reversed(tape.nodes):
        g = node.output.grad
        if g is None:
            continue
        contribs = node.grad_fn(g)
        for t, c in zip(node.inputs, contribs):
            if c is None or not t.requires_grad:
                continue
            if isinstance(c, _RowUpdate):
                if t.grad is None:
                    t.grad = np.zeros_like(t.data)
                # faster than np.add.at for the short index lists seen here,
                # still correct for duplicate indices
                grad = t.grad
                for row, g_row in zip(c.idx, c.g):
                    grad[row] += g_row
            elif t.grad is None:
                t.grad = np.array(c)  # owns memory; c may be a view
            else:
                t.grad += c


@dataclass
class AdamState:
    """Adam moments and hyperparameters for one parameter list.

    Moment arrays are allocated lazily on the first step and keyed by
    position, so the same parameter order must be used on every call.
    """

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place.

    ``params`` and ``grads`` are parallel lists; parameter data and the
    state are mutated.  A non-finite gradient aborts with the offending
    parameter named.
    """
    if state.learning_rate <= 0:
        raise ConfigError(f"adam_step: learning_rate must be positive, got {state.learning_rate}")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    scale = state.learning_rate / bc1
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: gradient shape {g.shape} does not match "
                             f"parameter {p.name or i} of shape {p.data.shape}")
        if not np.isfinite(g).all():
            raise TrainingDivergenceError(f"non-finite gradient for parameter {p.name or i}")
        m, v = state.m[i], state.v[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= scale * m / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def grad_check(function, params, perturbation=1e-5):
    """Max relative error between tape gradients and central differences.

    ``function(params)`` must return a scalar ``Tensor``.  The analytic
    pass runs once under a fresh tape; every parameter element is then
    perturbed by ``+/- perturbation`` with the function re-evaluated
    outside any tape.
    """
    if perturbation <= 0:
        raise ConfigError("grad_check: perturbation must be positive")
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = function(params)
        if loss.data.size != 1:
            raise ShapeError("grad_check: function must return a scalar")
    backward(loss, tape)
    worst = 0.0
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + perturbation
            hi = float(function(params).data)
            flat[i] = saved - perturbation
            lo = float(function(params).data)
            flat[i] = saved
            numeric = (hi - lo) / (2.0 * perturbation)
            denom = max(1.0, abs(aflat[i]), abs(numeric))
            worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst
