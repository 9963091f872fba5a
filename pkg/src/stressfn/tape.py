"""Reverse-mode differentiation over numpy arrays.

Every training loss in this package is a scalar produced by a short chain of
dense-array operations (layer products, elementwise maps, quadrature sums).
A fresh :class:`Tape` records that chain each iteration; one reversed sweep
over the recorded nodes accumulates d(loss)/d(node) for every node, which is
how parameter gradients are obtained.  Operations called on plain ndarrays
(no :class:`Var` argument) skip recording entirely and return ndarrays, so
oracles and post-processing reuse the same code paths at full numpy speed.
"""

from __future__ import annotations

import numpy as np

from .errors import DivergedEvaluationError

_STACK: list["Tape"] = []


def active_tape():
    return _STACK[-1] if _STACK else None


class Tape:
    """Append-only record of operations, in creation (topological) order.

    Inputs always exist before their consumers, so iterating ``nodes`` in
    reverse is a valid adjoint schedule; no sorting is ever needed.
    """

    def __init__(self):
        self.nodes: list[Var] = []

    def __enter__(self):
        _STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _STACK.pop()
        assert popped is self
        return False

    def leaf(self, value) -> "Var":
        return Var(value, op="leaf")

    def backward(self, out: "Var"):
        """Accumulate adjoints of ``out`` into ``.grad`` of every node."""
        if not isinstance(out, Var):
            raise TypeError("backward target must be a Var")
        if out.value.size != 1:
            raise ValueError("backward target must be scalar")
        if not np.isfinite(out.value):
            raise DivergedEvaluationError(
                "non-finite loss; first bad node: %s" % self.first_nonfinite()
            )
        out.grad = np.ones_like(out.value)
        for node in reversed(self.nodes):
            if node.grad is None or node._bwd is None:
                continue
            node._bwd(node.grad)

    def first_nonfinite(self):
        for i, node in enumerate(self.nodes):
            if not np.all(np.isfinite(node.value)):
                return f"node {i} ({node.op})"
        return "none recorded"


class Var:
    """One recorded array value plus its adjoint accumulator."""

    __slots__ = ("value", "grad", "op", "_bwd")

    def __init__(self, value, op="leaf", _bwd=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.op = op
        self._bwd = _bwd
        tape = active_tape()
        if tape is None:
            raise RuntimeError("Var created outside an active Tape")
        tape.nodes.append(self)

    def _acc(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=float, copy=True)
        else:
            self.grad += g

    @property
    def shape(self):
        return self.value.shape

    # arithmetic sugar; all heavy lifting in the module-level primitives
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return pow_const(self, p)


def value_of(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=float)


def node(value, pairs, op="custom"):
    """Create a Var from ``value`` with backward contributions ``pairs``.

    ``pairs`` is a list of ``(input, grad_fn)`` where ``grad_fn(g)`` returns
    the adjoint contribution for that input given the output adjoint ``g``.
    Entries whose input is not a Var are dropped.  If no input is a Var the
    plain ndarray is returned, keeping untaped evaluation allocation-cheap.
    """
    tracked = [(v, fn) for v, fn in pairs if isinstance(v, Var)]
    if not tracked:
        return value

    def bwd(g):
        for v, fn in tracked:
            v._acc(fn(g))

    return Var(value, op=op, _bwd=bwd)


def _unbroadcast(g, shape):
    """Reduce adjoint ``g`` back to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise primitives


def add(a, b):
    av, bv = value_of(a), value_of(b)
    return node(av + bv,
                [(a, lambda g: _unbroadcast(g, av.shape)),
                 (b, lambda g: _unbroadcast(g, bv.shape))], op="add")


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    return node(av - bv,
                [(a, lambda g: _unbroadcast(g, av.shape)),
                 (b, lambda g: _unbroadcast(-g, bv.shape))], op="sub")


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    return node(av * bv,
                [(a, lambda g: _unbroadcast(g * bv, av.shape)),
                 (b, lambda g: _unbroadcast(g * av, bv.shape))], op="mul")


def div(a, b):
    av, bv = value_of(a), value_of(b)
    inv = 1.0 / bv
    out = av * inv
    return node(out,
                [(a, lambda g: _unbroadcast(g * inv, av.shape)),
                 (b, lambda g: _unbroadcast(-g * out * inv, bv.shape))], op="div")


def neg(a):
    return node(-value_of(a), [(a, lambda g: -g)], op="neg")


def pow_const(a, p):
    av = value_of(a)
    out = av ** p
    return node(out, [(a, lambda g: g * p * av ** (p - 1))], op="pow")


def tanh(a):
    t = np.tanh(value_of(a))
    return node(t, [(a, lambda g: g * (1.0 - t * t))], op="tanh")


def exp(a):
    e = np.exp(value_of(a))
    return node(e, [(a, lambda g: g * e)], op="exp")


def log(a):
    av = value_of(a)
    return node(np.log(av), [(a, lambda g: g / av)], op="log")


def sin(a):
    av = value_of(a)
    return node(np.sin(av), [(a, lambda g: g * np.cos(av))], op="sin")


def cos(a):
    av = value_of(a)
    return node(np.cos(av), [(a, lambda g: -g * np.sin(av))], op="cos")


def sqrt(a):
    s = np.sqrt(value_of(a))
    return node(s, [(a, lambda g: g * 0.5 / s)], op="sqrt")


# ---------------------------------------------------------------------------
# shape and reduction primitives


def matprod(w, a):
    """Contraction ``out[i, ...] = sum_j w[i, j] * a[j, ...]``.

    BLAS-backed; this is the network layer product with ``a`` holding one
    leading channel axis and any trailing payload axes.
    """
    wv, av = value_of(w), value_of(a)
    rest = av.shape[1:]
    a2 = av.reshape(av.shape[0], -1)
    out = (wv @ a2).reshape((wv.shape[0],) + rest)
    return node(
        out,
        [(w, lambda g: g.reshape(wv.shape[0], -1) @ a2.T),
         (a, lambda g: (wv.T @ g.reshape(wv.shape[0], -1)).reshape(av.shape))],
        op="matprod",
    )


def total(a):
    av = value_of(a)
    return node(np.asarray(av.sum()),
                [(a, lambda g: np.broadcast_to(g, av.shape))], op="total")


def mean(a):
    av = value_of(a)
    n = av.size
    return node(np.asarray(av.mean()),
                [(a, lambda g: np.broadcast_to(g / n, av.shape))], op="mean")


def wsum(a, w):
    """Quadrature reduction ``sum(a * w)`` with constant weights ``w``."""
    av = value_of(a)
    wv = np.asarray(w, dtype=float)
    return node(np.asarray(np.vdot(av, np.broadcast_to(wv, av.shape))),
                [(a, lambda g: g * wv)], op="wsum")


def take(a, key):
    """Basic indexing ``a[key]`` (ints / slices only, no fancy indexing)."""
    av = value_of(a)
    out = av[key]

    def back(g):
        gz = np.zeros_like(av)
        gz[key] += g
        return gz

    return node(np.array(out, copy=True), [(a, back)], op="take")


def reshape(a, shape):
    av = value_of(a)
    return node(av.reshape(shape), [(a, lambda g: g.reshape(av.shape))],
                op="reshape")


def expand_dims(a, axis):
    av = value_of(a)
    return node(np.expand_dims(av, axis),
                [(a, lambda g: np.squeeze(g, axis=axis))], op="expand_dims")


def concat(parts, axis=0):
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    pairs = []
    for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
        idx = (slice(None),) * (axis % out.ndim) + (slice(lo, hi),)
        pairs.append((part, lambda g, idx=idx: g[idx]))
    return node(out, pairs, op="concat")


def gather_cols(a, idx):
    """Column gather ``out[:, n] = a[:, idx[n]]`` with scatter-add backward."""
    av = value_of(a)
    idx = np.asarray(idx)
    out = av[:, idx]

    def back(g):
        gz = np.zeros_like(av)
        np.add.at(gz.T, idx, g.T)
        return gz

    return node(out, [(a, back)], op="gather_cols")
