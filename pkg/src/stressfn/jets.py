"""Truncated Taylor jets: input derivatives of scalar fields up to order 4.

A :class:`Jet` carries the raw partial derivatives of a scalar field with
respect to 1 or 2 input variables, for every multi-index of total degree up
to ``order``.  Arithmetic propagates those partials exactly (generalized
Leibniz for products, Taylor-in-the-nilpotent-part for univariate maps such
as tanh), so second and fourth derivatives of network outputs are available
without nesting first-order differentiation.

Payload layout: ``data[..., k, p]`` where ``k`` indexes the multi-index in
the canonical order of :func:`multi_indices` and ``p`` indexes evaluation
points.  The payload may be a plain ndarray or a :mod:`stressfn.tape` Var;
in the latter case loss gradients with respect to network parameters flow
through every jet coefficient (reverse over jets).
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np

from . import tape
from .errors import InvalidInputError, SingularityError, UnsupportedOrderError
from .tape import Tape, Var, node, value_of

MAX_ORDER = 4
MAX_VARS = 2


@lru_cache(maxsize=None)
def multi_indices(n_vars, order):
    """Canonical multi-index order: by total degree, then x-degree descending."""
    if n_vars == 1:
        return tuple((d,) for d in range(order + 1))
    out = []
    for d in range(order + 1):
        for i in range(d, -1, -1):
            out.append((i, d - i))
    return tuple(out)


@lru_cache(maxsize=None)
def index_pos(n_vars, order):
    return {m: k for k, m in enumerate(multi_indices(n_vars, order))}


@lru_cache(maxsize=None)
def mul_table(n_vars, order):
    """Leibniz table: entries (k_out, k_a, k_b, coeff) over derivative storage."""
    idx = multi_indices(n_vars, order)
    pos = index_pos(n_vars, order)
    entries = []
    for gamma in idx:
        k_out = pos[gamma]
        ranges = [range(g + 1) for g in gamma]
        if n_vars == 1:
            combos = [(a,) for a in ranges[0]]
        else:
            combos = [(a, b) for a in ranges[0] for b in ranges[1]]
        for alpha in combos:
            beta = tuple(g - a for g, a in zip(gamma, alpha))
            coeff = 1.0
            for g, a in zip(gamma, alpha):
                coeff *= comb(g, a)
            entries.append((k_out, pos[alpha], pos[beta], coeff))
    return tuple(entries)


def _check_order(n_vars, order):
    if not (1 <= n_vars <= MAX_VARS):
        raise UnsupportedOrderError(f"n_vars={n_vars} unsupported (max {MAX_VARS})")
    if not (0 <= order <= MAX_ORDER):
        raise UnsupportedOrderError(f"order={order} unsupported (max {MAX_ORDER})")


class Jet:
    """Scalar field value plus raw input-partials up to a fixed order."""

    __slots__ = ("n_vars", "order", "data")

    def __init__(self, n_vars, order, data):
        _check_order(n_vars, order)
        self.n_vars = n_vars
        self.order = order
        self.data = data
        k = value_of(data).shape[-2]
        if k != len(multi_indices(n_vars, order)):
            raise InvalidInputError(
                f"payload has {k} coefficients, expected "
                f"{len(multi_indices(n_vars, order))}")

    @property
    def width(self):
        return len(multi_indices(self.n_vars, self.order))

    @property
    def value(self):
        return tape.take(self.data, (Ellipsis, 0, slice(None)))

    def partial(self, midx):
        """Raw partial for multi-index ``midx`` (int accepted for 1 var)."""
        if isinstance(midx, int):
            midx = (midx,)
        k = index_pos(self.n_vars, self.order).get(tuple(midx))
        if k is None:
            raise InvalidInputError(f"multi-index {midx} outside jet of order {self.order}")
        return tape.take(self.data, (Ellipsis, k, slice(None)))

    def partials_dict(self):
        """Plain {multi-index: float or array} view, for inspection and tests."""
        arr = value_of(self.data)
        out = {}
        for k, m in enumerate(multi_indices(self.n_vars, self.order)):
            key = m[0] if self.n_vars == 1 else m
            sl = arr[..., k, :]
            out[key] = float(sl[..., 0]) if sl.size == 1 else np.array(sl)
        return out

    def _compat(self, other):
        if self.n_vars != other.n_vars or self.order != other.order:
            raise InvalidInputError(
                f"incompatible jets: ({self.n_vars},{self.order}) vs "
                f"({other.n_vars},{other.order})")

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._compat(other)
            return Jet(self.n_vars, self.order, tape.add(self.data, other.data))
        return Jet(self.n_vars, self.order, add_value(self.data, other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._compat(other)
            return Jet(self.n_vars, self.order, tape.sub(self.data, other.data))
        return Jet(self.n_vars, self.order, add_value(self.data, -np.asarray(other, float)))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return Jet(self.n_vars, self.order, tape.neg(self.data))

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._compat(other)
            table = mul_table(self.n_vars, self.order)
            return Jet(self.n_vars, self.order,
                       jet_mul_data(self.data, other.data, table, self.width))
        return Jet(self.n_vars, self.order, tape.mul(self.data, _coef(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.n_vars, self.order, tape.div(self.data, _coef(other)))

    def __rtruediv__(self, other):
        return reciprocal(self) * other


def _coef(c):
    """Scalar-like multiplier broadcast over every jet coefficient."""
    if isinstance(c, Var):
        if c.value.ndim == 0:
            return c
        return tape.expand_dims(c, -2)
    c = np.asarray(c, dtype=float)
    return c if c.ndim == 0 else c[..., None, :]


# ---------------------------------------------------------------------------
# layout-aware primitives


def expand_value(x, width):
    """Embed a value track ``(..., P)`` as a jet payload with zero partials."""
    xv = value_of(x)
    out = np.zeros(xv.shape[:-1] + (width,) + xv.shape[-1:])
    out[..., 0, :] = xv
    return node(out, [(x, lambda g: np.array(g[..., 0, :], copy=True))], op="expand_value")


def drop_value(a):
    """Copy of a jet payload with the value slot zeroed (the nilpotent part)."""
    av = value_of(a)
    out = np.array(av, copy=True)
    out[..., 0, :] = 0.0

    def back(g):
        gz = np.array(g, copy=True)
        gz[..., 0, :] = 0.0
        return gz

    return node(out, [(a, back)], op="drop_value")


def add_value(a, c):
    """Add a constant (or value track) to the value slot only."""
    av = value_of(a)
    cv = value_of(c)
    out = np.array(av, copy=True)
    out[..., 0, :] += cv
    return node(out,
                [(a, lambda g: g),
                 (c, lambda g: tape._unbroadcast(np.array(g[..., 0, :], copy=True), cv.shape))],
                op="add_value")


def affine_jet(w, b, a):
    """Layer transform ``out = W @ a`` with bias added to the value slot.

    ``a`` is a stacked payload (n_in, K, P); the bias, being constant in the
    input variables, only shifts the function value.
    """
    wv, bv, av = value_of(w), value_of(b), value_of(a)
    rest = av.shape[1:]
    a2 = av.reshape(av.shape[0], -1)
    out = (wv @ a2).reshape((wv.shape[0],) + rest)
    out[:, 0, :] += bv[:, None]
    return node(
        out,
        [(w, lambda g: g.reshape(wv.shape[0], -1) @ a2.T),
         (b, lambda g: g[:, 0, :].sum(axis=-1)),
         (a, lambda g: (wv.T @ g.reshape(wv.shape[0], -1)).reshape(av.shape))],
        op="affine_jet",
    )


def jet_mul_data(a, b, table, width):
    """Leibniz product of two jet payloads of identical shape."""
    av, bv = value_of(a), value_of(b)
    if av.shape != bv.shape:
        raise InvalidInputError(f"jet product shape mismatch {av.shape} vs {bv.shape}")
    out = np.zeros_like(av)
    for k, i, j, c in table:
        out[..., k, :] += c * (av[..., i, :] * bv[..., j, :])

    def back_a(g):
        ga = np.zeros_like(av)
        for k, i, j, c in table:
            ga[..., i, :] += c * (bv[..., j, :] * g[..., k, :])
        return ga

    def back_b(g):
        gb = np.zeros_like(bv)
        for k, i, j, c in table:
            gb[..., j, :] += c * (av[..., i, :] * g[..., k, :])
        return gb

    return node(out, [(a, back_a), (b, back_b)], op="jet_mul")


# ---------------------------------------------------------------------------
# construction


def jet_seed(var_index, value, n_vars, order):
    """Jet of the identity coordinate ``x_{var_index}`` evaluated at ``value``."""
    _check_order(n_vars, order)
    if not (0 <= var_index < n_vars):
        raise InvalidInputError(f"var_index {var_index} out of range for {n_vars} vars")
    v = np.atleast_1d(np.asarray(value, dtype=float))
    width = len(multi_indices(n_vars, order))
    data = np.zeros(v.shape[:-1] + (width,) + v.shape[-1:])
    data[..., 0, :] = v
    if order >= 1:
        unit = tuple(1 if i == var_index else 0 for i in range(n_vars))
        data[..., index_pos(n_vars, order)[unit], :] = 1.0
    return Jet(n_vars, order, data)


def jet_const(value, n_vars, order):
    """Jet of a constant field (all partials zero)."""
    _check_order(n_vars, order)
    v = np.atleast_1d(np.asarray(value, dtype=float))
    width = len(multi_indices(n_vars, order))
    data = np.zeros(v.shape[:-1] + (width,) + v.shape[-1:])
    data[..., 0, :] = v
    return Jet(n_vars, order, data)


def seed_xy(points, order):
    """Seed 2-var jets (x, y) for an ``(P, 2)`` point array."""
    return (jet_seed(0, points[:, 0], 2, order),
            jet_seed(1, points[:, 1], 2, order))


# ---------------------------------------------------------------------------
# univariate composition


def compose(j, derivs):
    """Jet of ``g(f)`` given ``derivs = [g(v), g'(v), ..., g^(order)(v)]``.

    ``v`` is the value track of ``j``; each ``derivs[k]`` is a value-track
    array or Var.  Exact for all retained partials: with ``u`` the nilpotent
    part of ``j``, the truncated Taylor sum over ``u**k`` terminates.
    """
    width = j.width
    out = expand_value(derivs[0], width)
    if j.order >= 1:
        table = mul_table(j.n_vars, j.order)
        u = drop_value(j.data)
        pw = u
        fact = 1.0
        for k in range(1, j.order + 1):
            fact *= k
            ck = tape.mul(derivs[k], 1.0 / fact) if fact != 1.0 else derivs[k]
            out = tape.add(out, tape.mul(pw, _coef(ck)))
            if k < j.order:
                pw = jet_mul_data(pw, u, table, width)
    return Jet(j.n_vars, j.order, out)


def tanh(j):
    """tanh of a jet; higher derivatives from the t' = 1 - t^2 recurrence."""
    t = tape.tanh(j.value)
    derivs = [t]
    if j.order >= 1:
        g1 = tape.sub(1.0, tape.mul(t, t))
        derivs.append(g1)
    if j.order >= 2:
        derivs.append(tape.mul(-2.0, tape.mul(t, g1)))
    if j.order >= 3:
        t2 = tape.mul(t, t)
        derivs.append(tape.mul(g1, tape.sub(tape.mul(6.0, t2), 2.0)))
    if j.order >= 4:
        t3 = tape.mul(t2, t)
        derivs.append(tape.mul(g1, tape.sub(tape.mul(16.0, t), tape.mul(24.0, t3))))
    return compose(j, derivs)


@lru_cache(maxsize=None)
def _degree_slots(n_vars, order):
    idx = multi_indices(n_vars, order)
    return tuple(tuple(k for k, m in enumerate(idx) if sum(m) == d)
                 for d in range(order + 1))


def tanh_fused(j):
    """Single-node tanh of an order<=2 jet (hot path for layer activations).

    Mathematically identical to :func:`tanh`; the forward and its adjoint are
    written out by hand to cut per-iteration allocations on large batches.
    """
    if j.order > 2:
        return tanh(j)
    n_vars, order = j.n_vars, j.order
    slots = _degree_slots(n_vars, order)
    a = j.data
    av = value_of(a)
    v = av[..., 0, :]
    t = np.tanh(v)
    d1 = 1.0 - t * t
    out = np.empty_like(av)
    out[..., 0, :] = t
    for m in slots[1] if order >= 1 else ():
        out[..., m, :] = d1 * av[..., m, :]
    if order == 2:
        d2 = -2.0 * t * d1
        # squared nilpotent part: degree-2 coefficients of u*u in derivative storage
        if n_vars == 1:
            u1 = av[..., 1, :]
            sq = (u1 * u1,)
        else:
            ux, uy = av[..., 1, :], av[..., 2, :]
            sq = (ux * ux, ux * uy, uy * uy)
        for m, s in zip(slots[2], sq):
            out[..., m, :] = d1 * av[..., m, :] + d2 * s

    def back(g):
        ga = np.empty_like(av)
        vbar = d1 * g[..., 0, :]
        d2b = -2.0 * t * d1
        for m in slots[1] if order >= 1 else ():
            ga[..., m, :] = d1 * g[..., m, :]
            vbar += d2b * av[..., m, :] * g[..., m, :]
        if order == 2:
            d3 = d1 * (6.0 * t * t - 2.0)
            for m, s in zip(slots[2], sq):
                ga[..., m, :] = d1 * g[..., m, :]
                vbar += (d2b * av[..., m, :] + d3 * s) * g[..., m, :]
            # degree-1 slots also feel the squared term of each degree-2 row
            if n_vars == 1:
                ga[..., 1, :] += d2b * 2.0 * av[..., 1, :] * g[..., 2, :]
            else:
                kx, ky = slots[1]
                k20, k11, k02 = slots[2]
                ga[..., kx, :] += d2b * (2.0 * av[..., kx, :] * g[..., k20, :]
                                         + av[..., ky, :] * g[..., k11, :])
                ga[..., ky, :] += d2b * (2.0 * av[..., ky, :] * g[..., k02, :]
                                         + av[..., kx, :] * g[..., k11, :])
        ga[..., 0, :] = vbar
        return ga

    return Jet(n_vars, order, node(out, [(a, back)], op="tanh_fused"))


def exp(j):
    e = tape.exp(j.value)
    return compose(j, [e] * (j.order + 1))


def ln(j):
    v = value_of(j.value)
    if np.any(v <= 0.0):
        raise SingularityError("ln of a jet requires a positive value slot")
    derivs = [tape.log(j.value)]
    for k in range(1, j.order + 1):
        coeff = (-1.0) ** (k - 1) * factorial(k - 1)
        derivs.append(tape.mul(coeff, tape.pow_const(j.value, -k)))
    return compose(j, derivs)


def sin(j):
    cycle = [tape.sin(j.value), tape.cos(j.value)]
    derivs = [cycle[k % 2] * (-1.0 if k % 4 >= 2 else 1.0) for k in range(j.order + 1)]
    return compose(j, derivs)


def cos(j):
    cycle = [tape.cos(j.value), tape.neg(tape.sin(j.value))]
    derivs = [cycle[k % 2] * (-1.0 if k % 4 >= 2 else 1.0) for k in range(j.order + 1)]
    return compose(j, derivs)


def sinh(j):
    a, b = tape.exp(j.value), tape.exp(tape.neg(j.value))
    s, c = tape.mul(0.5, tape.sub(a, b)), tape.mul(0.5, tape.add(a, b))
    return compose(j, [(s, c)[k % 2] for k in range(j.order + 1)])


def cosh(j):
    a, b = tape.exp(j.value), tape.exp(tape.neg(j.value))
    s, c = tape.mul(0.5, tape.sub(a, b)), tape.mul(0.5, tape.add(a, b))
    return compose(j, [(c, s)[k % 2] for k in range(j.order + 1)])


def powc(j, p):
    """Jet raised to a constant real power (value slot must allow v**(p-k))."""
    v = value_of(j.value)
    derivs = [tape.pow_const(j.value, p)]
    ff = 1.0
    for k in range(1, j.order + 1):
        ff *= (p - (k - 1))
        if ff == 0.0:
            derivs.append(np.zeros_like(v))
        else:
            derivs.append(tape.mul(ff, tape.pow_const(j.value, p - k)))
    return compose(j, derivs)


def reciprocal(j):
    v = value_of(j.value)
    if np.any(v == 0.0):
        bad = int(np.argmax(v == 0.0))
        raise SingularityError(
            f"division by a jet with zero value slot (multi-index "
            f"{multi_indices(j.n_vars, j.order)[0]}, point {bad})")
    derivs = [tape.div(1.0, j.value)]
    for k in range(1, j.order + 1):
        coeff = (-1.0) ** k * factorial(k)
        derivs.append(tape.mul(coeff, tape.pow_const(j.value, -(k + 1))))
    return compose(j, derivs)


# ---------------------------------------------------------------------------
# parameter gradients of jet-built losses


def grad_wrt_params(loss_builder, params):
    """Gradient of ``loss_builder(theta)`` w.r.t. the flat vector ``theta``.

    The builder runs under a fresh tape and must return a scalar Var; one
    reversed sweep then yields the exact gradient of whatever jet partials
    the loss touched.
    """
    params = np.asarray(params, dtype=float)
    with Tape() as tp:
        p = tp.leaf(params)
        loss = loss_builder(p)
        if not isinstance(loss, Var):
            raise InvalidInputError("loss_builder must return a recorded scalar")
        tp.backward(loss)
    g = p.grad
    return np.zeros_like(params) if g is None else g


def grad_wrt_params_batched(loss_builders, params):
    """Sum of per-batch gradients over independent tapes (pure reduction)."""
    params = np.asarray(params, dtype=float)
    out = np.zeros_like(params)
    for builder in loss_builders:
        out += grad_wrt_params(builder, params)
    return out
