"""Dense tanh networks and the branch/trunk composite.

Parameters live in one flat float64 vector with a fixed layout (per layer:
row-major weight matrix, then bias). Forward passes accept either a plain
vector (oracle/plotting use) or a tape Var (training); in both cases inputs
are jets so any needed input derivative comes out of the same pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import jets, tape
from .errors import InvalidArchitectureError, InvalidInputError
from .jets import Jet
from .tape import Var, value_of


def _check_widths(widths):
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2:
        raise InvalidArchitectureError("need at least input and output widths")
    if any(w <= 0 for w in widths):
        raise InvalidArchitectureError(f"zero or negative width in {widths}")
    return widths


def n_params(widths):
    widths = _check_widths(widths)
    return sum(widths[i + 1] * widths[i] + widths[i + 1] for i in range(len(widths) - 1))


def param_layout(widths):
    """Per-layer (weight_slice, weight_shape, bias_slice) into the flat vector."""
    widths = _check_widths(widths)
    layout = []
    off = 0
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        w_sl = slice(off, off + n_out * n_in)
        off += n_out * n_in
        b_sl = slice(off, off + n_out)
        off += n_out
        layout.append((w_sl, (n_out, n_in), b_sl))
    return layout


@dataclass
class Mlp:
    """Feed-forward tanh net: hidden layers activated, output layer affine."""

    widths: tuple
    params: np.ndarray

    def __post_init__(self):
        self.widths = _check_widths(self.widths)
        self.params = np.asarray(self.params, dtype=float)
        if self.params.shape != (n_params(self.widths),):
            raise InvalidArchitectureError(
                f"flat vector has {self.params.size} entries, "
                f"{self.widths} needs {n_params(self.widths)}")

    @property
    def n_in(self):
        return self.widths[0]

    @property
    def n_out(self):
        return self.widths[-1]


def mlp_init(widths, seed):
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    widths = _check_widths(widths)
    rng = np.random.default_rng(seed)
    parts = []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        lim = np.sqrt(6.0 / (n_in + n_out))
        parts.append(rng.uniform(-lim, lim, size=n_out * n_in))
        parts.append(np.zeros(n_out))
    return Mlp(widths, np.concatenate(parts))


def mlp_zero(widths):
    return Mlp(_check_widths(widths), np.zeros(n_params(widths)))


def unpack(widths, params):
    """Yield (W, b) per layer; slices of a Var stay on the tape."""
    use_take = isinstance(params, Var)
    for w_sl, w_shape, b_sl in param_layout(widths):
        if use_take:
            yield tape.reshape(tape.take(params, w_sl), w_shape), tape.take(params, b_sl)
        else:
            yield params[w_sl].reshape(w_shape), params[b_sl]


def _bias_track(b):
    """Reshape a bias (n,) to broadcast against the (n, P) value track."""
    if isinstance(b, Var):
        return tape.expand_dims(b, -1)
    return value_of(b)[:, None]


def forward_stacked(widths, params, x_data, meta):
    """Forward over a stacked jet payload ``x_data`` of shape (n_in, K, P).

    ``meta`` is the (n_vars, order) pair of the jets; ``params`` may be a
    Var or ndarray. Returns the (n_out, K, P) payload.
    """
    a = x_data
    layers = list(unpack(widths, params))
    for li, (w, b) in enumerate(layers):
        z = jets.affine_jet(w, b, a)
        if li < len(layers) - 1:
            z = jets.tanh_fused(Jet(meta[0], meta[1], z)).data
        a = z
    return a


def stack_inputs(inputs):
    """Stack constant input jets into one (n_in, K, P) payload."""
    for j in inputs:
        if isinstance(j.data, Var):
            raise InvalidInputError("input jets must be constants, not tape nodes")
    return np.stack([value_of(j.data) for j in inputs], axis=0)


def mlp_forward_jet(net, inputs, params=None):
    """Forward pass on a list of jets, one per input neuron.

    Returns a list of output jets. ``params`` overrides the stored vector so
    training can pass a tape Var through the same code path.
    """
    theta = net.params if params is None else params
    if len(inputs) != net.n_in:
        raise InvalidInputError(f"{net.n_in} inputs expected, got {len(inputs)}")
    n_vars, order = inputs[0].n_vars, inputs[0].order
    for j in inputs[1:]:
        if (j.n_vars, j.order) != (n_vars, order):
            raise InvalidInputError("input jets disagree on n_vars/order")
    out = forward_stacked(net.widths, theta, stack_inputs(inputs), (n_vars, order))
    return [Jet(n_vars, order, tape.take(out, (i, Ellipsis))) for i in range(net.n_out)]


def forward_value(widths, params, x):
    """Plain value-only forward on ``x`` of shape (n_in, P); no jets."""
    a = x
    layers = list(unpack(widths, params))
    for li, (w, b) in enumerate(layers):
        z = tape.matprod(w, a)
        z = tape.add(z, _bias_track(b))
        if li < len(layers) - 1:
            z = tape.tanh(z)
        a = z
    return a


@dataclass
class DeepOnet:
    """Branch/trunk pair combined by a p-term dot product."""

    branch: Mlp
    trunk: Mlp

    def __post_init__(self):
        if self.branch.n_out != self.trunk.n_out:
            raise InvalidArchitectureError(
                f"branch outputs {self.branch.n_out} but trunk outputs "
                f"{self.trunk.n_out}; the dot product needs equal width")

    @property
    def p(self):
        return self.branch.n_out

    def pack(self):
        return np.concatenate([self.branch.params, self.trunk.params])

    def split(self, theta):
        nb = self.branch.params.size
        if isinstance(theta, Var):
            return tape.take(theta, slice(0, nb)), tape.take(theta, slice(nb, None))
        return theta[:nb], theta[nb:]


def deeponet_init(branch_widths, trunk_widths, seed):
    return DeepOnet(mlp_init(branch_widths, seed), mlp_init(trunk_widths, seed + 1))


def deeponet_forward(op, branch_in, trunk_jets, theta=None):
    """Jet of ``sum_k branch_k(u) * trunk_k(y)``.

    Branch outputs are jet-constants: they carry no partials with respect to
    the trunk coordinates. ``branch_in`` is a plain vector (constant inputs
    fed raw).
    """
    theta_b, theta_t = (op.branch.params, op.trunk.params) if theta is None else op.split(theta)
    u = np.asarray(branch_in, dtype=float).reshape(-1, 1)
    if u.shape[0] != op.branch.n_in:
        raise InvalidArchitectureError(
            f"branch expects {op.branch.n_in} inputs, got {u.shape[0]}")
    b_out = forward_value(op.branch.widths, theta_b, u)          # (p, 1)
    n_vars, order = trunk_jets[0].n_vars, trunk_jets[0].order
    x = stack_inputs(trunk_jets)
    t_out = forward_stacked(op.trunk.widths, theta_t, x, (n_vars, order))  # (p, K, P)
    combined = tape.matprod(tape.reshape(b_out, (1, op.p)), t_out)            # (1, K, P)
    return Jet(n_vars, order, tape.take(combined, (0, Ellipsis)))


# ---------------------------------------------------------------------------
# serialization: JSON header line + little-endian float64 payload


def save_model(path, model):
    if isinstance(model, DeepOnet):
        head = {"kind": "deeponet",
                "branch_widths": list(model.branch.widths),
                "trunk_widths": list(model.trunk.widths)}
        payload = model.pack()
    else:
        head = {"kind": "mlp", "widths": list(model.widths)}
        payload = model.params
    blob = payload.astype("<f8").tobytes()
    head["n_values"] = payload.size
    with open(path, "wb") as fh:
        fh.write(json.dumps(head).encode() + b"\n")
        fh.write(blob)


def load_model(path):
    with open(path, "rb") as fh:
        head = json.loads(fh.readline().decode())
        payload = np.frombuffer(fh.read(), dtype="<f8").astype(float)
    if payload.size != head["n_values"]:
        raise InvalidInputError(f"model file {path} is truncated")
    if head["kind"] == "mlp":
        return Mlp(tuple(head["widths"]), payload)
    bw, tw = tuple(head["branch_widths"]), tuple(head["trunk_widths"])
    nb = n_params(bw)
    return DeepOnet(Mlp(bw, payload[:nb]), Mlp(tw, payload[nb:]))
