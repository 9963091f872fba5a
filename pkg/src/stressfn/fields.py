"""Admissible stress-function fields.

A field is composed as ``particular + sum(general_i * basis_i) + sum(a_i *
closed_form_i)``: the particular part carries the inhomogeneous traction
data, each basis factor vanishes on the force boundary (for plane problems
together with its normal derivative), the general nets are the trainable
part, and optional closed-form terms with trainable coefficients extend the
span. Boundary data (moments and force resultants accumulated along the
force boundary) provide the low-derivative-order targets used to fit the
particular net.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import jets, nets, tape
from .errors import InvalidConfigError, InvalidInputError
from .jets import Jet
from .nets import Mlp
from .optim import train
from .tape import Var, value_of

FRAME_VARS = {
    "cartesian-xy": 2,
    "polar-r": 1,
    "radial-1d": 1,
    "polar-theta-times-r2": 1,
}


@dataclass
class FieldModel:
    """Composed admissible field; only general nets and coefficients train.

    ``input_map`` optionally rescales coordinates before they reach the
    general nets (feature normalization; tanh layers condition best on
    order-one inputs). Particular, basis and closed-form terms always see
    the raw coordinates so the admissible construction is untouched.
    """

    frame: str
    particular: object = None               # Mlp, callable(jets)->Jet, or None
    pairs: list = dataclass_field(default_factory=list)   # (general Mlp, basis)
    biharmonic_terms: list = dataclass_field(default_factory=list)
    input_map: object = None                # callable(jets) -> jets

    def __post_init__(self):
        if self.frame not in FRAME_VARS:
            raise InvalidConfigError(f"unknown frame {self.frame!r}")

    @property
    def n_vars(self):
        return FRAME_VARS[self.frame]

    def init_trainable(self):
        """Flat trainable vector: general-net parameters, then coefficients."""
        parts = [g.params for g, _ in self.pairs]
        parts.append(np.zeros(len(self.biharmonic_terms)))
        return np.concatenate(parts) if parts else np.zeros(0)

    def split_trainable(self, theta):
        segs = []
        off = 0
        for g, _ in self.pairs:
            n = g.params.size
            segs.append(tape.take(theta, slice(off, off + n))
                        if isinstance(theta, Var) else theta[off:off + n])
            off += n
        coeffs = (tape.take(theta, slice(off, None))
                  if isinstance(theta, Var) else theta[off:])
        return segs, coeffs


def eval_field(model, input_jets, trainable):
    """Jet of the composed field at the given input jets.

    ``trainable`` is the flat vector from :meth:`FieldModel.init_trainable`
    (a tape Var during energy training). Particular and basis parts always
    evaluate from plain arrays, so their parameters stay frozen.
    """
    if input_jets[0].n_vars != model.n_vars:
        raise InvalidConfigError(
            f"frame {model.frame!r} expects {model.n_vars} input variables, "
            f"jets carry {input_jets[0].n_vars}")
    n_vars, order = input_jets[0].n_vars, input_jets[0].order
    segs, coeffs = model.split_trainable(trainable)
    net_inputs = list(model.input_map(input_jets)) if model.input_map else input_jets

    total = _eval_frozen(model.particular, input_jets)
    for (g_net, basis), seg in zip(model.pairs, segs):
        term = nets.mlp_forward_jet(g_net, net_inputs, params=seg)[0]
        b = _eval_frozen(basis, input_jets)
        if b is not None:
            term = term * b
        total = term if total is None else total + term
    for i, bh in enumerate(model.biharmonic_terms):
        a_i = tape.take(coeffs, i) if isinstance(coeffs, Var) else coeffs[i]
        term = bh(input_jets) * a_i
        total = term if total is None else total + term
    if total is None:
        total = jets.jet_const(np.zeros_like(value_of(input_jets[0].value)),
                               n_vars, order)
    return total


def _eval_frozen(part, input_jets):
    if part is None:
        return None
    if isinstance(part, Mlp):
        return nets.mlp_forward_jet(part, input_jets)[0]
    return part(input_jets)


def penalty_terms(values, targets, betas):
    """Penalty addend ``sum_k beta_k * (value_k - target_k)**2``."""
    if len(values) != len(targets) or len(values) != len(betas):
        raise InvalidConfigError("values, targets, betas must align")
    if any(b <= 0 for b in betas):
        raise InvalidConfigError("penalty weights must be positive")
    total = None
    for v, t, b in zip(values, targets, betas):
        r = tape.sub(v, t)
        term = tape.mul(b, tape.mul(r, r))
        total = term if total is None else tape.add(total, term)
    return total


# ---------------------------------------------------------------------------
# boundary data: resultants and moments along the force boundary


@dataclass
class BoundaryData:
    """Traction samples along the force boundary, ordered from the reference
    point A (where the stress function and its gradient vanish).

    ``moment`` is the moment of the accumulated external force about each
    sample point (counterclockwise positive); ``r_s`` the tangential
    component of the accumulated force vector. For any plane stress-function
    field these equal the field value and minus its normal derivative.
    """

    xy: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    traction: np.ndarray
    arclength: np.ndarray
    resultant: np.ndarray
    moment: np.ndarray
    r_s: np.ndarray


def _cumtrap(values, ds):
    avg = 0.5 * (values[1:] + values[:-1])
    return np.concatenate([[0.0], np.cumsum(avg * ds)])


def boundary_data_from_traction(xy, traction=None, normal=None):
    """Accumulate R, M, R_s by trapezoid sweep along the sampled boundary.

    Accepts one ordered piece ``(xy, traction)`` or, for boundaries with
    traction jumps at corners, a list of contiguous pieces: running totals
    chain across pieces without a trapezoid panel spanning the jump.
    """
    pieces = xy if isinstance(xy, (list, tuple)) else [(xy, traction, normal)]
    pieces = [p if len(p) == 3 else (p[0], p[1], None) for p in pieces]

    chunks = []
    rx0 = ry0 = i10 = i20 = s0 = 0.0
    for pc_xy, pc_tr, pc_n in pieces:
        pc_xy = np.asarray(pc_xy, dtype=float)
        if pc_xy.ndim != 2 or len(pc_xy) < 2:
            raise InvalidConfigError("boundary needs at least two ordered samples")
        seg = np.diff(pc_xy, axis=0)
        ds = np.hypot(seg[:, 0], seg[:, 1])
        if not np.all(ds > 0):
            raise InvalidConfigError("boundary has zero-length segments")

        tangent = np.empty_like(pc_xy)
        tangent[:-1] = seg / ds[:, None]
        tangent[-1] = tangent[-2]
        tangent[1:-1] = 0.5 * (seg[1:] / ds[1:, None] + seg[:-1] / ds[:-1, None])
        tangent[1:-1] /= np.hypot(tangent[1:-1, 0], tangent[1:-1, 1])[:, None]
        if pc_n is None:
            # counterclockwise traversal with material on the left
            pc_n = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        else:
            pc_n = np.asarray(pc_n, dtype=float)

        t_vals = pc_tr(pc_xy) if callable(pc_tr) else np.asarray(pc_tr, float)
        rx = rx0 + _cumtrap(t_vals[:, 0], ds)
        ry = ry0 + _cumtrap(t_vals[:, 1], ds)
        i1 = i10 + _cumtrap(t_vals[:, 0] * pc_xy[:, 1], ds)
        i2 = i20 + _cumtrap(t_vals[:, 1] * pc_xy[:, 0], ds)
        s = s0 + np.concatenate([[0.0], np.cumsum(ds)])
        moment = pc_xy[:, 1] * rx - i1 + i2 - pc_xy[:, 0] * ry
        r_s = tangent[:, 0] * rx + tangent[:, 1] * ry
        chunks.append((pc_xy, pc_n, tangent, t_vals, s,
                       np.column_stack([rx, ry]), moment, r_s))
        rx0, ry0, i10, i20, s0 = rx[-1], ry[-1], i1[-1], i2[-1], s[-1]

    cat = [np.concatenate([c[k] for c in chunks]) for k in range(8)]
    return BoundaryData(*cat)


# ---------------------------------------------------------------------------
# particular and basis nets


def train_particular(net, boundary, mode, config):
    """Fit the particular net to the force-boundary data.

    ``airy-property`` fits the field value to the accumulated moment and the
    normal derivative to minus the tangential resultant (first-order targets);
    ``traction`` minimizes the raw traction residual (second-order).
    """
    if mode not in ("airy-property", "traction"):
        raise InvalidConfigError(f"unknown particular mode {mode!r}")
    nb = len(boundary.xy)
    if nb == 0:
        return net
    order = 1 if mode == "airy-property" else 2
    jx = jets.jet_seed(0, boundary.xy[:, 0], 2, order)
    jy = jets.jet_seed(1, boundary.xy[:, 1], 2, order)
    nx, ny = boundary.normal[:, 0], boundary.normal[:, 1]

    if mode == "airy-property":
        m_t, rs_t = boundary.moment, boundary.r_s

        def builder(theta, it):
            phi = nets.mlp_forward_jet(net, [jx, jy], params=theta)[0]
            dn = tape.add(tape.mul(nx, phi.partial((1, 0))),
                          tape.mul(ny, phi.partial((0, 1))))
            e1 = tape.sub(phi.value, m_t)
            e2 = tape.add(dn, rs_t)
            return tape.add(tape.mean(tape.mul(e1, e1)), tape.mean(tape.mul(e2, e2)))
    else:
        tx, ty = boundary.traction[:, 0], boundary.traction[:, 1]

        def builder(theta, it):
            phi = nets.mlp_forward_jet(net, [jx, jy], params=theta)[0]
            pxx, pyy = phi.partial((2, 0)), phi.partial((0, 2))
            pxy = phi.partial((1, 1))
            rx = tape.sub(tape.sub(tape.mul(nx, pyy), tape.mul(ny, pxy)), tx)
            ry = tape.sub(tape.sub(tape.mul(ny, pxx), tape.mul(nx, pxy)), ty)
            return tape.add(tape.mean(tape.mul(rx, rx)), tape.mean(tape.mul(ry, ry)))

    params, _ = train(builder, net.params, config)
    return Mlp(net.widths, params)


def train_basis(net, points, distances, kind, config,
                boundary_xy=None, boundary_normal=None):
    """Fit a basis net to nearest-boundary distances.

    ``prandtl`` only needs the value to vanish on the force boundary;
    ``airy`` additionally drives the value and normal derivative to zero on
    the supplied boundary samples. With no data the net passes through
    unchanged (no force boundary means no basis is needed).
    """
    if kind not in ("prandtl", "airy"):
        raise InvalidConfigError(f"unknown basis kind {kind!r}")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return net
    distances = np.asarray(distances, dtype=float)
    jx = jets.jet_seed(0, points[:, 0], 2, 1)
    jy = jets.jet_seed(1, points[:, 1], 2, 1)
    if kind == "airy":
        if boundary_xy is None or boundary_normal is None:
            raise InvalidConfigError("airy basis needs boundary samples and normals")
        bx = jets.jet_seed(0, boundary_xy[:, 0], 2, 1)
        by = jets.jet_seed(1, boundary_xy[:, 1], 2, 1)
        nx, ny = boundary_normal[:, 0], boundary_normal[:, 1]

    def builder(theta, it):
        b = nets.mlp_forward_jet(net, [jx, jy], params=theta)[0]
        e = tape.sub(b.value, distances)
        loss = tape.mean(tape.mul(e, e))
        if kind == "airy":
            bb = nets.mlp_forward_jet(net, [bx, by], params=theta)[0]
            dn = tape.add(tape.mul(nx, bb.partial((1, 0))),
                          tape.mul(ny, bb.partial((0, 1))))
            loss = tape.add(loss, tape.mean(tape.mul(bb.value, bb.value)))
            loss = tape.add(loss, tape.mean(tape.mul(dn, dn)))
        return loss

    params, _ = train(builder, net.params, config)
    return Mlp(net.widths, params)


def polyline_distance(points, vertices):
    """Exact distance from each point to a polyline (list of vertices)."""
    points = np.asarray(points, dtype=float)
    vertices = np.asarray(vertices, dtype=float)
    best = np.full(len(points), np.inf)
    for p0, p1 in zip(vertices[:-1], vertices[1:]):
        d = p1 - p0
        denom = float(d @ d)
        if denom == 0.0:
            dist = np.hypot(*(points - p0).T)
        else:
            t = np.clip(((points - p0) @ d) / denom, 0.0, 1.0)
            proj = p0 + t[:, None] * d
            dist = np.hypot(points[:, 0] - proj[:, 0], points[:, 1] - proj[:, 1])
        best = np.minimum(best, dist)
    return best
