"""Pressurized thick-walled tube under full displacement boundary conditions.

The problem is axisymmetric, so every field reduces to functions of the
radius. The stress-function route trains phi(r) directly (no admissible
construction is needed: there is no force boundary) against the
complementary energy; the displacement routes build the boundary values
into the trial field and minimize potential energy or the Navier-Lame
residual. Plane-stress constitutive relations are used throughout.

Sign bookkeeping: the Lame formulas below give sigma_r(a) = -p_i with
positive pressure inputs (tension-positive stresses). The complementary
potential that makes the true stress the minimizer is then
``-(u*sigma_r*2*pi*r |_b - |_a)``; its magnitude (79*pi/480 for the default
spec) is what gets reported as ``vc``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets, quad, tape
from .errors import InvalidConfigError, SingularityError
from .fields import FieldModel, eval_field
from .nets import mlp_init, mlp_forward_jet
from .optim import TrainConfig, TrainResult, train
from .tape import value_of

NET_WIDTHS = (1, 20, 20, 20, 1)
BIHARMONIC_TERMS = ("lnr", "r2", "r2lnr")


@dataclass
class TubeSpec:
    a: float = 0.5
    b: float = 1.0
    p_i: float = 5.0
    p_o: float = 10.0
    E: float = 1000.0
    nu: float = 0.3

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise InvalidConfigError("need 0 < a < b")
        if self.E <= 0 or not (-1.0 < self.nu < 0.5):
            raise InvalidConfigError("elastic constants out of range")


def lame_oracle(spec, r):
    """Closed-form (sigma_r, sigma_theta, u_r, phi) on radii ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("tube oracle requires r > 0")
    a2, b2 = spec.a ** 2, spec.b ** 2
    den = b2 - a2
    ca, cb = a2 / den, b2 / den
    sr = ca * (1 - b2 / r ** 2) * spec.p_i - cb * (1 - a2 / r ** 2) * spec.p_o
    sth = ca * (1 + b2 / r ** 2) * spec.p_i - cb * (1 + a2 / r ** 2) * spec.p_o
    ur = ((1 - spec.nu) * (a2 * spec.p_i - b2 * spec.p_o) / den * r
          + (1 + spec.nu) * a2 * b2 * (spec.p_i - spec.p_o) / den / r) / spec.E
    phi = (ca * (r ** 2 / 2 - b2 * np.log(r)) * spec.p_i
           - cb * (r ** 2 / 2 - a2 * np.log(r)) * spec.p_o)
    return sr, sth, ur, phi


def lame_phi_coeffs(spec):
    """Exact (a1, a2, a3) such that phi = a1*ln(r) + a2*r^2 + a3*r^2*ln(r)."""
    a2_, b2 = spec.a ** 2, spec.b ** 2
    den = b2 - a2_
    c_ln = (-a2_ * b2 * spec.p_i + b2 * a2_ * spec.p_o) / den
    c_r2 = (a2_ * spec.p_i - b2 * spec.p_o) / (2 * den)
    return c_ln, c_r2, 0.0


def exact_energies(spec, n=200_001):
    """(W_c, |V_c|) of the true solution by dense quadrature."""
    r = np.linspace(spec.a, spec.b, n)
    sr, sth, ur, _ = lame_oracle(spec, r)
    er = (sr - spec.nu * sth) / spec.E
    eth = (sth - spec.nu * sr) / spec.E
    wc = np.trapezoid(0.5 * (sr * er + sth * eth) * 2 * np.pi * r, r)
    vc = ur[-1] * sr[-1] * 2 * np.pi * spec.b - ur[0] * sr[0] * 2 * np.pi * spec.a
    return float(wc), float(vc)


def plane_stress_sigma(spec, er, eth):
    c = spec.E / (1 - spec.nu ** 2)
    return (tape.mul(c, tape.add(er, tape.mul(spec.nu, eth))),
            tape.mul(c, tape.add(eth, tape.mul(spec.nu, er))))


@dataclass
class TubeResult:
    method: str
    wc: float
    vc: float
    pi: float
    wc_exact: float
    vc_exact: float
    l2_sr: float
    l2_sth: float
    grid: dict
    train: TrainResult
    seconds: float
    coeffs: np.ndarray | None = None
    energy_parts_history: np.ndarray | None = None


def _l2(pred, exact):
    return float(np.linalg.norm(pred - exact) / np.linalg.norm(exact))


def _bh_callable(name):
    if name == "lnr":
        return lambda js: jets.ln(js[0])
    if name == "r2":
        return lambda js: js[0] * js[0]
    if name == "r2lnr":
        return lambda js: js[0] * js[0] * jets.ln(js[0])
    raise InvalidConfigError(f"unknown biharmonic term {name!r}")


def default_field(spec, seed, biharmonic=()):
    return FieldModel(frame="polar-r",
                      pairs=[(mlp_init(NET_WIDTHS, seed), None)],
                      biharmonic_terms=[_bh_callable(n) for n in biharmonic])


def _phi_sigma(phi, r):
    """sigma_r = phi'/r and sigma_theta = phi'' from an order-2 jet."""
    return tape.div(phi.partial(1), r), phi.partial(2)


def complementary_terms(spec, field, theta, n_r=2048):
    """(W_c, boundary work) of the composed phi field on the trapezoid rule.

    The loss of the complementary route is ``W_c - work``; at the true
    solution ``work`` equals the published complementary-potential magnitude.
    """
    samples = quad.sample_interval(spec.a, spec.b, n_r)
    r, w = samples.points, samples.weights
    jr = jets.jet_seed(0, r, 1, 2)
    jr_ends = jets.jet_seed(0, np.array([spec.a, spec.b]), 1, 1)
    _, _, ur_ends, _ = lame_oracle(spec, np.array([spec.a, spec.b]))
    phi = eval_field(field, [jr], theta)
    sr, sth = _phi_sigma(phi, r)
    er = tape.mul(1.0 / spec.E, tape.sub(sr, tape.mul(spec.nu, sth)))
    eth = tape.mul(1.0 / spec.E, tape.sub(sth, tape.mul(spec.nu, sr)))
    dens = tape.mul(tape.add(tape.mul(sr, er), tape.mul(sth, eth)),
                    np.pi * r)  # 0.5 * (...) * 2*pi*r
    wc = tape.wsum(dens, w)
    phi_ends = eval_field(field, [jr_ends], theta)
    dphi = phi_ends.partial(1)  # phi' at [a, b]; sigma_r * r = phi'
    work = tape.mul(2 * np.pi, tape.sub(
        tape.mul(ur_ends[1], tape.take(dphi, 1)),
        tape.mul(ur_ends[0], tape.take(dphi, 0))))
    return wc, work


def dcm_tube(spec, field=None, config=None, n_r=2048, biharmonic=(),
             checkpoint_iters=(), n_eval=1001):
    """Complementary-energy training of phi(r); DCM-P when biharmonic terms
    with trainable coefficients are enabled."""
    config = config or TrainConfig(fixed_iters=True)
    field = field or default_field(spec, config.seed, biharmonic)

    def energy_terms(theta):
        return complementary_terms(spec, field, theta, n_r)

    def builder(theta, it):
        wc, work = energy_terms(theta)
        return tape.sub(wc, work)

    theta, res = train(builder, field.init_trainable(), config,
                       checkpoint_iters=checkpoint_iters)
    wc_v, work_v = (float(value_of(t)) for t in energy_terms(theta))
    wc_exact, vc_exact = exact_energies(spec)

    rg = np.linspace(spec.a, spec.b, n_eval)
    jg = jets.jet_seed(0, rg, 1, 2)
    phi_g = eval_field(field, [jg], theta)
    sr_p = value_of(phi_g.partial(1)) / rg
    sth_p = value_of(phi_g.partial(2))
    sr_e, sth_e, _, _ = lame_oracle(spec, rg)
    _, coeffs = field.split_trainable(theta)
    method = "dcm-p" if field.biharmonic_terms else "dcm"
    return TubeResult(
        method=method, wc=wc_v, vc=work_v, pi=wc_v - work_v,
        wc_exact=wc_exact, vc_exact=vc_exact,
        l2_sr=_l2(sr_p, sr_e), l2_sth=_l2(sth_p, sth_e),
        grid={"r": rg, "sigma_r_pred": sr_p, "sigma_r_exact": sr_e,
              "sigma_theta_pred": sth_p, "sigma_theta_exact": sth_e},
        train=res, seconds=res.seconds,
        coeffs=np.asarray(coeffs, dtype=float) if len(np.atleast_1d(coeffs)) else None,
    )


def dcm_tube_error_history(spec, config=None, n_r=2048, biharmonic=(),
                           record_every=10, n_eval=501):
    """L2(sigma) trajectories along DCM/DCM-P training (for convergence
    comparisons across biharmonic term sets)."""
    config = config or TrainConfig(fixed_iters=True)
    field = default_field(spec, config.seed, biharmonic)
    samples = quad.sample_interval(spec.a, spec.b, n_r)
    r, w = samples.points, samples.weights
    jr = jets.jet_seed(0, r, 1, 2)
    jr_ends = jets.jet_seed(0, np.array([spec.a, spec.b]), 1, 1)
    _, _, ur_ends, _ = lame_oracle(spec, np.array([spec.a, spec.b]))
    rg = np.linspace(spec.a, spec.b, n_eval)
    jg = jets.jet_seed(0, rg, 1, 2)
    sr_e, sth_e, _, _ = lame_oracle(spec, rg)

    history = {"iteration": [], "l2_sr": [], "l2_sth": []}

    def snapshot(theta, it):
        phi_g = eval_field(field, [jg], theta)
        history["iteration"].append(it)
        history["l2_sr"].append(_l2(value_of(phi_g.partial(1)) / rg, sr_e))
        history["l2_sth"].append(_l2(value_of(phi_g.partial(2)), sth_e))

    def builder(theta, it):
        if it % record_every == 0:
            snapshot(value_of(theta), it)
        phi = eval_field(field, [jr], theta)
        sr, sth = _phi_sigma(phi, r)
        er = tape.mul(1.0 / spec.E, tape.sub(sr, tape.mul(spec.nu, sth)))
        eth = tape.mul(1.0 / spec.E, tape.sub(sth, tape.mul(spec.nu, sr)))
        wc = tape.wsum(tape.mul(tape.add(tape.mul(sr, er), tape.mul(sth, eth)),
                                np.pi * r), w)
        phi_ends = eval_field(field, [jr_ends], theta)
        dphi = phi_ends.partial(1)
        work = tape.mul(2 * np.pi, tape.sub(
            tape.mul(ur_ends[1], tape.take(dphi, 1)),
            tape.mul(ur_ends[0], tape.take(dphi, 0))))
        return tape.sub(wc, work)

    theta, res = train(builder, field.init_trainable(), config)
    snapshot(theta, res.iterations)
    return {k: np.asarray(v) for k, v in history.items()}, res


def _admissible_u(spec, net, theta, jr):
    """Displacement trial field with both boundary values built in."""
    r = jr
    ua, ub = _boundary_displacements(spec)
    lin_b = (r * (-1.0 / spec.a) + 1.0) * (spec.a / (spec.a - spec.b)) * ub
    lin_a = (r * (-1.0 / spec.b) + 1.0) * (spec.b / (spec.b - spec.a)) * ua
    bubble = (r + (-spec.a)) * (r + (-spec.b))
    nn = mlp_forward_jet(net, [r], params=theta)[0]
    return lin_b + lin_a + bubble * nn


def _boundary_displacements(spec):
    _, _, ur, _ = lame_oracle(spec, np.array([spec.a, spec.b]))
    return float(ur[0]), float(ur[1])


def _u_strains(u_jet, r):
    er = u_jet.partial(1)
    eth = tape.div(u_jet.value, r)
    return er, eth


def dem_tube(spec, net=None, config=None, n_r=2048, n_eval=1001):
    """Potential-energy minimization over the admissible displacement."""
    config = config or TrainConfig(fixed_iters=True)
    net = net or mlp_init(NET_WIDTHS, config.seed)
    samples = quad.sample_interval(spec.a, spec.b, n_r)
    r, w = samples.points, samples.weights
    jr = jets.jet_seed(0, r, 1, 1)

    def builder(theta, it):
        u = _admissible_u(spec, net, theta, jr)
        er, eth = _u_strains(u, r)
        sr, sth = plane_stress_sigma(spec, er, eth)
        dens = tape.mul(tape.add(tape.mul(sr, er), tape.mul(sth, eth)), np.pi * r)
        return tape.wsum(dens, w)

    theta, res = train(builder, net.params, config)
    return _displacement_result(spec, net, theta, res, "dem", n_eval)


def strong_disp_tube(spec, net=None, config=None, n_r=2048, n_eval=1001):
    """Navier-Lame residual u'' + u'/r - u/r^2 on the same trial field."""
    config = config or TrainConfig(fixed_iters=True)
    net = net or mlp_init(NET_WIDTHS, config.seed)
    samples = quad.sample_interval(spec.a, spec.b, n_r)
    r = samples.points
    jr = jets.jet_seed(0, r, 1, 2)

    def builder(theta, it):
        u = _admissible_u(spec, net, theta, jr)
        res_ode = tape.add(u.partial(2),
                           tape.sub(tape.div(u.partial(1), r),
                                    tape.div(u.value, r * r)))
        return tape.mean(tape.mul(res_ode, res_ode))

    theta, res = train(builder, net.params, config)
    return _displacement_result(spec, net, theta, res, "strong-disp", n_eval)


def _displacement_result(spec, net, theta, res, method, n_eval):
    rg = np.linspace(spec.a, spec.b, n_eval)
    jg = jets.jet_seed(0, rg, 1, 1)
    u = _admissible_u(spec, net, theta, jg)
    er, eth = (value_of(e) for e in _u_strains(u, rg))
    sr_p, sth_p = plane_stress_sigma(spec, er, eth)
    sr_e, sth_e, ur_e, _ = lame_oracle(spec, rg)
    # strain energy of the trained field (equals W_c at the true solution)
    wp = float(np.trapezoid(0.5 * (sr_p * er + sth_p * eth) * 2 * np.pi * rg, rg))
    wc_exact, vc_exact = exact_energies(spec)
    return TubeResult(
        method=method, wc=wp, vc=0.0, pi=wp,
        wc_exact=wc_exact, vc_exact=vc_exact,
        l2_sr=_l2(sr_p, sr_e), l2_sth=_l2(sth_p, sth_e),
        grid={"r": rg, "sigma_r_pred": sr_p, "sigma_r_exact": sr_e,
              "sigma_theta_pred": sth_p, "sigma_theta_exact": sth_e,
              "u_pred": value_of(u.value), "u_exact": ur_e},
        train=res, seconds=res.seconds,
    )
