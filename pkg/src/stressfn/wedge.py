"""Uniformly loaded wedge with mixed boundary conditions.

Material occupies the angular sector 0 <= theta <= alpha truncated at
x = L (a triangle); the face theta = 0 carries the uniform pressure q, the
face theta = alpha is traction-free. All stresses derive from the
self-similar ansatz phi = r^2 f(theta), so they depend on theta only. The
complementary route trains f directly with the four face conditions imposed
by penalty; the potential route replaces the supported edge x = L by its
statically equivalent traction (total-inverse) and trains the two
displacement shape functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets, quad, tape
from .errors import InvalidConfigError
from .nets import mlp_forward_jet, mlp_init
from .optim import TrainConfig, TrainResult, train
from .tape import value_of

NET_WIDTHS = (1, 20, 20, 20, 1)


@dataclass
class WedgeSpec:
    alpha: float = np.pi / 6
    q: float = 5.0
    L: float = np.sqrt(3.0)
    E: float = 1000.0
    nu: float = 0.3
    betas: tuple = (30.0, 30.0, 30.0, 30.0)

    def __post_init__(self):
        if not (0 < self.alpha < np.pi / 2):
            raise InvalidConfigError("wedge half-angle must be in (0, pi/2)")
        if self.q <= 0:
            raise InvalidConfigError("pressure must be positive")

    @property
    def c(self):
        return self.q / (2.0 * (np.tan(self.alpha) - self.alpha))


def wedge_oracle(spec, theta):
    """Closed-form (f, f', sigma_r, sigma_theta, tau_rtheta) at angles theta."""
    theta = np.asarray(theta, dtype=float)
    c, al = spec.c, spec.alpha
    ta = np.tan(al)
    f = c * (al - theta + np.sin(theta) * np.cos(theta) - np.cos(theta) ** 2 * ta)
    fp = c * (-1.0 + np.cos(2 * theta) + np.sin(2 * theta) * ta)
    sr = 2 * c * (al - theta - np.sin(theta) ** 2 * ta - np.sin(theta) * np.cos(theta))
    sth = 2 * f
    trt = -fp
    return f, fp, sr, sth, trt


def wedge_displacements(spec, r, theta):
    """Closed-form (u_r, u_theta); rigid-body motion already pinned."""
    c, al, E, mu = spec.c, spec.alpha, spec.E, spec.nu
    ta = np.tan(al)
    ur = (2 * c / E) * r * ((1 - mu) * (al - theta)
                            - (1 + mu) * np.sin(theta) * np.cos(theta)
                            - ta * (np.sin(theta) ** 2 - mu * np.cos(theta) ** 2))
    ut = (-(c / E) * r * (1 + mu) * (np.cos(2 * theta) + ta * np.sin(2 * theta))
          + (4 * c / E) * r * np.log(r))
    return ur, ut


def exact_wc(spec, n=200_001):
    """Complementary strain energy of the truth over the triangle."""
    th = np.linspace(0.0, spec.alpha, n)
    _, _, sr, sth, trt = wedge_oracle(spec, th)
    dens = _wc_density_np(spec, sr, sth, trt)
    return float(np.trapezoid(dens * _radial_factor(spec, th), th))


def _radial_factor(spec, theta):
    # int_0^{L/cos(theta)} r dr: the triangle's radial extent at each angle
    return spec.L ** 2 / (2.0 * np.cos(theta) ** 2)


def _wc_density_np(spec, sr, sth, trt):
    return (sr ** 2 + sth ** 2 - 2 * spec.nu * sr * sth
            + 2 * (1 + spec.nu) * trt ** 2) / (2 * spec.E)


@dataclass
class WedgeResult:
    method: str
    wc: float
    wc_exact: float
    l2_sr: float
    l2_sth: float
    l2_trt: float
    penalties: dict | None
    grid: dict
    train: TrainResult
    seconds: float


def _l2(pred, exact):
    return float(np.linalg.norm(pred - exact) / np.linalg.norm(exact))


def _stress_from_f(f_jet):
    """sigma_r = 2f + f'', sigma_theta = 2f, tau_rtheta = -f'."""
    f, fp, fpp = f_jet.value, f_jet.partial(1), f_jet.partial(2)
    sr = tape.add(tape.mul(2.0, f), fpp)
    sth = tape.mul(2.0, f)
    trt = tape.neg(fp)
    return sr, sth, trt


def _theta_map(spec):
    scale = 2.0 / spec.alpha

    def remap(j):
        return j * scale + (-1.0)

    return remap


def _f_forward(spec, net, theta_params, j_theta):
    return mlp_forward_jet(net, [_theta_map(spec)(j_theta)], params=theta_params)[0]


def _face_values_from_jet(f_jet):
    """f(0), f(alpha), f'(0), f'(alpha) read off an endpoint-inclusive batch."""
    v, d = f_jet.value, f_jet.partial(1)
    return (tape.take(v, 0), tape.take(v, -1), tape.take(d, 0), tape.take(d, -1))


def _face_penalty(spec, f_jet):
    targets = (-spec.q / 2.0, 0.0, 0.0, 0.0)
    total = None
    for v, t, b in zip(_face_values_from_jet(f_jet), targets, spec.betas):
        r = tape.sub(v, t)
        term = tape.mul(b, tape.mul(r, r))
        total = term if total is None else tape.add(total, term)
    return total


def wedge_loss_parts(spec, n_theta=100):
    """Precomputed quadrature and boundary data for the complementary loss.

    The edge work integrand mixes the three stress components with fixed
    trigonometric coefficients, so those coefficients (times the arc weight)
    are folded into three constant arrays up front, and the face penalties
    use endpoint-only weight vectors over the same quadrature batch.
    """
    samples = quad.sample_interval(0.0, spec.alpha, n_theta)
    th = samples.points
    r_edge = spec.L / np.cos(th)
    ur_e, ut_e = wedge_displacements(spec, r_edge, th)
    ct, st = np.cos(th), np.sin(th)
    s2t, c2t = np.sin(2 * th), np.cos(2 * th)
    ux = ct * ur_e - st * ut_e
    uy = st * ur_e + ct * ut_e
    w_edge = samples.weights * spec.L / ct ** 2
    n = len(th)
    val_w = np.zeros(n)
    val_w[0], val_w[-1] = spec.betas[0], spec.betas[1]
    val_t = np.zeros(n)
    val_t[0] = -spec.q / 2.0
    der_w = np.zeros(n)
    der_w[0], der_w[-1] = spec.betas[2], spec.betas[3]
    return {
        "th": th,
        "jt": jets.jet_seed(0, th, 1, 2),
        "wq": samples.weights * _radial_factor(spec, th),
        # edge work = wsum(sr*A) + wsum(sth*B) + wsum(trt*C)
        "edge_a": (ux * ct * ct + uy * st * ct) * w_edge,
        "edge_b": (ux * st * st - uy * st * ct) * w_edge,
        "edge_c": (-ux * s2t + uy * c2t) * w_edge,
        # penalties: beta-weighted squared mismatch at the two endpoints
        "pen_val_w": val_w, "pen_val_t": val_t, "pen_der_w": der_w,
    }


def wedge_loss_from_f(spec, f_jet, parts, include_edge_work=True):
    """Complementary energy + face penalties for a composed f(theta) jet.

    The supported edge x = L is a displacement boundary; its work against
    the field's own traction enters with a minus sign so the true field is
    the minimizer. (Dropping it reproduces the strain-energy-only variant,
    which biases the f'' mode.)
    """
    sr, sth, trt = _stress_from_f(f_jet)
    # w_c = (sr^2 + sth^2 - 2 nu sr sth + 2(1+nu) trt^2) / (2E)
    half_e = 0.5 / spec.E
    dens = tape.add(
        tape.add(tape.mul(half_e, tape.mul(sr, sr)),
                 tape.mul(half_e, tape.mul(sth, sth))),
        tape.add(tape.mul(-2.0 * spec.nu * half_e, tape.mul(sr, sth)),
                 tape.mul(2.0 * (1 + spec.nu) * half_e, tape.mul(trt, trt))))
    loss = tape.wsum(dens, parts["wq"])
    if include_edge_work:
        work = tape.add(tape.add(tape.wsum(sr, parts["edge_a"]),
                                 tape.wsum(sth, parts["edge_b"])),
                        tape.wsum(trt, parts["edge_c"]))
        loss = tape.sub(loss, work)
    ev = tape.sub(f_jet.value, parts["pen_val_t"])
    pen = tape.add(tape.wsum(tape.mul(ev, ev), parts["pen_val_w"]),
                   tape.wsum(tape.mul(f_jet.partial(1), f_jet.partial(1)),
                             parts["pen_der_w"]))
    return tape.add(loss, pen)


def _result(spec, method, net, theta_params, res, stress_fn, n_eval=1001,
            penalties=None):
    th = np.linspace(0.0, spec.alpha, n_eval)
    sr_p, sth_p, trt_p = stress_fn(th)
    _, _, sr_e, sth_e, trt_e = wedge_oracle(spec, th)
    dens = _wc_density_np(spec, sr_p, sth_p, trt_p)
    wc = float(np.trapezoid(dens * _radial_factor(spec, th), th))
    return WedgeResult(
        method=method, wc=wc, wc_exact=exact_wc(spec),
        l2_sr=_l2(sr_p, sr_e), l2_sth=_l2(sth_p, sth_e), l2_trt=_l2(trt_p, trt_e),
        penalties=penalties,
        grid={"theta": th,
              "sigma_r_pred": sr_p, "sigma_r_exact": sr_e,
              "sigma_theta_pred": sth_p, "sigma_theta_exact": sth_e,
              "tau_rtheta_pred": trt_p, "tau_rtheta_exact": trt_e},
        train=res, seconds=res.seconds)


def dcm_wedge(spec, net=None, config=None, n_theta=100, checkpoint_iters=(),
              include_edge_work=True):
    """Complementary energy over the triangle plus four penalty terms."""
    config = config or TrainConfig(max_iters=10_000, fixed_iters=True)
    net = net or mlp_init(NET_WIDTHS, config.seed)
    parts = wedge_loss_parts(spec, n_theta)

    def builder(theta, it):
        f = _f_forward(spec, net, theta, parts["jt"])
        return wedge_loss_from_f(spec, f, parts, include_edge_work)

    theta, res = train(builder, net.params, config, checkpoint_iters=checkpoint_iters)

    def stress_fn(th):
        f = _f_forward(spec, net, theta, jets.jet_seed(0, th, 1, 2))
        return tuple(value_of(s) for s in _stress_from_f(f))

    ends = _f_forward(spec, net, theta, jets.jet_seed(0, np.array([0.0, spec.alpha]), 1, 1))
    pen = {k: float(value_of(v)) for k, v in zip(
        ("f0", "f_alpha", "fp0", "fp_alpha"), _face_values_from_jet(ends))}
    pen["f0_target"] = -spec.q / 2.0
    return _result(spec, "dcm", net, theta, res, stress_fn, penalties=pen)


def strong_stress_wedge(spec, net=None, config=None, n_theta=100):
    """Fourth-order compatibility residual f'''' + 4 f'' with penalties."""
    config = config or TrainConfig(max_iters=30_000, fixed_iters=True)
    net = net or mlp_init(NET_WIDTHS, config.seed)
    samples = quad.sample_interval(0.0, spec.alpha, n_theta)
    jt = jets.jet_seed(0, samples.points, 1, 4)

    def builder(theta, it):
        f = _f_forward(spec, net, theta, jt)
        r = tape.add(f.partial(4), tape.mul(4.0, f.partial(2)))
        return tape.add(tape.mean(tape.mul(r, r)), _face_penalty(spec, f))

    theta, res = train(builder, net.params, config)

    def stress_fn(th):
        f = _f_forward(spec, net, theta, jets.jet_seed(0, th, 1, 2))
        return tuple(value_of(s) for s in _stress_from_f(f))

    return _result(spec, "strong-stress", net, theta, res, stress_fn)


# ---------------------------------------------------------------------------
# potential-energy route (total-inverse traction on the supported edge)


def edge_tractions(spec, theta):
    """Analytic traction (Cartesian components) on the edge x = L."""
    _, _, sr, sth, trt = wedge_oracle(spec, theta)
    ct, st = np.cos(theta), np.sin(theta)
    tx = sr * ct ** 2 + sth * st ** 2 - trt * np.sin(2 * theta)
    ty = (sr - sth) * st * ct + trt * np.cos(2 * theta)
    return tx, ty


def dem_wedge(spec, g1_net=None, g2_net=None, config=None, n_theta=100):
    """Potential energy with the displacement ansatz u_r = r g1(theta),
    u_theta = r g2(theta) + (4c/E) r ln r.

    External work collects every traction face: the loaded face theta = 0
    and the total-inverse traction on the edge x = L.
    """
    config = config or TrainConfig(max_iters=2000, fixed_iters=True)
    g1_net = g1_net or mlp_init(NET_WIDTHS, config.seed)
    g2_net = g2_net or mlp_init(NET_WIDTHS, config.seed + 1)
    n1 = g1_net.params.size
    samples = quad.sample_interval(0.0, spec.alpha, n_theta)
    th = samples.points
    jt = jets.jet_seed(0, th, 1, 1)
    wq = samples.weights * _radial_factor(spec, th)
    c, E, nu, L = spec.c, spec.E, spec.nu, spec.L
    four_c_over_e = 4.0 * c / E

    # edge x = L: r = L/cos(theta), arc measure L/cos^2(theta) dtheta
    r_edge = L / np.cos(th)
    w_edge = samples.weights * L / np.cos(th) ** 2
    tx, ty = edge_tractions(spec, th)
    ct, st = np.cos(th), np.sin(th)

    def split(theta):
        return tape.take(theta, slice(0, n1)), tape.take(theta, slice(n1, None))

    def builder(theta, it):
        t1, t2 = split(theta)
        g1 = _f_forward(spec, g1_net, t1, jt)
        g2 = _f_forward(spec, g2_net, t2, jt)
        # strains of the ansatz are theta-only
        er = g1.value
        eth = tape.add(g1.value, g2.partial(1))
        grt = tape.add(g1.partial(1), four_c_over_e)
        cfac = E / (1 - nu ** 2)
        sr = tape.mul(cfac, tape.add(er, tape.mul(nu, eth)))
        sth = tape.mul(cfac, tape.add(eth, tape.mul(nu, er)))
        trt = tape.mul(E / (2 * (1 + nu)), grt)
        dens = tape.mul(0.5, tape.add(tape.add(tape.mul(sr, er), tape.mul(sth, eth)),
                                      tape.mul(trt, grt)))
        w_int = tape.wsum(dens, wq)
        # edge work: t_xy . u_xy with u rotated from polar components
        ur = tape.mul(r_edge, g1.value)
        ut = tape.add(tape.mul(r_edge, g2.value), four_c_over_e * r_edge * np.log(r_edge))
        ux = tape.sub(tape.mul(ct, ur), tape.mul(st, ut))
        uy = tape.add(tape.mul(st, ur), tape.mul(ct, ut))
        w_edge_term = tape.wsum(tape.add(tape.mul(tx, ux), tape.mul(ty, uy)), w_edge)
        # loaded-face work: q * int_0^L u_theta(r, 0) dr
        g2_0 = tape.take(g2.value, 0)
        u_face = tape.add(tape.mul(L ** 2 / 2.0, g2_0),
                          four_c_over_e * (L ** 2 / 2.0 * np.log(L) - L ** 2 / 4.0))
        w_face = tape.mul(spec.q, u_face)
        return tape.sub(w_int, tape.add(w_edge_term, w_face))

    theta, res = train(builder, np.concatenate([g1_net.params, g2_net.params]),
                       config)

    def stress_fn(th_eval):
        jte = jets.jet_seed(0, th_eval, 1, 1)
        t1, t2 = theta[:n1], theta[n1:]
        g1 = _f_forward(spec, g1_net, t1, jte)
        g2 = _f_forward(spec, g2_net, t2, jte)
        er = value_of(g1.value)
        eth = er + value_of(g2.partial(1))
        grt = value_of(g1.partial(1)) + four_c_over_e
        cfac = E / (1 - nu ** 2)
        sr = cfac * (er + nu * eth)
        sth = cfac * (eth + nu * er)
        trt = E / (2 * (1 + nu)) * grt
        return sr, sth, trt

    return _result(spec, "dem", None, theta, res, stress_fn)


def dem_energy_of_exact(spec, n_theta=2001):
    """The potential functional evaluated at the analytic displacement."""
    th = np.linspace(0.0, spec.alpha, n_theta)
    w = np.full(n_theta, th[1] - th[0])
    w[0] = w[-1] = (th[1] - th[0]) / 2
    c, E, nu, L = spec.c, spec.E, spec.nu, spec.L
    ta = np.tan(spec.alpha)
    g1 = (2 * c / E) * ((1 - nu) * (spec.alpha - th)
                        - (1 + nu) * np.sin(th) * np.cos(th)
                        - ta * (np.sin(th) ** 2 - nu * np.cos(th) ** 2))
    g2 = -(c / E) * (1 + nu) * (np.cos(2 * th) + ta * np.sin(2 * th))
    g1p = np.gradient(g1, th)
    g2p = np.gradient(g2, th)
    er = g1
    eth = g1 + g2p
    grt = g1p + 4 * c / E
    cfac = E / (1 - nu ** 2)
    sr = cfac * (er + nu * eth)
    sth = cfac * (eth + nu * er)
    trt = E / (2 * (1 + nu)) * grt
    dens = 0.5 * (sr * er + sth * eth + trt * grt)
    w_int = float(np.dot(dens * _radial_factor(spec, th), w))
    r_edge = L / np.cos(th)
    tx, ty = edge_tractions(spec, th)
    ur = r_edge * g1
    ut = r_edge * g2 + 4 * c / E * r_edge * np.log(r_edge)
    ux = np.cos(th) * ur - np.sin(th) * ut
    uy = np.sin(th) * ur + np.cos(th) * ut
    w_edge = float(np.dot((tx * ux + ty * uy) * L / np.cos(th) ** 2, w))
    u_face = (L ** 2 / 2.0 * g2[0]
              + 4 * c / E * (L ** 2 / 2.0 * np.log(L) - L ** 2 / 4.0))
    w_face = spec.q * u_face
    return w_int - (w_edge + w_face)
