"""Two-stage operator learning: supervised branch/trunk fit, then physics.

Stage one fits the branch/trunk composite to closed-form stress-function
data over a family of problem instances (the test instance is never in the
family). Stage two warm-starts the complementary-energy training of the
single test instance from those weights, with any particular/basis factors
of the admissible construction kept outside the trainable composite.

Trunk coordinates are normalized to a canonical domain per case and targets
are scaled by one dataset-wide constant, both recorded in the dataset so
the physics stage composes exactly the same field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import jets, quad, tape
from . import torsion as torsion_mod
from . import tube as tube_mod
from . import wedge as wedge_mod
from .errors import InvalidConfigError
from .nets import DeepOnet, Mlp, deeponet_forward, forward_value, mlp_init
from .optim import TrainConfig, train
from .tape import value_of

TRUNK_HIDDEN = (30,) * 6
BRANCH_HIDDEN = (30,) * 3
P_WIDTH = 30

# torsion training family: (a, b) rectangles bracketing the unit square
TORSION_CASES = [(1.05, 1.0), (1.1, 1.0), (1.2, 1.0), (1.3, 1.0), (1.5, 1.0),
                 (1.0, 0.95), (1.0, 0.9), (1.0, 0.8), (1.0, 0.7),
                 (1.0, 0.65), (1.0, 0.6)]
TUBE_PI_RANGE = (1.0, 10.0)
TUBE_PO_RANGE = (6.0, 15.0)
WEDGE_ALPHA_RANGE = (np.pi / 12, np.pi / 4)
WEDGE_Q_RANGE = (1.0, 10.0)


@dataclass
class OperatorDataset:
    problem: str
    branch_inputs: np.ndarray   # (C, n_branch)
    coords: np.ndarray          # (C, d, P) canonical trunk inputs
    raw_coords: np.ndarray      # (C, d, P) physical coordinates
    targets: np.ndarray         # (C, P) stress-function data over basis factor
    target_scale: float
    test_case: tuple
    meta: dict

    @property
    def n_cases(self):
        return len(self.branch_inputs)


def deeponet_for(problem, seed):
    d_trunk = 2 if problem == "torsion" else 1
    trunk = mlp_init((d_trunk,) + TRUNK_HIDDEN + (P_WIDTH,), seed)
    branch = mlp_init((2,) + BRANCH_HIDDEN + (P_WIDTH,), seed + 1)
    return DeepOnet(branch, trunk)


def build_dataset(problem, grid=100, base_spec=None):
    """Deterministic enumeration of training cases with analytic targets."""
    if problem == "torsion":
        return _torsion_dataset(grid, base_spec or torsion_mod.TorsionSpec())
    if problem == "tube":
        return _tube_dataset(grid, base_spec or tube_mod.TubeSpec())
    if problem == "wedge":
        return _wedge_dataset(grid, base_spec or wedge_mod.WedgeSpec())
    raise InvalidConfigError(f"unknown problem {problem!r}")


def _torsion_dataset(grid, base):
    coords, raw, targets, branch = [], [], [], []
    for a, b in TORSION_CASES:
        spec = torsion_mod.TorsionSpec(a=a, b=b, G=base.G, M_t=base.M_t)
        alpha = spec.M_t / (torsion_mod.beta_series(spec.ratio) * spec.G
                            * spec.a * spec.b ** 3)
        xs = np.linspace(-a / 2, a / 2, grid)
        ys = np.linspace(-b / 2, b / 2, grid)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        x, y = gx.ravel(), gy.ravel()
        phi, _, _ = torsion_mod.torsion_series_oracle(spec, x, y, alpha=alpha)
        basis = (x ** 2 - a ** 2 / 4) * (y ** 2 - b ** 2 / 4)
        coords.append(np.stack([2 * x / a, 2 * y / b]))
        raw.append(np.stack([x, y]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_target = np.where(np.abs(basis) > 1e-14, phi / basis, 0.0)
        targets.append(ratio_target)
        branch.append((a, b))
    return _finalize("torsion", branch, coords, raw, targets,
                     test_case=(base.a, base.b),
                     meta={"cases": TORSION_CASES, "grid": [grid, grid]})


def _tube_dataset(grid, base):
    p_is = np.linspace(*TUBE_PI_RANGE, 11)
    p_os = np.linspace(*TUBE_PO_RANGE, 11)
    r = np.linspace(base.a, base.b, grid)
    canon = 2 * (r - base.a) / (base.b - base.a) - 1.0
    coords, raw, targets, branch = [], [], [], []
    for pi_ in p_is:
        for po in p_os:
            spec = tube_mod.TubeSpec(a=base.a, b=base.b, p_i=pi_, p_o=po,
                                     E=base.E, nu=base.nu)
            _, _, _, phi = tube_mod.lame_oracle(spec, r)
            coords.append(canon[None, :])
            raw.append(r[None, :])
            targets.append(phi)
            branch.append((pi_, po))
    return _finalize("tube", branch, coords, raw, targets,
                     test_case=(base.p_i, base.p_o),
                     meta={"p_i": list(p_is), "p_o": list(p_os), "grid": [grid]})


def _wedge_dataset(grid, base):
    alphas = np.linspace(*WEDGE_ALPHA_RANGE, 10)
    qs = np.linspace(*WEDGE_Q_RANGE, 11)
    coords, raw, targets, branch = [], [], [], []
    for al in alphas:
        for q in qs:
            spec = wedge_mod.WedgeSpec(alpha=al, q=q, L=base.L, E=base.E, nu=base.nu)
            th = np.linspace(0.0, al, grid)
            f, _, _, _, _ = wedge_mod.wedge_oracle(spec, th)
            coords.append((2 * th / al - 1.0)[None, :])
            raw.append(th[None, :])
            targets.append(f)
            branch.append((al, q))
    return _finalize("wedge", branch, coords, raw, targets,
                     test_case=(base.alpha, base.q),
                     meta={"alpha": list(alphas), "q": list(qs), "grid": [grid]})


def _finalize(problem, branch, coords, raw, targets, test_case, meta):
    branch = np.asarray(branch, dtype=float)
    if any(np.allclose(b, test_case) for b in branch):
        raise InvalidConfigError("training enumeration must exclude the test case")
    targets = np.asarray(targets, dtype=float)
    scale = float(np.sqrt(np.mean(targets ** 2)))
    return OperatorDataset(problem, branch, np.asarray(coords, dtype=float),
                           np.asarray(raw, dtype=float), targets, scale,
                           tuple(test_case), meta)


def save_dataset(path, data):
    np.savez(path,
             header=json.dumps({"problem": data.problem,
                                "test_case": list(data.test_case),
                                "target_scale": data.target_scale,
                                "meta": data.meta}),
             branch_inputs=data.branch_inputs, coords=data.coords,
             raw_coords=data.raw_coords, targets=data.targets)


def load_dataset(path):
    with np.load(path, allow_pickle=False) as z:
        head = json.loads(str(z["header"]))
        return OperatorDataset(head["problem"], z["branch_inputs"], z["coords"],
                               z["raw_coords"], z["targets"],
                               head["target_scale"], tuple(head["test_case"]),
                               head["meta"])


def pretrain(op, data, config=None, batch_points=4096):
    """Minimize the supervised MSE of the scaled composite over all cases."""
    config = config or TrainConfig(max_iters=5000)
    c, d, p = data.coords.shape
    flat_x = np.concatenate([data.coords[i] for i in range(c)], axis=1)  # (d, C*P)
    flat_t = (data.targets / data.target_scale).ravel()
    case_idx = np.repeat(np.arange(c), p)
    branch_x = data.branch_inputs.T                                       # (n_b, C)
    n_total = flat_x.shape[1]
    use_batches = batch_points and batch_points < n_total

    def builder(theta, it):
        tb, tt = op.split(theta)
        if use_batches:
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, 11, it]))
            sel = rng.integers(0, n_total, size=batch_points)
        else:
            sel = slice(None)
        xs = flat_x[:, sel]
        ts = flat_t[sel]
        idx = case_idx[sel]
        b_out = forward_value(op.branch.widths, tb, branch_x)      # (p, C)
        b_pts = tape.gather_cols(b_out, idx)                       # (p, n)
        t_out = forward_value(op.trunk.widths, tt, xs)             # (p, n)
        prod = tape.matprod(np.ones((1, op.p)), tape.mul(b_pts, t_out))
        err = tape.sub(tape.take(prod, (0, Ellipsis)), ts)
        return tape.mean(tape.mul(err, err))

    theta, res = train(builder, op.pack(), config)
    nb = op.branch.params.size
    trained = DeepOnet(Mlp(op.branch.widths, theta[:nb]),
                       Mlp(op.trunk.widths, theta[nb:]))
    return trained, res


# ---------------------------------------------------------------------------
# physics stage: per-problem composed fields and losses


def torsion_phi_builder(op, data, spec):
    """phi(x, y) = basis * scale * (Branch . Trunk) on normalized inputs."""
    s = data.target_scale
    basis = torsion_mod.rect_basis(spec)
    u = np.array([spec.a, spec.b])
    sx, sy = 2.0 / spec.a, 2.0 / spec.b

    def phi(pts, order, theta=None):
        jx, jy = jets.seed_xy(pts, order)
        comp = deeponet_forward(op, u, [jx * sx, jy * sy], theta=theta)
        return comp * basis((jx, jy)) * s

    return phi


def finetune_torsion(op, data, spec=None, config=None, n_interior=10_000,
                     checkpoint_iters=()):
    spec = spec or torsion_mod.TorsionSpec()
    alpha1 = spec.M_t / (torsion_mod.beta_series(spec.ratio) * spec.G
                         * spec.a * spec.b ** 3)
    spec = torsion_mod.TorsionSpec(a=spec.a, b=spec.b, G=spec.G, M_t=spec.M_t,
                                   L=spec.L, alpha_init=alpha1)
    config = config or torsion_mod.default_train_config(seed=0, max_iters=2000)
    phi_builder = torsion_phi_builder(op, data, spec)
    w = np.full(n_interior, spec.a * spec.b / n_interior)
    L, G = spec.L, spec.G

    def builder(theta, it):
        pts = torsion_mod._draw_points(spec, n_interior, config.seed, 7, it)
        phi = phi_builder(pts, 1, theta=theta)
        px, py = phi.partial((1, 0)), phi.partial((0, 1))
        grad_sq = tape.add(tape.mul(px, px), tape.mul(py, py))
        return tape.sub(tape.mul(0.5 * L / G, tape.wsum(grad_sq, w)),
                        tape.mul(2.0 * alpha1 * L, tape.wsum(phi.value, w)))

    theta, res = train(builder, op.pack(), config, checkpoint_iters=checkpoint_iters)
    return theta, res, spec


def torsion_energy_at(op, data, spec, theta, seed=0, n_interior=10_000, it=0):
    """One deterministic evaluation of the torsion physics loss."""
    phi_builder = torsion_phi_builder(op, data, spec)
    pts = torsion_mod._draw_points(spec, n_interior, seed, 7, it)
    w = np.full(n_interior, spec.a * spec.b / n_interior)
    phi = phi_builder(pts, 1, theta=theta)
    px = value_of(phi.partial((1, 0)))
    py = value_of(phi.partial((0, 1)))
    return float(0.5 * spec.L / spec.G * np.dot(px ** 2 + py ** 2, w)
                 - 2.0 * spec.alpha_init * spec.L * np.dot(value_of(phi.value), w))


def tube_phi_builder(op, data, spec):
    s = data.target_scale
    u = np.array([spec.p_i, spec.p_o])

    def phi(r_jet, theta=None):
        canon = r_jet * (2.0 / (spec.b - spec.a)) + (
            -(spec.b + spec.a) / (spec.b - spec.a))
        return deeponet_forward(op, u, [canon], theta=theta) * s

    return phi


def finetune_tube(op, data, spec=None, config=None, n_r=2048,
                  checkpoint_iters=()):
    spec = spec or tube_mod.TubeSpec()
    config = config or TrainConfig(max_iters=2000, fixed_iters=True)
    phi_builder = tube_phi_builder(op, data, spec)
    samples = quad.sample_interval(spec.a, spec.b, n_r)
    r, w = samples.points, samples.weights
    jr = jets.jet_seed(0, r, 1, 2)
    jr_ends = jets.jet_seed(0, np.array([spec.a, spec.b]), 1, 1)
    _, _, ur_ends, _ = tube_mod.lame_oracle(spec, np.array([spec.a, spec.b]))

    def builder(theta, it):
        phi = phi_builder(jr, theta=theta)
        sr = tape.div(phi.partial(1), r)
        sth = phi.partial(2)
        er = tape.mul(1.0 / spec.E, tape.sub(sr, tape.mul(spec.nu, sth)))
        eth = tape.mul(1.0 / spec.E, tape.sub(sth, tape.mul(spec.nu, sr)))
        wc = tape.wsum(tape.mul(tape.add(tape.mul(sr, er), tape.mul(sth, eth)),
                                np.pi * r), w)
        dphi = phi_builder(jr_ends, theta=theta).partial(1)
        work = tape.mul(2 * np.pi, tape.sub(
            tape.mul(ur_ends[1], tape.take(dphi, 1)),
            tape.mul(ur_ends[0], tape.take(dphi, 0))))
        return tape.sub(wc, work)

    theta, res = train(builder, op.pack(), config, checkpoint_iters=checkpoint_iters)
    return theta, res, spec


def tube_fields_at(op, data, spec, theta, n_eval=1001):
    rg = np.linspace(spec.a, spec.b, n_eval)
    phi = tube_phi_builder(op, data, spec)(jets.jet_seed(0, rg, 1, 2), theta=theta)
    sr = value_of(phi.partial(1)) / rg
    sth = value_of(phi.partial(2))
    sr_e, sth_e, _, _ = tube_mod.lame_oracle(spec, rg)
    return {"r": rg, "sigma_r_pred": sr, "sigma_r_exact": sr_e,
            "sigma_theta_pred": sth, "sigma_theta_exact": sth_e}


def wedge_f_builder(op, data, spec):
    s = data.target_scale
    u = np.array([spec.alpha, spec.q])

    def f(theta_jet, theta=None):
        canon = theta_jet * (2.0 / spec.alpha) + (-1.0)
        return deeponet_forward(op, u, [canon], theta=theta) * s

    return f


def finetune_wedge(op, data, spec=None, config=None, n_theta=100,
                   checkpoint_iters=()):
    """Physics stage for the wedge: same functional as the direct solver
    (complementary energy with edge work) with face conditions by penalty."""
    spec = spec or wedge_mod.WedgeSpec()
    config = config or TrainConfig(max_iters=10_000, fixed_iters=True)
    f_builder = wedge_f_builder(op, data, spec)
    loss_parts = wedge_mod.wedge_loss_parts(spec, n_theta)

    def builder(theta, it):
        f = f_builder(loss_parts["jt"], theta=theta)
        return wedge_mod.wedge_loss_from_f(spec, f, loss_parts)

    theta, res = train(builder, op.pack(), config, checkpoint_iters=checkpoint_iters)
    return theta, res, spec


def wedge_fields_at(op, data, spec, theta, n_eval=1001):
    th = np.linspace(0.0, spec.alpha, n_eval)
    f = wedge_f_builder(op, data, spec)(jets.jet_seed(0, th, 1, 2), theta=theta)
    sr, sth, trt = (value_of(s) for s in wedge_mod._stress_from_f(f))
    _, _, sr_e, sth_e, trt_e = wedge_mod.wedge_oracle(spec, th)
    return {"theta": th, "sigma_r_pred": sr, "sigma_r_exact": sr_e,
            "sigma_theta_pred": sth, "sigma_theta_exact": sth_e,
            "tau_rtheta_pred": trt, "tau_rtheta_exact": trt_e}
