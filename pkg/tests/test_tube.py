import numpy as np
import pytest

from stressfn import jets, tape, tube
from stressfn.errors import InvalidConfigError, SingularityError
from stressfn.fields import FieldModel
from stressfn.nets import mlp_init, mlp_zero
from stressfn.optim import TrainConfig
from stressfn.tape import value_of
from stressfn.tube import (TubeSpec, complementary_terms, dcm_tube, dem_tube,
                           exact_energies, lame_oracle, lame_phi_coeffs,
                           strong_disp_tube)

WC_EXACT = 79 * np.pi / 960
VC_EXACT = 79 * np.pi / 480


def test_spec_validation():
    with pytest.raises(InvalidConfigError):
        TubeSpec(a=1.0, b=0.5)
    with pytest.raises(InvalidConfigError):
        TubeSpec(nu=0.6)


def test_lame_boundary_values():
    spec = TubeSpec()
    sr, sth, _, _ = lame_oracle(spec, np.array([0.5, 1.0]))
    np.testing.assert_allclose(sr, [-5.0, -10.0], rtol=1e-12)
    np.testing.assert_allclose(sth[0], -55.0 / 3.0, rtol=1e-12)


def test_lame_monotone_and_continuous():
    spec = TubeSpec()
    r = np.linspace(spec.a, spec.b, 5001)
    sr, _, ur, _ = lame_oracle(spec, r)
    assert np.all(sr <= -5.0 + 1e-9) and np.all(sr >= -10.0 - 1e-9)
    assert np.all(np.diff(sr) < 0)          # monotone between -5 and -10
    assert np.max(np.abs(np.diff(ur))) < 1e-4   # continuous on a fine grid


def test_hydrostatic_case():
    spec = TubeSpec(p_i=7.0, p_o=7.0)
    r = np.linspace(spec.a, spec.b, 11)
    sr, sth, _, _ = lame_oracle(spec, r)
    np.testing.assert_allclose(sr, -7.0, rtol=1e-12)
    np.testing.assert_allclose(sth, -7.0, rtol=1e-12)


def test_oracle_requires_positive_radius():
    with pytest.raises(SingularityError):
        lame_oracle(TubeSpec(), np.array([0.0, 0.5]))


def test_exact_energies_match_closed_forms():
    wc, vc = exact_energies(TubeSpec())
    assert abs(wc - WC_EXACT) < 1e-9
    assert abs(vc - VC_EXACT) < 1e-9


def test_phi_consistent_with_stresses():
    spec = TubeSpec()
    r = np.linspace(spec.a, spec.b, 301)
    jr = jets.jet_seed(0, r, 1, 2)
    c1, c2, c3 = lame_phi_coeffs(spec)
    phi = jets.ln(jr) * c1 + jr * jr * c2 + jr * jr * jets.ln(jr) * c3
    sr = value_of(phi.partial(1)) / r
    sth = value_of(phi.partial(2))
    sr_e, sth_e, _, _ = lame_oracle(spec, r)
    np.testing.assert_allclose(sr, sr_e, rtol=1e-10)
    np.testing.assert_allclose(sth, sth_e, rtol=1e-10)


def test_legendre_duality_pointwise():
    """W_p(eps) + W_c(sigma) = sigma : eps for linear plane-stress states."""
    spec = TubeSpec()
    rng = np.random.default_rng(0)
    c = spec.E / (1 - spec.nu ** 2)
    for _ in range(200):
        er, eth, gam = rng.normal(size=3)
        sr = c * (er + spec.nu * eth)
        sth = c * (eth + spec.nu * er)
        tau = spec.E / (2 * (1 + spec.nu)) * gam
        wp = 0.5 * (sr * er + sth * eth + tau * gam)
        # complementary density from stresses alone
        er_b = (sr - spec.nu * sth) / spec.E
        eth_b = (sth - spec.nu * sr) / spec.E
        gam_b = 2 * (1 + spec.nu) * tau / spec.E
        wc = 0.5 * (sr * er_b + sth * eth_b + tau * gam_b)
        dot = sr * er + sth * eth + tau * gam
        assert abs(wp + wc - dot) < 1e-10 * max(1.0, abs(dot))


def test_duality_of_energies_at_oracle():
    # at the solution: W_p = W_c and Pi_p = -Pi_c
    spec = TubeSpec()
    r = np.linspace(spec.a, spec.b, 200_001)
    sr, sth, ur, _ = lame_oracle(spec, r)
    er = (sr - spec.nu * sth) / spec.E
    eth = (sth - spec.nu * sr) / spec.E
    wp = np.trapezoid(0.5 * (sr * er + sth * eth) * 2 * np.pi * r, r)
    wc, vc = exact_energies(spec)
    assert abs(wp - wc) < 1e-9
    pi_p = wp                      # all-displacement boundary: no load work
    pi_c = wc - vc                 # complementary functional at the truth
    assert abs(pi_p + pi_c) < 1e-9


def test_dcmp_exact_coefficients_zero_energy_error():
    """With the net silent and the exact (a1, a2, a3), the composed field is
    the Lame stress function and the discrete loss hits the true minimum."""
    spec = TubeSpec()
    field = tube.default_field(spec, 0, tube.BIHARMONIC_TERMS)
    field.pairs[0] = (mlp_zero(tube.NET_WIDTHS), None)
    theta = field.init_trainable()
    theta[-3:] = lame_phi_coeffs(spec)
    wc, work = complementary_terms(spec, field, theta, n_r=4096)
    assert abs(float(wc) - WC_EXACT) < 1e-6
    assert abs(float(work) - VC_EXACT) < 1e-6


def test_strong_disp_residual_of_exact_u():
    spec = TubeSpec()
    r = np.linspace(spec.a, spec.b, 500)
    jr = jets.jet_seed(0, r, 1, 2)
    a2, b2 = spec.a ** 2, spec.b ** 2
    den = b2 - a2
    ca = (1 - spec.nu) * (a2 * spec.p_i - b2 * spec.p_o) / den / spec.E
    cb = (1 + spec.nu) * a2 * b2 * (spec.p_i - spec.p_o) / den / spec.E
    u = jr * ca + jets.reciprocal(jr) * cb
    res = (value_of(u.partial(2)) + value_of(u.partial(1)) / r
           - value_of(u.value) / r ** 2)
    assert np.max(np.abs(res)) < 1e-8


def test_strong_disp_residual_of_pure_dilation():
    spec = TubeSpec()
    r = np.linspace(spec.a, spec.b, 100)
    jr = jets.jet_seed(0, r, 1, 2)
    u = jr * 0.37
    res = (value_of(u.partial(2)) + value_of(u.partial(1)) / r
           - value_of(u.value) / r ** 2)
    np.testing.assert_allclose(res, 0.0, atol=1e-14)


def test_dem_admissible_u_matches_boundary_values():
    spec = TubeSpec()
    net = mlp_init(tube.NET_WIDTHS, 3)
    jr = jets.jet_seed(0, np.array([spec.a, spec.b]), 1, 1)
    u = tube._admissible_u(spec, net, net.params, jr)
    _, _, ur, _ = lame_oracle(spec, np.array([spec.a, spec.b]))
    np.testing.assert_allclose(value_of(u.value), ur, rtol=1e-12)


def test_dem_zero_net_energy_upper_bounds_trained():
    spec = TubeSpec()
    cfg = TrainConfig(max_iters=300, seed=0, fixed_iters=True)
    res = dem_tube(spec, config=cfg, n_r=512)
    zero = dem_tube(spec, net=mlp_zero(tube.NET_WIDTHS),
                    config=TrainConfig(max_iters=1, seed=0, fixed_iters=True),
                    n_r=512)
    # linear-interpolation displacement evaluates above the trained minimum
    assert zero.train.loss_history[0] >= res.train.loss_history[-1] - 1e-12


def test_dcm_desk_scale():
    spec = TubeSpec()
    res = dcm_tube(spec, config=TrainConfig(max_iters=400, seed=0,
                                            fixed_iters=True), n_r=512)
    assert res.train.loss_history[-1] < res.train.loss_history[0]
    assert res.l2_sr < 1.0 and np.isfinite(res.wc)


def test_strong_disp_desk_scale():
    spec = TubeSpec()
    res = strong_disp_tube(spec, config=TrainConfig(max_iters=300, seed=0,
                                                    fixed_iters=True), n_r=512)
    assert res.train.loss_history[-1] < res.train.loss_history[0]
