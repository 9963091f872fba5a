import numpy as np
import pytest

from stressfn.errors import DivergedEvaluationError, InvalidConfigError
from stressfn.quad import (integrate, sample_interval, sample_rect,
                           sample_rect_boundary)


def test_rect_weights_sum_exactly():
    s = sample_rect(2.0, 1.0, 10_000, seed=0)
    assert s.weights.sum() == pytest.approx(2.0, abs=1e-12)
    assert integrate(s, lambda p: np.ones(len(p))) == pytest.approx(2.0, abs=1e-12)


def test_rect_mc_clt_bound():
    a, b, n = 2.0, 1.0, 10_000
    s = sample_rect(a, b, n, seed=1)
    est = integrate(s, lambda p: p[:, 0])
    bound = 3 * (a / np.sqrt(12)) * (a * b) / np.sqrt(n)
    assert abs(est) < bound


def test_rect_seed_determinism():
    s1 = sample_rect(1.0, 1.0, 100, seed=7)
    s2 = sample_rect(1.0, 1.0, 100, seed=7)
    assert np.array_equal(s1.points, s2.points)


def test_rect_validation():
    with pytest.raises(InvalidConfigError):
        sample_rect(0.0, 1.0, 10, 0)
    with pytest.raises(InvalidConfigError):
        sample_rect(1.0, 1.0, 0, 0)


def test_trapezoid_linear_exact():
    s = sample_interval(0.0, 1.0, 101)
    assert integrate(s, lambda r: r) == pytest.approx(0.5, abs=1e-12)


def test_trapezoid_affine_exact_property():
    rng = np.random.default_rng(0)
    for _ in range(5):
        lo, span = rng.uniform(-2, 2), rng.uniform(0.5, 3)
        c0, c1 = rng.normal(size=2)
        s = sample_interval(lo, lo + span, rng.integers(2, 50))
        exact = c0 * span + c1 * ((lo + span) ** 2 - lo ** 2) / 2
        assert integrate(s, lambda r: c0 + c1 * r) == pytest.approx(exact, abs=1e-10)


def test_trapezoid_radial_closed_form():
    s = sample_interval(0.5, 1.0, 10_000)
    got = integrate(s, lambda r: 2 * np.pi * r)
    assert got == pytest.approx(np.pi * 0.75, abs=1e-8)


def test_interval_validation():
    with pytest.raises(InvalidConfigError):
        sample_interval(1.0, 1.0, 10)
    with pytest.raises(InvalidConfigError):
        sample_interval(0.0, 1.0, 1)


def test_integrate_nonfinite_reports_point():
    s = sample_interval(0.0, 1.0, 5)
    vals = np.ones(5)
    vals[3] = np.inf
    with pytest.raises(DivergedEvaluationError):
        integrate(s, vals)


def test_mc_error_scales_as_inverse_sqrt():
    # RMSE of the MC estimate of int x^2 over the unit square across seeds
    exact = 1.0 / 12.0

    def rmse(n):
        errs = []
        for seed in range(24):
            s = sample_rect(1.0, 1.0, n, seed=seed)
            errs.append(integrate(s, lambda p: p[:, 0] ** 2) - exact)
        return np.sqrt(np.mean(np.square(errs)))

    ns = np.array([1_000, 10_000, 100_000])
    errs = np.array([rmse(n) for n in ns])
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert -0.65 < slope < -0.35


def test_boundary_sampler():
    pts, normals = sample_rect_boundary(2.0, 1.0, 250, seed=3)
    assert pts.shape == (1000, 2) and normals.shape == (1000, 2)
    on_right = normals[:, 0] == 1.0
    assert np.allclose(pts[on_right, 0], 1.0)
    assert np.all(np.abs(pts[:, 1]) <= 0.5 + 1e-12)
