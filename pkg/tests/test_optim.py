import numpy as np
import pytest

from stressfn import tape
from stressfn.errors import DivergedTrainingError, InvalidConfigError
from stressfn.optim import AdamState, TrainConfig, adam_step, train


def test_zero_gradient_is_identity():
    state = AdamState()
    p = np.array([1.0, -2.0, 3.0])
    out = adam_step(state, p, np.zeros(3))
    np.testing.assert_allclose(out, p)
    assert state.step == 1


def test_first_step_moves_by_lr():
    state = AdamState(lr=0.05)
    p = np.zeros(4)
    g = np.array([3.0, -0.2, 0.5, 0.0])
    out = adam_step(state, p, g)
    # bias-corrected first step: -lr * sign(g) up to eps, zero stays put
    np.testing.assert_allclose(out[:3], -0.05 * np.sign(g[:3]), rtol=1e-6)
    assert out[3] == 0.0


def test_quadratic_converges():
    state = AdamState(lr=0.1)
    p = np.array([1.0])
    for _ in range(500):
        p = adam_step(state, p, 2 * p)
    assert abs(p[0]) < 1e-3


def test_nonfinite_gradient_raises():
    state = AdamState()
    with pytest.raises(DivergedTrainingError):
        adam_step(state, np.zeros(2), np.array([np.nan, 0.0]))


def test_train_quadratic():
    def builder(theta, it):
        return tape.total(tape.pow_const(theta, 2))

    cfg = TrainConfig(max_iters=500, lr=0.1, convergence_window=0)
    p, res = train(builder, np.array([1.0]), cfg)
    assert abs(p[0]) < 1e-3
    assert res.iterations == 500
    assert len(res.loss_history) == 500


def test_constant_loss_stops_after_window():
    def builder(theta, it):
        return tape.mul(0.0, tape.total(theta)) + 5.0

    cfg = TrainConfig(max_iters=1000, convergence_window=50)
    _, res = train(builder, np.ones(3), cfg)
    assert res.converged
    assert res.iterations == 50


def test_fixed_iters_ignores_convergence():
    def builder(theta, it):
        return tape.mul(0.0, tape.total(theta)) + 5.0

    cfg = TrainConfig(max_iters=120, convergence_window=50, fixed_iters=True)
    _, res = train(builder, np.ones(3), cfg)
    assert res.iterations == 120 and not res.converged


def test_invalid_config():
    with pytest.raises(InvalidConfigError):
        TrainConfig(max_iters=0).validate()
    with pytest.raises(InvalidConfigError):
        TrainConfig(lr=0.0).validate()


def test_divergence_reports_iteration():
    calls = {"n": 0}

    def builder(theta, it):
        calls["n"] += 1
        scale = np.inf if it == 3 else 1.0
        return tape.total(tape.mul(scale, tape.pow_const(theta, 2)))

    with pytest.raises((DivergedTrainingError, Exception)):
        train(builder, np.ones(2), TrainConfig(max_iters=10))
    assert calls["n"] == 4


def test_bitwise_reproducibility():
    def make_runner():
        rng_pts = np.random.default_rng(123).normal(size=20)

        def builder(theta, it):
            pred = tape.mul(tape.take(theta, 0), rng_pts)
            err = tape.sub(pred, np.sin(rng_pts))
            return tape.mean(tape.mul(err, err))

        return train(builder, np.array([0.2, 0.5]),
                     TrainConfig(max_iters=200, convergence_window=0))

    p1, r1 = make_runner()
    p2, r2 = make_runner()
    assert np.array_equal(p1, p2)
    assert np.array_equal(r1.loss_history, r2.loss_history)


def test_checkpoints_recorded():
    def builder(theta, it):
        return tape.total(tape.pow_const(theta, 2))

    p, res = train(builder, np.array([1.0]),
                   TrainConfig(max_iters=30, convergence_window=0),
                   checkpoint_iters=(0, 10))
    assert set(res.checkpoints) == {0, 10}
    np.testing.assert_allclose(res.checkpoints[0], [1.0])
