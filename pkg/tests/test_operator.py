import numpy as np
import pytest

from stressfn import operator, torsion, tube, wedge
from stressfn.errors import InvalidConfigError
from stressfn.nets import DeepOnet, mlp_init
from stressfn.optim import TrainConfig


def test_dataset_sizes_and_exclusions():
    tube_data = operator.build_dataset("tube", grid=20)
    assert tube_data.n_cases == 121
    assert not any(np.allclose(b, (5.0, 10.0)) for b in tube_data.branch_inputs)

    torsion_data = operator.build_dataset("torsion", grid=12)
    assert torsion_data.n_cases == 11
    assert not any(np.allclose(b, (1.0, 1.0)) for b in torsion_data.branch_inputs)

    wedge_data = operator.build_dataset("wedge", grid=16)
    assert wedge_data.n_cases == 110
    assert not any(np.allclose(b, (np.pi / 6, 5.0))
                   for b in wedge_data.branch_inputs)


def test_dataset_deterministic():
    a = operator.build_dataset("tube", grid=15)
    b = operator.build_dataset("tube", grid=15)
    assert np.array_equal(a.targets, b.targets)
    assert np.array_equal(a.branch_inputs, b.branch_inputs)


def test_dataset_roundtrip(tmp_path):
    data = operator.build_dataset("wedge", grid=10)
    path = tmp_path / "wedge.npz"
    operator.save_dataset(path, data)
    back = operator.load_dataset(path)
    assert back.problem == "wedge"
    assert back.test_case == data.test_case
    assert back.target_scale == data.target_scale
    np.testing.assert_array_equal(back.targets, data.targets)
    np.testing.assert_array_equal(back.coords, data.coords)


def test_unknown_problem():
    with pytest.raises(InvalidConfigError):
        operator.build_dataset("plate")


def test_torsion_targets_match_series():
    data = operator.build_dataset("torsion", grid=9)
    a, b = data.branch_inputs[0]
    spec = torsion.TorsionSpec(a=a, b=b)
    alpha = spec.M_t / (torsion.beta_series(spec.ratio) * spec.G * a * b ** 3)
    x, y = data.raw_coords[0]
    phi, _, _ = torsion.torsion_series_oracle(spec, x, y, alpha=alpha)
    basis = (x ** 2 - a ** 2 / 4) * (y ** 2 - b ** 2 / 4)
    mask = np.abs(basis) > 1e-14
    np.testing.assert_allclose(data.targets[0][mask] * basis[mask], phi[mask],
                               rtol=1e-10)


def test_pretrain_reduces_mse_and_is_deterministic():
    data = operator.build_dataset("tube", grid=12)
    cfg = TrainConfig(max_iters=150, seed=3, fixed_iters=True)
    op = operator.deeponet_for("tube", 3)
    t1, r1 = operator.pretrain(op, data, cfg, batch_points=0)
    assert r1.loss_history[-1] < r1.loss_history[0]
    op2 = operator.deeponet_for("tube", 3)
    t2, r2 = operator.pretrain(op2, data, cfg, batch_points=0)
    assert np.array_equal(t1.pack(), t2.pack())
    assert np.array_equal(r1.loss_history, r2.loss_history)


def test_pretrain_minibatched_runs():
    data = operator.build_dataset("torsion", grid=8)
    cfg = TrainConfig(max_iters=60, seed=0, fixed_iters=True)
    op = operator.deeponet_for("torsion", 0)
    trained, res = operator.pretrain(op, data, cfg, batch_points=256)
    assert len(res.loss_history) == 60
    assert np.all(np.isfinite(res.loss_history))


def test_finetune_tube_smoke():
    data = operator.build_dataset("tube", grid=12)
    op = operator.deeponet_for("tube", 1)
    theta, res, spec = operator.finetune_tube(
        op, data, config=TrainConfig(max_iters=5, fixed_iters=True), n_r=128)
    assert res.iterations == 5
    fields = operator.tube_fields_at(op, data, spec, theta, n_eval=32)
    assert np.all(np.isfinite(fields["sigma_r_pred"]))


def test_finetune_wedge_smoke():
    data = operator.build_dataset("wedge", grid=10)
    op = operator.deeponet_for("wedge", 1)
    theta, res, spec = operator.finetune_wedge(
        op, data, config=TrainConfig(max_iters=5, fixed_iters=True), n_theta=32)
    fields = operator.wedge_fields_at(op, data, spec, theta, n_eval=16)
    assert np.all(np.isfinite(fields["tau_rtheta_pred"]))


def test_torsion_energy_eval_finite():
    data = operator.build_dataset("torsion", grid=8)
    op = operator.deeponet_for("torsion", 2)
    spec = torsion.TorsionSpec(alpha_init=70.0)
    e = operator.torsion_energy_at(op, data, spec, op.pack(), n_interior=500)
    assert np.isfinite(e)


def test_architecture_matches_contract():
    op = operator.deeponet_for("tube", 0)
    assert op.trunk.widths == (1,) + (30,) * 6 + (30,)
    assert op.branch.widths == (2,) + (30,) * 3 + (30,)
    assert op.p == 30
