import numpy as np
import pytest

from stressfn import jets, nets, tape
from stressfn.errors import InvalidArchitectureError, InvalidInputError
from stressfn.nets import (DeepOnet, Mlp, deeponet_forward, load_model,
                           mlp_forward_jet, mlp_init, mlp_zero, n_params,
                           save_model)


def test_param_count():
    assert n_params((2, 20, 20, 1)) == 501


def test_same_seed_bit_identical():
    a = mlp_init((2, 20, 20, 1), 42)
    b = mlp_init((2, 20, 20, 1), 42)
    assert np.array_equal(a.params, b.params)


def test_invalid_widths():
    with pytest.raises(InvalidArchitectureError):
        mlp_init((3,), 0)
    with pytest.raises(InvalidArchitectureError):
        mlp_init((2, 0, 1), 0)


def test_trunk_output_width():
    trunk = mlp_init((1,) + (30,) * 6 + (30,), 0)
    x = jets.jet_seed(0, np.linspace(0, 1, 5), 1, 0)
    outs = mlp_forward_jet(trunk, [x])
    assert len(outs) == 30


def test_xavier_variance():
    net = mlp_init((20, 20, 20), 3)
    w0 = net.params[: 20 * 20]
    want = 2.0 / (20 + 20)
    assert abs(w0.var() - want) < 0.2 * want


def test_zero_net_outputs_bias_only():
    net = mlp_zero((2, 5, 1))
    net.params[-1] = 0.7  # output bias
    pts = np.random.default_rng(0).uniform(-1, 1, (6, 2))
    out = mlp_forward_jet(net, list(jets.seed_xy(pts, 2)))[0]
    d = out.partials_dict()
    np.testing.assert_allclose(d[(0, 0)], 0.7)
    for k, v in d.items():
        if k != (0, 0):
            np.testing.assert_allclose(v, 0.0)


def test_scalar_tanh_net():
    # 1-1-1 net, unit weights, zero bias: f(x) = tanh(x)
    net = Mlp((1, 1, 1), np.array([1.0, 0.0, 1.0, 0.0]))
    out = mlp_forward_jet(net, [jets.jet_seed(0, 0.0, 1, 1)])[0]
    d = out.partials_dict()
    np.testing.assert_allclose([d[0], d[1]], [0.0, 1.0], atol=1e-15)


def test_output_layer_affine():
    # doubling the last weight doubles (output - output_bias)
    net = mlp_init((1, 4, 1), 8)
    x = jets.jet_seed(0, np.array([0.3]), 1, 0)
    base = tape.value_of(mlp_forward_jet(net, [x])[0].value)
    boosted = net.params.copy()
    w_sl, _, b_sl = nets.param_layout(net.widths)[-1]
    boosted[w_sl] *= 2.0
    bias = boosted[b_sl][0]
    twice = tape.value_of(mlp_forward_jet(nets.Mlp(net.widths, boosted), [x])[0].value)
    np.testing.assert_allclose(twice - bias, 2 * (base - bias), rtol=1e-12)


def test_second_partial_matches_fd():
    net = mlp_init((2, 20, 20, 1), 17)
    pts = np.random.default_rng(2).uniform(-1, 1, (30, 2))
    jx, jy = jets.seed_xy(pts, 2)
    d20 = tape.value_of(mlp_forward_jet(net, [jx, jy])[0].partial((2, 0)))
    h = 1e-4
    shift = pts.copy()
    shift[:, 0] += h
    dxp = tape.value_of(mlp_forward_jet(net, list(jets.seed_xy(shift, 1)))[0].partial((1, 0)))
    shift[:, 0] -= 2 * h
    dxm = tape.value_of(mlp_forward_jet(net, list(jets.seed_xy(shift, 1)))[0].partial((1, 0)))
    fd = (dxp - dxm) / (2 * h)
    np.testing.assert_allclose(d20, fd, rtol=1e-5, atol=1e-8)


def test_shape_mismatch_rejected():
    net = mlp_init((2, 4, 1), 0)
    with pytest.raises(InvalidInputError):
        mlp_forward_jet(net, [jets.jet_seed(0, 0.0, 1, 1)])


# ---------------------------------------------------------------------------
# DeepONet


def _const_mlp(value):
    # 1-1-1 net with zero weights: output = bias = value
    return Mlp((1, 1, 1), np.array([0.0, 0.0, 0.0, value]))


def test_deeponet_constant_product():
    op = DeepOnet(_const_mlp(2.0), _const_mlp(3.0))
    out = deeponet_forward(op, [0.4], [jets.jet_seed(0, 0.1, 1, 1)])
    np.testing.assert_allclose(tape.value_of(out.value), 6.0)


def test_deeponet_zero_branch():
    branch = mlp_init((2, 8, 4), 0)
    w_sl, _, b_sl = nets.param_layout(branch.widths)[-1]
    branch.params[w_sl] = 0.0
    branch.params[b_sl] = 0.0
    trunk = mlp_init((1, 8, 4), 1)
    op = DeepOnet(branch, trunk)
    out = deeponet_forward(op, [1.0, 2.0], [jets.jet_seed(0, np.linspace(0, 1, 7), 1, 2)])
    np.testing.assert_allclose(tape.value_of(out.data), 0.0, atol=1e-15)


def test_deeponet_width_mismatch():
    with pytest.raises(InvalidArchitectureError):
        DeepOnet(mlp_init((2, 8, 3), 0), mlp_init((1, 8, 4), 1))


def test_deeponet_trunk_derivative_matches_fd():
    op = DeepOnet(mlp_init((2, 10, 5), 0), mlp_init((1, 10, 5), 1))
    u = [0.5, 1.5]
    x = np.array([0.3])
    d1 = tape.value_of(deeponet_forward(op, u, [jets.jet_seed(0, x, 1, 1)]).partial(1))
    h = 1e-6
    vp = tape.value_of(deeponet_forward(op, u, [jets.jet_seed(0, x + h, 1, 0)]).value)
    vm = tape.value_of(deeponet_forward(op, u, [jets.jet_seed(0, x - h, 1, 0)]).value)
    np.testing.assert_allclose(d1, (vp - vm) / (2 * h), rtol=1e-6)


def test_deeponet_bilinear():
    # output is linear in the final-layer weights of each side
    op = DeepOnet(mlp_init((1, 6, 4), 3), mlp_init((1, 6, 4), 4))
    x = [jets.jet_seed(0, 0.2, 1, 0)]
    u = [0.7]
    base = tape.value_of(deeponet_forward(op, u, x).value)

    w_sl, _, b_sl = nets.param_layout(op.branch.widths)[-1]
    doubled = op.branch.params.copy()
    doubled[w_sl] *= 2.0
    doubled[b_sl] *= 2.0
    op2 = DeepOnet(Mlp(op.branch.widths, doubled), op.trunk)
    np.testing.assert_allclose(
        tape.value_of(deeponet_forward(op2, u, x).value), 2 * base, rtol=1e-12)


# ---------------------------------------------------------------------------
# serialization


def test_mlp_roundtrip(tmp_path):
    net = mlp_init((2, 20, 20, 1), 42)
    path = tmp_path / "net.bin"
    save_model(path, net)
    back = load_model(path)
    assert back.widths == net.widths
    assert np.array_equal(back.params, net.params)


def test_deeponet_roundtrip(tmp_path):
    op = DeepOnet(mlp_init((2, 30, 30, 30, 30), 0), mlp_init((1,) + (30,) * 6 + (30,), 1))
    path = tmp_path / "op.bin"
    save_model(path, op)
    back = load_model(path)
    assert np.array_equal(back.pack(), op.pack())


def test_truncated_model_file(tmp_path):
    net = mlp_init((1, 4, 1), 0)
    path = tmp_path / "net.bin"
    save_model(path, net)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(InvalidInputError):
        load_model(path)
