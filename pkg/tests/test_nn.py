import json

import numpy as np
import pytest

from conftest import assert_close_rel, central_difference
from ddr import nn
from ddr.errors import DimensionError, NumericError


def single_layer(weight, bias, activation):
    return nn.MlpNetwork(
        [nn.Layer(np.array(weight, dtype=float), np.array(bias, dtype=float), activation)]
    )


class TestForward:
    def test_affine(self):
        net = single_layer([[2.0]], [1.0], nn.identity())
        np.testing.assert_allclose(nn.forward(net, [[3.0]]), [[7.0]])

    def test_relu_clamps_negative(self):
        net = single_layer([[1.0]], [0.0], nn.relu())
        np.testing.assert_allclose(nn.forward(net, [[-5.0]]), [[0.0]])

    def test_leaky_relu_slope(self):
        net = single_layer([[1.0]], [0.0], nn.leaky_relu(0.1))
        np.testing.assert_allclose(nn.forward(net, [[-10.0]]), [[-1.0]])

    def test_column_mismatch(self):
        net = nn.init_network([3, 2], nn.relu(), seed=0)
        with pytest.raises(DimensionError):
            nn.forward(net, np.zeros((4, 5)))

    def test_permutation_equivariant_over_rows(self):
        net = nn.init_network([4, 6, 2], nn.leaky_relu(), seed=5)
        rng = np.random.default_rng(0)
        x = rng.standard_normal((9, 4))
        perm = rng.permutation(9)
        np.testing.assert_array_equal(
            nn.forward(net, x[perm]), nn.forward(net, x)[perm]
        )


class TestInit:
    def test_seeded_init_is_bit_identical(self):
        a = nn.init_network([2, 1], nn.relu(), seed=7)
        b = nn.init_network([2, 1], nn.relu(), seed=7)
        for la, lb in zip(a.layers, b.layers):
            assert la.weight.tobytes() == lb.weight.tobytes()
            assert la.bias.tobytes() == lb.bias.tobytes()

    def test_dims_and_linear_head(self):
        net = nn.init_network([20, 16, 8, 1], nn.leaky_relu(), seed=0)
        assert len(net.layers) == 3
        assert net.input_dim == 20
        assert net.output_dim == 1
        assert net.layers[-1].activation.kind == "identity"
        assert all(np.all(l.bias == 0.0) for l in net.layers)

    def test_degenerate_dims_rejected(self):
        with pytest.raises(DimensionError):
            nn.init_network([5], nn.relu(), seed=0)
        with pytest.raises(DimensionError):
            nn.init_network([5, 0, 1], nn.relu(), seed=0)

    def test_he_uniform_bound(self):
        net = nn.init_network([8, 100], nn.relu(), seed=3)
        limit = np.sqrt(6.0 / 8)
        assert np.abs(net.layers[0].weight).max() <= limit


class TestBackward:
    def test_scalar_affine_chain_rule(self):
        net = single_layer([[2.0]], [0.0], nn.identity())
        grads, input_grad = nn.backward(net, [[5.0]], [[1.0]])
        np.testing.assert_allclose(input_grad, [[2.0]])
        np.testing.assert_allclose(grads[0][0], [[5.0]])
        np.testing.assert_allclose(grads[0][1], [1.0])

    def test_relu_zero_subgradient_region(self):
        net = single_layer([[1.0]], [0.0], nn.relu())
        _, input_grad = nn.backward(net, [[-5.0]], [[3.0]])
        np.testing.assert_allclose(input_grad, [[0.0]])

    def test_grad_output_shape_checked(self):
        net = nn.init_network([3, 2], nn.relu(), seed=0)
        with pytest.raises(DimensionError):
            nn.backward(net, np.zeros((4, 3)), np.zeros((4, 3)))

    def _check_gradients(self, dims, act, seed, rtol=1e-6):
        rng = np.random.default_rng(seed)
        net = nn.init_network(dims, act, seed=seed)
        # Random smooth perturbation keeps pre-activations away from kinks.
        for layer in net.layers:
            layer.bias += 0.1 * rng.standard_normal(layer.bias.shape)
        n = int(rng.integers(2, 8))
        x = rng.standard_normal((n, dims[0]))
        g = rng.standard_normal((n, dims[-1]))

        param_grads, input_grad = nn.backward(net, x, g)

        def loss_of_input(x_):
            return float((nn.forward(net, x_) * g).sum())

        assert_close_rel(
            input_grad, central_difference(loss_of_input, x), rtol, "input grad"
        )
        for k in range(len(net.layers)):
            for which in (0, 1):

                def loss_of_param(p, k=k, which=which):
                    clone = net.copy()
                    if which == 0:
                        clone.layers[k].weight = p
                    else:
                        clone.layers[k].bias = p
                    return float((nn.forward(clone, x) * g).sum())

                param = net.layers[k].weight if which == 0 else net.layers[k].bias
                assert_close_rel(
                    param_grads[k][which],
                    central_difference(loss_of_param, param),
                    rtol,
                    f"layer {k} param {which}",
                )

    def test_documented_seeded_instance(self):
        self._check_gradients([3, 4, 2], nn.leaky_relu(0.1), seed=42)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    @pytest.mark.parametrize(
        "dims,act",
        [
            ([2, 3, 1], nn.relu()),
            ([5, 8, 8, 2], nn.leaky_relu(0.05)),
            ([4, 6, 5, 3, 2], nn.leaky_relu()),
            ([3, 2], nn.identity()),
        ],
    )
    def test_gradients_match_finite_differences(self, dims, act, seed):
        self._check_gradients(dims, act, seed)


class TestOptimizers:
    def test_plain_sgd_step(self):
        net = single_layer([[1.0]], [0.0], nn.identity())
        opt = nn.Sgd(learning_rate=0.1)
        opt.apply(net, [(np.array([[1.0]]), np.array([0.0]))])
        np.testing.assert_allclose(net.layers[0].weight, [[0.9]])
        assert opt.step_count == 1

    def test_adam_first_step_magnitude_is_lr(self):
        for c in (0.5, 3.0, 100.0):
            net = single_layer([[1.0]], [0.0], nn.identity())
            opt = nn.Adam(learning_rate=0.01, eps=1e-12)
            opt.apply(net, [(np.array([[c]]), np.array([0.0]))])
            assert 1.0 - net.layers[0].weight[0, 0] == pytest.approx(0.01, rel=1e-6)

    def test_zero_gradient_is_fixed_point(self):
        net = nn.init_network([3, 2], nn.relu(), seed=1)
        before = [l.weight.copy() for l in net.layers]
        zero = [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in net.layers]
        nn.Sgd(0.1).apply(net, zero)
        nn.Adam(0.1).apply(net, zero)
        for w, layer in zip(before, net.layers):
            np.testing.assert_array_equal(w, layer.weight)

    def test_non_finite_gradient_names_layer(self):
        net = nn.init_network([3, 4, 2], nn.relu(), seed=1)
        grads = [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in net.layers]
        grads[1][0][0, 0] = np.nan
        with pytest.raises(NumericError, match="layer 1"):
            nn.Adam(0.1).apply(net, grads)

    def test_momentum_accumulates(self):
        net = single_layer([[0.0]], [0.0], nn.identity())
        opt = nn.Sgd(learning_rate=1.0, momentum=0.5)
        g = [(np.array([[1.0]]), np.array([0.0]))]
        opt.apply(net, g)  # v=1, w=-1
        opt.apply(net, g)  # v=1.5, w=-2.5
        np.testing.assert_allclose(net.layers[0].weight, [[-2.5]])

    def test_weight_decay_couples_into_gradient(self):
        net = single_layer([[1.0]], [0.0], nn.identity())
        opt = nn.Sgd(learning_rate=0.1, weight_decay=0.5)
        zero = [(np.array([[0.0]]), np.array([0.0]))]
        opt.apply(net, zero)
        np.testing.assert_allclose(net.layers[0].weight, [[1.0 - 0.1 * 0.5]])

    def test_optimizer_apply_dispatch(self):
        net = single_layer([[1.0]], [0.0], nn.identity())
        state = nn.Sgd(learning_rate=0.1)
        nn.optimizer_apply(state, net, [(np.array([[1.0]]), np.array([0.0]))])
        assert state.step_count == 1


def test_training_determinism():
    """Identical (seed, data) give bit-identical networks after T steps."""

    def train_once():
        rng = np.random.default_rng(123)
        net = nn.init_network([4, 8, 2], nn.leaky_relu(), seed=9)
        opt = nn.Adam(1e-3, weight_decay=1e-4)
        for _ in range(25):
            x = rng.standard_normal((16, 4))
            target = rng.standard_normal((16, 2))
            out = nn.forward(net, x)
            grads, _ = nn.backward(net, x, 2 * (out - target) / 16)
            opt.apply(net, grads)
        return net

    a, b = train_once(), train_once()
    for la, lb in zip(a.layers, b.layers):
        assert la.weight.tobytes() == lb.weight.tobytes()
        assert la.bias.tobytes() == lb.bias.tobytes()


class TestCheckpoints:
    def test_round_trip_is_bit_exact(self, tmp_path):
        net = nn.init_network([5, 7, 3], nn.leaky_relu(0.2), seed=11)
        path = tmp_path / "net.json"
        nn.save_checkpoint(net, str(path))
        loaded = nn.load_checkpoint(str(path))
        assert [l.activation for l in loaded.layers] == [
            l.activation for l in net.layers
        ]
        for la, lb in zip(net.layers, loaded.layers):
            np.testing.assert_array_equal(la.weight, lb.weight)
            np.testing.assert_array_equal(la.bias, lb.bias)

    def test_version_is_first_key(self, tmp_path):
        net = nn.init_network([2, 1], nn.relu(), seed=0)
        path = tmp_path / "net.json"
        nn.save_checkpoint(net, str(path))
        doc = json.loads(path.read_text())
        assert next(iter(doc)) == "version"
        assert doc["version"] == 1

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "net.json"
        path.write_text(json.dumps({"version": 99}))
        with pytest.raises(ValueError, match="version"):
            nn.load_checkpoint(str(path))
