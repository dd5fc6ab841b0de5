"""Finite-difference checks of every layer's backward pass and both losses."""
import numpy as np
import pytest

from ftl.layers import (
    BoundedHeads,
    Conv2d,
    Dense,
    Flatten,
    Lstm,
    MaxPool2d,
    Network,
    Relu,
    SeqTrunk,
    Softmax,
)
from ftl.losses import (
    additive_l2_batch,
    additive_l2_loss,
    cross_entropy_batch,
    cross_entropy_loss,
)
from ftl.models import RnConfig, build_mcn, build_rn
from ftl.ops import softmax
from ftl.tensor import ConvSpec, LstmSpec

import oracles
from gradcheck import fd_check_input, fd_check_network, scalar_loss_sum

TOL = 1e-4


def _net(*layers):
    return Network("t", [(f"l{i}", l) for i, l in enumerate(layers)])


class TestLayerGradients:
    def test_conv_params_and_input(self):
        rng = np.random.default_rng(0)
        spec = ConvSpec(3, 4, 3, 3, stride=2, padding=1)
        net = _net(Conv2d(spec, rng))
        x = rng.normal(size=(2, 3, 7, 8))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL
        assert fd_check_input(net, x, scalar_loss_sum) < TOL

    def test_grouped_conv_params(self):
        rng = np.random.default_rng(1)
        spec = ConvSpec(8, 8, 3, 3, padding=1, groups=4)
        net = _net(Conv2d(spec, rng))
        x = rng.normal(size=(2, 8, 5, 6))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL
        assert fd_check_input(net, x, scalar_loss_sum) < TOL

    def test_grouped_conv_gradient_locality(self):
        # the gradient of group-g weights must ignore other groups' inputs
        rng = np.random.default_rng(2)
        spec = ConvSpec(6, 6, 3, 3, padding=1, groups=3, bias=False)
        layer = Conv2d(spec, rng)
        x1 = rng.normal(size=(1, 6, 5, 5))
        x2 = x1.copy()
        x2[:, 2:] = rng.normal(size=(1, 4, 5, 5))  # perturb groups 1 and 2 only
        dy = rng.normal(size=(1, 6, 5, 5))
        _, c1 = layer.forward(x1)
        _, g1 = layer.backward(c1, dy)
        _, c2 = layer.forward(x2)
        _, g2 = layer.backward(c2, dy)
        assert np.array_equal(g1[0][:2], g2[0][:2])
        assert not np.array_equal(g1[0][2:4], g2[0][2:4])

    def test_maxpool_input_gradient(self):
        rng = np.random.default_rng(3)
        net = _net(MaxPool2d(2, 2))
        x = rng.normal(size=(2, 3, 6, 6))
        assert fd_check_input(net, x, scalar_loss_sum) < TOL

    def test_maxpool_overlapping_and_ceil(self):
        rng = np.random.default_rng(4)
        for pool in (MaxPool2d(3, 2), MaxPool2d(3, 3, ceil_mode=True)):
            x = rng.normal(size=(1, 2, 7, 7))
            assert fd_check_input(_net(pool), x, scalar_loss_sum) < TOL

    def test_dense_relu_chain(self):
        rng = np.random.default_rng(5)
        net = _net(Dense(6, 5, rng), Relu(), Dense(5, 3, rng))
        x = rng.normal(size=(4, 6))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL
        assert fd_check_input(net, x, scalar_loss_sum) < TOL

    def test_single_dense_gradient_is_outer_product(self):
        rng = np.random.default_rng(6)
        layer = Dense(4, 3, rng)
        x = rng.normal(size=(1, 4))
        y, cache = layer.forward(x)
        dy = rng.normal(size=(1, 3))
        _, (dw, db) = layer.backward(cache, dy)
        assert np.allclose(dw, np.outer(dy[0], x[0]), atol=1e-12)
        assert np.allclose(db, dy[0], atol=1e-12)

    def test_softmax_exact_jacobian(self):
        rng = np.random.default_rng(7)
        net = _net(Dense(5, 4, rng), Softmax())
        x = rng.normal(size=(3, 5))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL

    def test_lstm_params_and_input(self):
        rng = np.random.default_rng(8)
        net = _net(Lstm(LstmSpec(4, 3, 5), rng))
        x = rng.normal(size=(2, 5, 4))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL
        assert fd_check_input(net, x, scalar_loss_sum) < TOL

    def test_bounded_heads(self):
        rng = np.random.default_rng(9)
        net = _net(Dense(3, 2, rng), BoundedHeads())
        x = rng.normal(size=(4, 3))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL

    def test_seq_trunk_accumulates_over_frames(self):
        rng = np.random.default_rng(10)
        trunk = SeqTrunk([
            ("c", Conv2d(ConvSpec(2, 3, 3, 3, padding=1), rng)),
            ("r", Relu()),
            ("f", Flatten()),
        ])
        net = _net(trunk)
        x = rng.normal(size=(2, 4, 2, 5, 5))
        assert fd_check_network(net, x, scalar_loss_sum) < TOL

    def test_zero_loss_gradient_gives_zero_grads(self):
        rng = np.random.default_rng(11)
        net = _net(Dense(3, 2, rng))
        x = rng.normal(size=(2, 3))
        out, tape = net.forward(x)
        _, grads = net.backward(tape, np.zeros_like(out))
        assert all(np.all(g == 0.0) for g in grads.values())


class TestLossGradients:
    def test_cross_entropy_values(self):
        loss, _ = cross_entropy_loss(np.array([1.0, 0.0]), 0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        loss2, _ = cross_entropy_loss(np.array([0.5, 0.5]), 1)
        assert loss2 == pytest.approx(np.log(2.0), abs=1e-12)

    def test_cross_entropy_label_out_of_range(self):
        with pytest.raises(IndexError):
            cross_entropy_loss(np.array([0.5, 0.5]), 2)

    def test_cross_entropy_grad_matches_fd_through_softmax(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            logits = rng.normal(scale=2.0, size=5)
            label = int(rng.integers(5))
            _, grad = cross_entropy_loss(softmax(logits), label)
            fd = oracles.finite_difference(
                lambda z: -np.log(softmax(z)[label]), logits, eps=1e-6)
            assert oracles.rel_err(grad, fd, floor=1e-6) < 1e-6

    def test_additive_l2(self):
        loss, grad = additive_l2_loss([1.0, 0.0], [0.0, 0.0])
        assert loss == 1.0
        assert np.array_equal(grad, [2.0, 0.0])
        loss0, _ = additive_l2_loss([0.3, 0.4], [0.3, 0.4])
        assert loss0 == 0.0

    def test_additive_l2_grad_matches_fd(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            pred = rng.normal(size=2)
            target = rng.normal(size=2)
            _, grad = additive_l2_loss(pred, target)
            fd = oracles.finite_difference(
                lambda p: float(np.sum((p - target) ** 2)), pred, eps=1e-6)
            assert oracles.rel_err(grad, fd) < 1e-8


class TestFullModelGradients:
    def test_toy_mcn_with_fused_cross_entropy(self):
        from ftl.models import McnConfig
        cfg = McnConfig(input_shape=(6, 20, 24), conv_channels=(4, 8),
                        pool_windows=((2, 2), (2, 2)), groups=4, dense_hidden=5)
        net = build_mcn(cfg, seed=3)
        rng = np.random.default_rng(14)
        x = rng.uniform(size=(2, 6, 20, 24))
        labels = np.array([0, 1])

        def loss_fn(out):
            return cross_entropy_batch(out, labels)

        worst = fd_check_network(net, x, loss_fn, from_logits=True, max_indices=30)
        assert worst < TOL

    def test_toy_rn_every_parameter(self):
        cfg = RnConfig(input_shape=(6, 12, 16), conv_channels=(3, 4, 8),
                       pool_windows=((2, 2), (2, 2)), groups=4, lstm_hidden=3,
                       sequence_length=5)
        net = build_rn(cfg, seed=4)
        rng = np.random.default_rng(15)
        x = rng.uniform(size=(1, 5, 6, 12, 16))
        target = np.array([[0.3, 0.6]])

        def loss_fn(out):
            return additive_l2_batch(out, target)

        worst = fd_check_network(net, x, loss_fn)  # all parameters, no sampling
        assert worst < TOL
