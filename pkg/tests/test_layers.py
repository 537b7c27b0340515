import numpy as np
import pytest

from nestedvae.autograd import Tensor, grad_check
from nestedvae.autograd import functional as F
from nestedvae.errors import DimensionError, UsageError
from nestedvae.layers import Conv2d, Flatten, Linear, Reshape, Sequential, UpsampleConv2d, glorot_init


class TestGlorot:
    def test_bound_and_shape(self, rng):
        w = glorot_init(30, 20, rng)
        assert w.shape == (30, 20)
        assert w.requires_grad
        assert np.abs(w.data).max() <= np.sqrt(6.0 / 50)

    def test_empirical_mean(self):
        n = 100000
        w = glorot_init(3, 3, np.random.default_rng(0), shape=(n,))
        assert np.abs(w.data).max() <= 1.0
        assert abs(w.data.mean()) < 3 * 1.0 / np.sqrt(3 * n)

    def test_seeded(self):
        a = glorot_init(4, 3, np.random.default_rng(7))
        b = glorot_init(4, 3, np.random.default_rng(7))
        np.testing.assert_array_equal(a.data, b.data)

    def test_rejects_empty_fan(self, rng):
        with pytest.raises(UsageError):
            glorot_init(0, 3, rng)


class TestLinear:
    def test_forward(self, rng):
        layer = Linear(3, 2, rng=rng)
        x = rng.standard_normal((5, 3))
        out = layer(Tensor(x))
        np.testing.assert_allclose(out.data, x @ layer.weight.data)
        np.testing.assert_array_equal(layer.bias.data, np.zeros(2))

    def test_wrong_input_width(self, rng):
        with pytest.raises(DimensionError):
            Linear(3, 2, rng=rng)(Tensor(np.ones((5, 4))))

    def test_unknown_activation(self, rng):
        with pytest.raises(UsageError):
            Linear(3, 2, activation='tanh', rng=rng)(Tensor(np.ones((1, 3))))

    def test_grad_check(self, rng):
        layer = Linear(3, 2, activation='sigmoid', rng=rng)
        x = Tensor(rng.uniform(0.5, 1.5, size=(4, 3)))
        err = grad_check(lambda _: F.sum(layer(x)), [layer.weight, layer.bias], h=1e-5)
        assert err < 1e-6


class TestConv:
    def test_output_shape(self, rng):
        conv = Conv2d(1, 4, 4, stride=2, padding=1, rng=rng)
        out = conv(Tensor(np.zeros((2, 1, 8, 8))))
        assert out.shape == (2,) + conv.output_shape(8, 8) == (2, 4, 4, 4)

    def test_upsample_conv_doubles_resolution(self, rng):
        up = UpsampleConv2d(4, 2, 3, rng=rng)
        out = up(Tensor(np.zeros((3, 4, 5, 5))))
        assert out.shape == (3, 2, 10, 10)
        assert up.output_shape(5, 5) == (2, 10, 10)

    def test_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            Conv2d(3, 4, 3, rng=rng)(Tensor(np.zeros((1, 1, 5, 5))))

    def test_grad_check(self, rng):
        conv = Conv2d(2, 3, 3, stride=1, padding=1, activation='sigmoid', rng=rng)
        x = Tensor(rng.uniform(0.5, 1.5, size=(2, 2, 4, 4)))
        err = grad_check(lambda _: F.sum(conv(x)), [conv.weight, conv.bias], h=1e-5)
        assert err < 1e-6


class TestModule:
    def make(self, rng):
        return Sequential(Flatten(), Linear(16, 5, activation='relu', rng=rng), Linear(5, 16, rng=rng),
                          Reshape((1, 4, 4)))

    def test_forward_shapes(self, rng):
        net = self.make(rng)
        assert net(Tensor(np.ones((2, 1, 4, 4)))).shape == (2, 1, 4, 4)

    def test_named_parameters_are_ordered(self, rng):
        net = self.make(rng)
        names = [name for name, _ in net.named_parameters()]
        assert names == ['layers.1.weight', 'layers.1.bias', 'layers.2.weight', 'layers.2.bias']
        assert net.num_parameters() == 16 * 5 + 5 + 5 * 16 + 16

    def test_state_dict_round_trip_in_place(self, rng):
        net = self.make(rng)
        other = self.make(np.random.default_rng(99))
        weight = other.layers[1].weight
        other.load_state_dict(net.state_dict())
        assert other.layers[1].weight is weight
        for (_, a), (_, b) in zip(net.named_parameters(), other.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data)

    def test_state_dict_mismatch(self, rng):
        net = self.make(rng)
        state = net.state_dict()
        state.pop('layers.2.bias')
        with pytest.raises(DimensionError):
            net.load_state_dict(state)
        state = net.state_dict()
        state['layers.2.bias'] = np.zeros(3)
        with pytest.raises(DimensionError):
            net.load_state_dict(state)

    def test_zero_grad(self, rng):
        net = self.make(rng)
        F.sum(net(Tensor(np.ones((2, 1, 4, 4))))).backward()
        assert all(p.grad is not None for p in net.parameters())
        net.zero_grad()
        assert all(p.grad is None for p in net.parameters())

    def test_named_modules(self, rng):
        names = [name for name, _ in self.make(rng).named_modules()]
        assert names == ['', 'layers.0', 'layers.1', 'layers.2', 'layers.3']
