import numpy as np
import pytest

from nestedvae.autograd import Graph, Tensor, as_tensor, backward, grad_check, no_grad
from nestedvae.autograd import functional as F
from nestedvae.errors import DimensionError, DomainError, NumericError, UsageError


def positive(rng, *shape):
    return Tensor(rng.uniform(0.5, 1.5, size=shape), requires_grad=True)


class TestScalars:
    def test_python_scalar_stays_zero_dimensional(self):
        assert as_tensor(0.5).shape == ()
        assert Tensor(np.float64(2.0)).ndim == 0
        assert F.sum(Tensor(np.ones((2, 3)))).shape == ()

    def test_tensor_scalar_arithmetic(self, rng):
        w = Tensor(rng.standard_normal((4, 4)), requires_grad=True)
        loss = F.sum(F.sub(F.mul(w, 0.5), 1.0))
        assert loss.shape == ()
        backward(loss)
        np.testing.assert_array_equal(w.grad, np.full((4, 4), 0.5))

    def test_scalar_tensor_operand_gets_summed_gradient(self, rng):
        w = Tensor(rng.standard_normal((2, 3)))
        s = Tensor(2.0, requires_grad=True)
        backward(F.sum(F.mul(w, s)))
        assert s.grad.shape == ()
        np.testing.assert_allclose(s.grad, w.data.sum())

    def test_mean_of_loss_is_scalar(self, rng):
        x = positive(rng, 3, 2)
        loss = F.mean(F.square(x)) / 2.0
        assert loss.shape == ()
        loss.backward()
        np.testing.assert_allclose(x.grad, x.data / 6.0)


class TestBackward:
    def test_sum_gives_ones(self, rng):
        w = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        backward(F.sum(w))
        np.testing.assert_array_equal(w.grad, np.ones((3, 4)))

    def test_sum_of_squares(self):
        w = Tensor([1.0, 2.0], requires_grad=True)
        backward(F.sum(F.square(w)))
        np.testing.assert_allclose(w.grad, [2.0, 4.0])

    def test_shared_subexpression_accumulates(self, rng):
        data = rng.standard_normal(5)
        a = Tensor(data, requires_grad=True)
        b = Tensor(data, requires_grad=True)
        backward(F.sum(F.mul(a, a)))
        backward(F.sum(F.square(b)))
        np.testing.assert_allclose(a.grad, b.grad)

    def test_leaf_gradients_accumulate_until_zeroed(self):
        w = Tensor([1.0, -1.0], requires_grad=True)
        backward(F.sum(w))
        backward(F.sum(w))
        np.testing.assert_array_equal(w.grad, [2.0, 2.0])
        w.zero_grad()
        assert w.grad is None

    def test_non_scalar_loss_rejected(self):
        w = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(UsageError):
            backward(F.mul(w, 2.0))

    def test_operator_overloads(self):
        w = Tensor([3.0], requires_grad=True)
        loss = ((w * 2.0 - 1.0) / 5.0).sum()
        loss.backward()
        np.testing.assert_allclose(loss.item(), 1.0)
        np.testing.assert_allclose(w.grad, [0.4])

    def test_graph_lists_each_node_once(self):
        w = Tensor([1.0, 2.0], requires_grad=True)
        y = F.mul(w, w)
        graph = Graph(F.sum(F.add(y, y)))
        ids = [n.node_id for n in graph.nodes]
        assert len(ids) == len(set(ids))
        assert graph.leaves() == [w]
        assert graph.nodes[-1] is graph.output


class TestNoGrad:
    def test_no_graph_recorded(self):
        w = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = F.mul(w, 3.0)
        assert not y.requires_grad
        assert y.is_leaf
        assert F.mul(w, 3.0).requires_grad


class TestForwardChecks:
    def test_overflow_raises_numeric_error(self):
        with pytest.raises(NumericError):
            F.exp(Tensor([1000.0]))

    def test_log_of_negative_raises_domain_error(self):
        with pytest.raises(DomainError):
            F.log(Tensor([-1.0]))

    def test_sqrt_of_negative_raises_domain_error(self):
        with pytest.raises(DomainError):
            F.sqrt(Tensor([-4.0]))

    def test_log_of_zero_is_not_finite(self):
        with pytest.raises(NumericError):
            F.log(Tensor([0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            F.add(Tensor(np.ones(3)), Tensor(np.ones(4)))
        with pytest.raises(DimensionError):
            F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        with pytest.raises(DimensionError):
            F.add_bias(Tensor(np.ones((2, 3))), Tensor(np.ones(4)))

    def test_unknown_elementwise_op(self):
        with pytest.raises(UsageError):
            F.elementwise('tanh', Tensor([1.0]))

    def test_forward_is_deterministic(self, rng):
        x = Tensor(rng.standard_normal((2, 3, 6, 6)))
        k = Tensor(rng.standard_normal((4, 3, 3, 3)))
        np.testing.assert_array_equal(F.conv2d(x, k, 2, 1).data, F.conv2d(x, k, 2, 1).data)


class TestGradCheck:
    def test_sum_of_squares_is_exact(self, rng):
        theta = positive(rng, 5)
        assert grad_check(lambda t: F.sum(F.square(t)), theta, h=1e-5) < 1e-8

    def test_constant_function(self, rng):
        theta = positive(rng, 4)
        assert grad_check(lambda t: F.mul(F.sum(t), 0.0), theta) == 0.0

    def test_rejects_bad_step(self, rng):
        with pytest.raises(UsageError):
            grad_check(lambda t: F.sum(t), positive(rng, 2), h=0.0)

    @pytest.mark.parametrize('op', ['relu', 'sigmoid', 'exp', 'log', 'square', 'sqrt'])
    def test_unary_ops(self, rng, op):
        theta = positive(rng, 2, 3)
        assert grad_check(lambda t: F.sum(F.elementwise(op, t)), theta, h=1e-5) < 1e-6

    @pytest.mark.parametrize('op', ['add', 'sub', 'mul'])
    def test_binary_ops(self, rng, op):
        a, b = positive(rng, 2, 3), positive(rng, 2, 3)
        assert grad_check(lambda ts: F.sum(F.elementwise(op, *ts)), [a, b], h=1e-5) < 1e-6

    def test_matmul(self, rng):
        a, b = positive(rng, 2, 3), positive(rng, 3, 4)
        assert grad_check(lambda ts: F.sum(F.matmul(*ts)), [a, b], h=1e-5) < 1e-6

    def test_add_bias(self, rng):
        x, b = positive(rng, 2, 3, 2, 2), positive(rng, 3)
        assert grad_check(lambda ts: F.sum(F.square(F.add_bias(*ts))), [x, b], h=1e-5) < 1e-6

    def test_conv2d(self, rng):
        x, k = positive(rng, 1, 2, 5, 5), positive(rng, 3, 2, 3, 3)
        err = grad_check(lambda ts: F.sum(F.square(F.conv2d(ts[0], ts[1], stride=2, padding=1))), [x, k], h=1e-5)
        assert err < 1e-6

    def test_upsample(self, rng):
        x = positive(rng, 1, 2, 3, 3)
        assert grad_check(lambda t: F.sum(F.square(F.upsample_nearest(t, 2))), x, h=1e-5) < 1e-6

    def test_clamp_mean_reshape(self, rng):
        x = positive(rng, 2, 6)
        f = lambda t: F.mean(F.square(F.reshape(F.clamp(t, 0.0, 2.0), (3, 4))))
        assert grad_check(f, x, h=1e-5) < 1e-6


class TestConvShapes:
    def test_output_size(self):
        assert F.conv_output_size(28, 4, 2, 1) == 14
        out = F.conv2d(Tensor(np.zeros((2, 1, 28, 28))), Tensor(np.zeros((32, 1, 4, 4))), stride=2, padding=1)
        assert out.shape == (2, 32, 14, 14)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            F.conv2d(Tensor(np.zeros((1, 2, 5, 5))), Tensor(np.zeros((1, 3, 3, 3))))


class TestTorchOracle:
    def test_conv2d_matches_torch(self, rng):
        torch = pytest.importorskip('torch')
        x_np = rng.standard_normal((2, 3, 7, 7))
        k_np = rng.standard_normal((4, 3, 3, 3))
        g_np = rng.standard_normal((2, 4, 4, 4))

        x, k = Tensor(x_np, requires_grad=True), Tensor(k_np, requires_grad=True)
        out = F.conv2d(x, k, stride=2, padding=1)
        backward(F.sum(F.mul(out, Tensor(g_np))))

        tx = torch.tensor(x_np, requires_grad=True)
        tk = torch.tensor(k_np, requires_grad=True)
        tout = torch.nn.functional.conv2d(tx, tk, stride=2, padding=1)
        (tout * torch.tensor(g_np)).sum().backward()

        np.testing.assert_allclose(out.data, tout.detach().numpy(), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(x.grad, tx.grad.numpy(), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(k.grad, tk.grad.numpy(), rtol=1e-10, atol=1e-12)
