# Copyright (c) 2024 NestedVAE developers
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
#
# Differentiable operations over nestedvae.autograd.Tensor. Every op checks its
# operand shapes, computes the forward value with numpy and registers the
# matching backward rule.
#
# ===============================================================================================


from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from nestedvae.autograd.tensor import Function, Tensor, as_tensor
from nestedvae.errors import DimensionError, DomainError, UsageError

__all__ = [
    'add',
    'sub',
    'mul',
    'neg',
    'matmul',
    'add_bias',
    'relu',
    'sigmoid',
    'exp',
    'log',
    'square',
    'sqrt',
    'clamp',
    'sum',
    'mean',
    'reshape',
    'flatten',
    'conv2d',
    'conv_output_size',
    'upsample_nearest',
    'elementwise',
]


def _check_same_or_scalar(a: np.ndarray, b: np.ndarray, name: str) -> None:
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise DimensionError('{}: operand shapes {} and {} differ'.format(name, a.shape, b.shape))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    # scalar operands receive the summed gradient
    if shape == ():
        return np.asarray(grad.sum())
    return grad


class _Add(Function):
    def forward(self, a, b):
        _check_same_or_scalar(a, b, 'add')
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)


class _Sub(Function):
    def forward(self, a, b):
        _check_same_or_scalar(a, b, 'sub')
        return a - b

    def backward(self, grad):
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)


class _Mul(Function):
    def forward(self, a, b):
        _check_same_or_scalar(a, b, 'mul')
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)


class _Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class _MatMul(Function):
    def forward(self, a, b):
        if a.ndim != 2 or b.ndim != 2:
            raise DimensionError('matmul expects 2-D operands, got {} and {}'.format(a.shape, b.shape))
        if a.shape[1] != b.shape[0]:
            raise DimensionError('matmul inner dimensions differ: {} x {}'.format(a.shape, b.shape))
        return a @ b

    def backward(self, grad):
        a, b = self.inputs
        return grad @ b.data.T, a.data.T @ grad


class _AddBias(Function):
    # bias of shape (F,) broadcast along axis 1 of a (B, F) or (B, F, H, W) input
    def forward(self, x, b):
        if b.ndim != 1 or x.ndim < 2 or x.shape[1] != b.shape[0]:
            raise DimensionError('bias of shape {} does not match input {}'.format(b.shape, x.shape))
        self.bias_view = (1, -1) + (1,) * (x.ndim - 2)
        return x + b.reshape(self.bias_view)

    def backward(self, grad):
        axes = (0,) + tuple(range(2, grad.ndim))
        return grad, grad.sum(axis=axes)


class _ReLU(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class _Sigmoid(Function):
    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class _Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class _Log(Function):
    def forward(self, x):
        if np.any(x < 0):
            raise DomainError('log of negative input')
        return np.log(x)

    def backward(self, grad):
        return (grad / self.inputs[0].data,)


class _Square(Function):
    def forward(self, x):
        return x * x

    def backward(self, grad):
        return (2.0 * grad * self.inputs[0].data,)


class _Sqrt(Function):
    def forward(self, x):
        if np.any(x < 0):
            raise DomainError('sqrt of negative input')
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        return (0.5 * grad / self.out,)


class _Clamp(Function):
    def forward(self, x, lower=None, upper=None):
        self.mask = np.ones(x.shape, dtype=bool)
        if lower is None and upper is None:
            return x.copy()
        if lower is not None:
            self.mask &= x >= lower
        if upper is not None:
            self.mask &= x <= upper
        return np.clip(x, lower, upper)

    def backward(self, grad):
        return (grad * self.mask,)


class _Sum(Function):
    def forward(self, x):
        return np.asarray(x.sum())

    def backward(self, grad):
        return (np.full(self.inputs[0].shape, grad.item()),)


class _Reshape(Function):
    def forward(self, x, shape=None):
        try:
            return x.reshape(shape)
        except ValueError as exc:
            raise DimensionError('cannot reshape {} into {}'.format(x.shape, shape)) from exc

    def backward(self, grad):
        return (grad.reshape(self.inputs[0].shape),)


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


class _Conv2d(Function):
    # cross-correlation, zero padding, im2col through a strided window view
    def forward(self, x, k, stride=1, padding=0):
        if x.ndim != 4 or k.ndim != 4:
            raise DimensionError('conv2d expects 4-D input and kernel, got {} and {}'.format(x.shape, k.shape))
        if x.shape[1] != k.shape[1]:
            raise DimensionError('conv2d channel mismatch: input {} vs kernel {}'.format(x.shape, k.shape))
        if stride < 1 or padding < 0:
            raise UsageError('conv2d requires stride >= 1 and padding >= 0')
        _, _, height, width = x.shape
        kh, kw = k.shape[2:]
        if kh > height + 2 * padding or kw > width + 2 * padding:
            raise DimensionError('kernel {} larger than padded input {}'.format(k.shape, x.shape))
        self.stride, self.padding = stride, padding
        xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
        self.padded_shape = xp.shape
        self.windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        out = np.tensordot(self.windows, k, axes=([1, 4, 5], [1, 2, 3]))  # (B, Ho, Wo, F)
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2))

    def backward(self, grad):
        x, k = self.inputs
        s, p = self.stride, self.padding
        kh, kw = k.shape[2:]
        out_h, out_w = grad.shape[2:]
        dk = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        dwin = np.tensordot(grad, k.data, axes=([1], [0]))  # (B, Ho, Wo, C, kh, kw)
        dxp = np.zeros(self.padded_shape)
        for a in range(kh):
            for b in range(kw):
                dxp[:, :, a:a + s * out_h:s, b:b + s * out_w:s] += dwin[:, :, :, :, a, b].transpose(0, 3, 1, 2)
        height, width = x.shape[2:]
        return dxp[:, :, p:p + height, p:p + width], dk


class _UpsampleNearest(Function):
    def forward(self, x, scale=2):
        if x.ndim != 4:
            raise DimensionError('upsample expects a 4-D input, got {}'.format(x.shape))
        self.scale = scale
        return x.repeat(scale, axis=2).repeat(scale, axis=3)

    def backward(self, grad):
        b, c, h, w = self.inputs[0].shape
        s = self.scale
        return (grad.reshape(b, c, h, s, w, s).sum(axis=(3, 5)),)


def add(a, b) -> Tensor:
    return _Add.apply(a, b)


def sub(a, b) -> Tensor:
    return _Sub.apply(a, b)


def mul(a, b) -> Tensor:
    return _Mul.apply(a, b)


def neg(a) -> Tensor:
    return _Neg.apply(a)


def matmul(a, b) -> Tensor:
    r"""
    Matrix product of ``a`` :math:`(m, k)` and ``b`` :math:`(k, n)`.
    Backward: :math:`dA = dC B^T`, :math:`dB = A^T dC`.
    """
    return _MatMul.apply(a, b)


def add_bias(x, b) -> Tensor:
    """Add a per-feature (or per-channel) bias ``b`` of shape ``(F,)`` to ``x``."""
    return _AddBias.apply(x, b)


def relu(x) -> Tensor:
    return _ReLU.apply(x)


def sigmoid(x) -> Tensor:
    return _Sigmoid.apply(x)


def exp(x) -> Tensor:
    return _Exp.apply(x)


def log(x) -> Tensor:
    return _Log.apply(x)


def square(x) -> Tensor:
    return _Square.apply(x)


def sqrt(x) -> Tensor:
    return _Sqrt.apply(x)


def clamp(x, lower: Optional[float] = None, upper: Optional[float] = None) -> Tensor:
    """Clip ``x`` to ``[lower, upper]``; the gradient is zero where clipping is active."""
    return _Clamp.apply(x, lower=lower, upper=upper)


def sum(x) -> Tensor:
    return _Sum.apply(x)


def mean(x) -> Tensor:
    x = as_tensor(x)
    return mul(sum(x), 1.0 / x.size)


def reshape(x, shape: Sequence[int]) -> Tensor:
    return _Reshape.apply(x, shape=tuple(shape))


def flatten(x) -> Tensor:
    """Flatten every axis but the first."""
    x = as_tensor(x)
    return reshape(x, (x.shape[0], -1))


def conv2d(x, k, stride: int = 1, padding: int = 0) -> Tensor:
    r"""
    2-D cross-correlation of ``x`` :math:`(B, C, H, W)` with ``k`` :math:`(F, C, h, w)`.

    :param stride: step between windows. (Default: `1`.)
    :type stride: int, optional
    :param padding: zeros added on every side. (Default: `0`.)
    :type padding: int, optional

    :return: :math:`(B, F, \lfloor (H+2p-h)/s \rfloor + 1, \lfloor (W+2p-w)/s \rfloor + 1)` tensor.
    """
    return _Conv2d.apply(x, k, stride=int(stride), padding=int(padding))


def upsample_nearest(x, scale: int = 2) -> Tensor:
    return _UpsampleNearest.apply(x, scale=int(scale))


_ELEMENTWISE = {
    'add': add,
    'sub': sub,
    'mul': mul,
    'relu': relu,
    'sigmoid': sigmoid,
    'exp': exp,
    'log': log,
    'square': square,
    'sqrt': sqrt,
}


def elementwise(op: str, *operands) -> Tensor:
    """
    Dispatch a pointwise op by name: one of ``add, mul, sub, relu, sigmoid, exp, log, square, sqrt``.
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise UsageError('unknown elementwise op {!r}'.format(op)) from None
    return fn(*operands)
