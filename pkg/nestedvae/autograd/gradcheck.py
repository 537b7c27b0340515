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
# Central finite-difference gradient checking.
#
# ===============================================================================================


import logging
from typing import Callable, List, Sequence, Union

import numpy as np

from nestedvae.autograd.tensor import Tensor, no_grad
from nestedvae.errors import NumericError, UsageError

__all__ = [
    'grad_check',
]

logger = logging.getLogger(__name__)


def _evaluate(f, theta) -> float:
    with no_grad():
        value = f(theta)
    value = float(value.item() if isinstance(value, Tensor) else value)
    if not np.isfinite(value):
        raise NumericError('function value is not finite during finite differencing')
    return value


def grad_check(f: Callable, theta: Union[Tensor, Sequence[Tensor]], h: float = 1e-5) -> float:
    r"""
    Compare reverse-mode gradients of a scalar function with central differences.

    .. math::

        \max_i \frac{|g_i - \hat g_i|}{|g_i| + |\hat g_i| + 10^{-12}}, \qquad
        \hat g_i = \frac{f(\theta + h e_i) - f(\theta - h e_i)}{2h}

    :param f: callable receiving ``theta`` and returning a scalar :class:`Tensor`.
        It must rebuild its graph on every call.
    :param theta: a tensor, or a list of tensors, with ``requires_grad=True``.
    :param h: finite-difference step. (Default: `1e-5`.)
    :type h: float, optional

    :return: the maximum relative error over every coordinate of every tensor.
    """
    if h <= 0:
        raise UsageError('step h must be positive, got {}'.format(h))
    params: List[Tensor] = [theta] if isinstance(theta, Tensor) else list(theta)
    for p in params:
        if not p.requires_grad:
            raise UsageError('grad_check parameters must require gradients')
        p.zero_grad()

    loss = f(theta)
    if not np.isfinite(loss.data).all():
        raise NumericError('function value is not finite')
    if loss.requires_grad:
        loss.backward()

    worst = 0.0
    for p in params:
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad
        flat = p.data.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = _evaluate(f, theta)
            flat[i] = original - h
            f_minus = _evaluate(f, theta)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(flat_grad[i] - numeric) / (abs(flat_grad[i]) + abs(numeric) + 1e-12)
            worst = max(worst, err)
    logger.debug('grad_check over %d tensors: max relative error %.3e', len(params), worst)
    return worst
