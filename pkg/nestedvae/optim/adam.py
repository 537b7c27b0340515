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
# ADAM with bias-corrected moment estimates.
#
# ===============================================================================================


import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from nestedvae.autograd import Tensor
from nestedvae.errors import DimensionError, NumericError, UsageError

__all__ = [
    'AdamState',
    'Adam',
    'adam_step',
]

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    r"""
    Optimizer state shared by every parameter of one model.

    :param lr: step size :math:`\alpha`.
    :param beta1: decay of the first moment. (Default: `0.9`.)
    :param beta2: decay of the second moment. (Default: `0.999`.)
    :param eps: denominator offset. (Default: `1e-8`.)
    """

    lr: float = 0.0008
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr < 0:
            raise UsageError('learning rate must be >= 0, got {}'.format(self.lr))
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise UsageError('beta1 and beta2 must lie in [0, 1)')

    def init_moments(self, params: Sequence[np.ndarray]) -> None:
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
    r"""
    One ADAM update, in place on ``params``:

    .. math::

        \begin{align*}
            m &\leftarrow \beta_1 m + (1-\beta_1) g, \quad v \leftarrow \beta_2 v + (1-\beta_2) g^2, \\
            \theta &\leftarrow \theta - \alpha \frac{m / (1-\beta_1^t)}{\sqrt{v / (1-\beta_2^t)} + \epsilon}
        \end{align*}

    Every gradient is checked before anything is written, so a non-finite gradient
    leaves parameters, moments and step counter untouched.

    :param state: moments and hyperparameters; moments are created on the first call.
    :type state: AdamState
    :param params: parameter arrays, updated in place.
    :param grads: gradients aligned with ``params``.
    """
    if len(params) != len(grads):
        raise DimensionError('{} parameters but {} gradients'.format(len(params), len(grads)))
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionError('gradient {} has shape {}, parameter has {}'.format(i, g.shape, p.shape))
        if not np.all(np.isfinite(g)):
            raise NumericError('non-finite gradient for parameter {} (shape {}); step aborted'.format(i, p.shape))
    if not state.m:
        state.init_moments(params)
    elif len(state.m) != len(params):
        raise DimensionError('optimizer state tracks {} parameters, got {}'.format(len(state.m), len(params)))

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


class Adam:
    r"""
    ADAM over a list of :class:`~nestedvae.autograd.Tensor` parameters.

    :param params: leaf tensors to optimise, usually ``model.parameters()``.
    :type params: list
    :param lr: learning rate. (Default: `0.0008`.)
    :type lr: float, optional
    :param betas: moment decay rates. (Default: `(0.9, 0.999)`.)
    :type betas: tuple, optional
    :param eps: denominator offset. (Default: `1e-8`.)
    :type eps: float, optional
    """

    def __init__(self, params, lr=0.0008, betas=(0.9, 0.999), eps=1e-8):
        self.params: List[Tensor] = list(params)
        if not self.params:
            raise UsageError('Adam received an empty parameter list')
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in self.params]
        adam_step(self.state, [p.data for p in self.params], grads)

    @property
    def t(self) -> int:
        return self.state.t
