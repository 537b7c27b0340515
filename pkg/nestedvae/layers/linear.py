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
# Dense layer used by the outer and nested encoders/decoders. Weights are
# Glorot-uniform, biases start at zero.
#
# ===============================================================================================


from typing import Optional

import numpy as np

from nestedvae.autograd import Tensor
from nestedvae.autograd import functional as F
from nestedvae.errors import DimensionError
from nestedvae.layers.activation import apply_activation
from nestedvae.layers.base_layer import Module, glorot_init

__all__ = [
    'Linear',
    'dense_forward',
]


def dense_forward(layer: 'Linear', x: Tensor) -> Tensor:
    r"""
    Compute ``activation(x W + b)`` for a dense layer.

    :param layer: the dense layer holding ``weight`` :math:`(d_{in}, d_{out})` and ``bias`` :math:`(d_{out},)`.
    :type layer: Linear
    :param x: input of shape :math:`(B, d_{in})`.
    :type x: Tensor

    :return: output of shape :math:`(B, d_{out})`.
    """
    if x.ndim != 2 or x.shape[1] != layer.in_features:
        raise DimensionError('{} expects input (B, {}), got {}'.format(layer, layer.in_features, x.shape))
    out = F.add_bias(F.matmul(x, layer.weight), layer.bias)
    return apply_activation(out, layer.activation)


class Linear(Module):
    r"""
    Implements a fully connected layer :math:`y = \sigma(xW + b)`.

    :param in_features: Size of each input sample.
    :type in_features: int
    :param out_features: Size of each output sample.
    :type out_features: int
    :param activation: Activation tag, one of ``linear``, ``relu``, ``sigmoid``. (Default: `linear`.)
    :type activation: str, optional
    :param rng: Generator used for Glorot initialization. (Default: a fresh unseeded generator.)
    :type rng: numpy.random.Generator, optional
    """

    kind = 'dense'

    def __init__(self,
                 in_features,
                 out_features,
                 activation='linear',
                 rng: Optional[np.random.Generator] = None):
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.activation = activation
        self.init_parameters(np.random.default_rng() if rng is None else rng)

    def init_parameters(self, rng):
        self.weight = glorot_init(self.in_features, self.out_features, rng)
        self.bias = Tensor(np.zeros(self.out_features), requires_grad=True)

    def forward(self, x):
        r"""
        Forward the dense layer.

        :param x: Input of shape :math:`(n, d_{in})`.
        :type x: nestedvae.autograd.Tensor

        :return: Output of shape :math:`(n, d_{out})`.
        """
        return dense_forward(self, x)

    def extra_repr(self):
        return 'in_features={}, out_features={}, activation={}'.format(
            self.in_features, self.out_features, self.activation)
