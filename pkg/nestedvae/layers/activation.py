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
# Activations and shape layers.
#
# ===============================================================================================


from nestedvae.autograd import functional as F
from nestedvae.errors import UsageError
from nestedvae.layers.base_layer import ACTIVATIONS, Module

__all__ = [
    'ReLU',
    'Sigmoid',
    'Flatten',
    'Reshape',
    'apply_activation',
    'relu',
    'sigmoid',
]


def apply_activation(x, activation: str):
    """Apply the activation named by a layer's activation tag."""
    if activation == 'linear':
        return x
    if activation == 'relu':
        return F.relu(x)
    if activation == 'sigmoid':
        return F.sigmoid(x)
    raise UsageError('unknown activation {!r}, expected one of {}'.format(activation, ACTIVATIONS))


class ReLU(Module):
    r"""
    .. math::

        \begin{equation*}
            \text{ReLU}(x)=(x)^{+}=\max\left( 0,x \right)
        \end{equation*}
    """

    kind = 'relu'

    def forward(self, x):
        return F.relu(x)


class Sigmoid(Module):
    kind = 'sigmoid'

    def forward(self, x):
        return F.sigmoid(x)


class Flatten(Module):
    """Flatten every axis after the batch axis."""

    kind = 'flatten'

    def forward(self, x):
        return F.flatten(x)


class Reshape(Module):
    """
    Reshape the non-batch axes.

    :param shape: target shape without the batch axis, e.g. ``(32, 7, 7)``.
    :type shape: tuple
    """

    kind = 'reshape'

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)

    def forward(self, x):
        return F.reshape(x, (x.shape[0],) + self.shape)

    def extra_repr(self):
        return 'shape={}'.format(self.shape)


def relu(x):
    return ReLU()(x)


def sigmoid(x):
    return Sigmoid()(x)
