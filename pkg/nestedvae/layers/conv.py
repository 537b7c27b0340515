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
# Convolutional layers for the outer encoder and decoder. Transposed convolution
# is realized as nearest-neighbour upsampling followed by a stride-1 convolution.
#
# ===============================================================================================


from typing import Optional

import numpy as np

from nestedvae.autograd import Tensor
from nestedvae.autograd import functional as F
from nestedvae.errors import DimensionError, UsageError
from nestedvae.layers.activation import apply_activation
from nestedvae.layers.base_layer import Module, get_kernel_size, glorot_init

__all__ = [
    'Conv2d',
    'UpsampleConv2d',
]


class Conv2d(Module):
    r"""
    Implements 2D convolution (cross-correlation) with zero padding.

    :param in_channels: number of channels in the input image
    :type in_channels: int
    :param out_channels: number of channels produced by the convolution
    :type out_channels: int
    :param kernel_size: size of the convolving kernel
    :type kernel_size: int or tuple
    :param stride: stride of the convolution. (Default: `1`.)
    :type stride: int, optional
    :param padding: zero-padding added to both sides of the input. (Default: `0`.)
    :type padding: int, optional
    :param activation: activation tag, one of ``linear``, ``relu``, ``sigmoid``. (Default: `linear`.)
    :type activation: str, optional
    :param rng: generator used for Glorot initialization.
    :type rng: numpy.random.Generator, optional
    """

    kind = 'conv'

    def __init__(self,
                 in_channels,
                 out_channels,
                 kernel_size,
                 stride=1,
                 padding=0,
                 activation='linear',
                 rng: Optional[np.random.Generator] = None):
        if stride < 1:
            raise UsageError('stride must be >= 1, got {}'.format(stride))
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel_size = get_kernel_size(kernel_size, 2)
        self.stride = int(stride)
        self.padding = int(padding)
        self.activation = activation
        self.init_parameters(np.random.default_rng() if rng is None else rng)

    def init_parameters(self, rng):
        kh, kw = self.kernel_size
        self.weight = glorot_init(self.in_channels * kh * kw,
                                  self.out_channels * kh * kw,
                                  rng,
                                  shape=(self.out_channels, self.in_channels, kh, kw))
        self.bias = Tensor(np.zeros(self.out_channels), requires_grad=True)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError('{} expects (B, {}, H, W) input, got {}'.format(
                type(self).__name__, self.in_channels, x.shape))
        out = F.conv2d(x, self.weight, stride=self.stride, padding=self.padding)
        out = F.add_bias(out, self.bias)
        return apply_activation(out, self.activation)

    def output_shape(self, height, width):
        kh, kw = self.kernel_size
        return (self.out_channels,
                F.conv_output_size(height, kh, self.stride, self.padding),
                F.conv_output_size(width, kw, self.stride, self.padding))

    def extra_repr(self):
        return 'in_channels={}, out_channels={}, kernel_size={}, stride={}, padding={}, activation={}'.format(
            self.in_channels, self.out_channels, self.kernel_size, self.stride, self.padding, self.activation)


class UpsampleConv2d(Conv2d):
    r"""
    Nearest-neighbour upsampling by ``scale`` followed by a stride-1 convolution; the
    decoder's substitute for a transposed convolution.

    :param scale: integer upsampling factor. (Default: `2`.)
    :type scale: int, optional

    Remaining parameters as in :class:`Conv2d`.
    """

    kind = 'deconv'

    def __init__(self,
                 in_channels,
                 out_channels,
                 kernel_size,
                 scale=2,
                 padding=None,
                 activation='linear',
                 rng: Optional[np.random.Generator] = None):
        kh = get_kernel_size(kernel_size, 2)[0]
        padding = (kh - 1) // 2 if padding is None else padding
        super().__init__(in_channels, out_channels, kernel_size, stride=1, padding=padding,
                         activation=activation, rng=rng)
        self.scale = int(scale)

    def forward(self, x):
        return super().forward(F.upsample_nearest(x, self.scale))

    def output_shape(self, height, width):
        return super().output_shape(height * self.scale, width * self.scale)

    def extra_repr(self):
        return super().extra_repr() + ', scale={}'.format(self.scale)
