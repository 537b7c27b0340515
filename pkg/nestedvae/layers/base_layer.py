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
# Module containers and parameter initialization on top of nestedvae.autograd.
#
# ===============================================================================================


import collections
from itertools import repeat
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from nestedvae.autograd import Tensor
from nestedvae.errors import DimensionError, UsageError

__all__ = [
    'Module',
    'Sequential',
    'glorot_init',
    'get_kernel_size',
    'ACTIVATIONS',
]

ACTIVATIONS = ('linear', 'relu', 'sigmoid')


def get_kernel_size(x, n):
    if isinstance(x, collections.abc.Iterable):
        return tuple(x)
    return tuple(repeat(x, n))


def glorot_init(fan_in: int, fan_out: int, rng: np.random.Generator, shape: Optional[Tuple[int, ...]] = None) -> Tensor:
    r"""
    Glorot/Xavier uniform initialization.

    .. math::

        \begin{equation*}
            W \sim \mathcal{U}\left( -\sqrt{\frac{6}{n_{in}+n_{out}}}, \sqrt{\frac{6}{n_{in}+n_{out}}} \right)
        \end{equation*}

    :param fan_in: number of inputs feeding one unit.
    :type fan_in: int
    :param fan_out: number of outputs fed by one input.
    :type fan_out: int
    :param rng: source of randomness; the same seed yields the same tensor.
    :type rng: numpy.random.Generator
    :param shape: shape of the sampled tensor. (Default: `(fan_in, fan_out)`.)
    :type shape: tuple, optional

    :return: a leaf tensor with ``requires_grad=True``.
    """
    if fan_in < 1 or fan_out < 1:
        raise UsageError('fan_in and fan_out must be >= 1, got {} and {}'.format(fan_in, fan_out))
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    shape = (fan_in, fan_out) if shape is None else tuple(shape)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class Module:
    r"""
    Base class of every layer and model.

    Parameters are the :class:`~nestedvae.autograd.Tensor` attributes with
    ``requires_grad=True``; sub-modules are attributes that are :class:`Module`
    instances or lists of them. Both are discovered in attribute insertion order,
    so :meth:`named_parameters` is deterministic.
    """

    kind = 'module'

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def children(self) -> Iterator[Tuple[str, 'Module']]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield '{}.{}'.format(name, i), item

    def named_modules(self, prefix: str = '') -> Iterator[Tuple[str, 'Module']]:
        yield prefix, self
        for name, child in self.children():
            yield from child.named_modules(prefix + '.' + name if prefix else name)

    def own_parameters(self) -> List[Tuple[str, Tensor]]:
        return [(name, value) for name, value in vars(self).items()
                if isinstance(value, Tensor) and value.requires_grad]

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
        for name, child in self.children():
            yield from child.named_parameters(prefix + name + '.')

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return collections.OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        unexpected = set(state) - set(own)
        if missing or unexpected:
            raise DimensionError('state dict mismatch: missing {}, unexpected {}'.format(
                sorted(missing), sorted(unexpected)))
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise DimensionError('parameter {} has shape {}, got {}'.format(name, p.shape, value.shape))
            # in place keeps parameter identity (shared weights stay shared)
            p.data[...] = value

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def extra_repr(self) -> str:
        return ''

    def __repr__(self):
        lines = ['{}({})'.format(type(self).__name__, self.extra_repr())]
        for name, child in self.children():
            lines.append('  ({}): {}'.format(name, repr(child).replace('\n', '\n  ')))
        return '\n'.join(lines)


class Sequential(Module):
    """
    A chain of modules applied in order.

    :param layers: the modules to chain.
    """

    kind = 'sequential'

    def __init__(self, *layers: Module):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, idx):
        return self.layers[idx]
