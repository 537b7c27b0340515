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
# Dense float64 tensors recording a define-by-run graph for reverse-mode
# automatic differentiation.
#
# ===============================================================================================


import itertools
import logging
import threading
from contextlib import contextmanager
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from nestedvae.errors import NumericError, UsageError

__all__ = [
    'Tensor',
    'Function',
    'Graph',
    'no_grad',
    'is_grad_enabled',
    'as_tensor',
    'backward',
]

logger = logging.getLogger(__name__)

_node_ids = itertools.count()
_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, 'grad_enabled', True)


@contextmanager
def no_grad():
    """
    Context manager that disables graph recording in the current thread.
    Tensors created inside carry no creator and no gradient requirement.
    """
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Function:
    r"""
    Base class of a differentiable operation.

    Subclasses implement :meth:`forward` on raw :class:`numpy.ndarray` operands and
    :meth:`backward`, which maps the gradient of the loss w.r.t. the output to one
    gradient (or ``None``) per input.
    """

    def __init__(self, *inputs: 'Tensor'):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Any, **kwargs: Any) -> 'Tensor':
        tensors = tuple(as_tensor(x) for x in inputs)
        fn = cls(*tensors)
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            out = fn.forward(*(t.data for t in tensors), **kwargs)
        if not np.all(np.isfinite(out)):
            raise NumericError('{} produced non-finite values'.format(cls.__name__))
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=requires_grad, _ctx=fn if requires_grad else None)

    def __repr__(self):
        return '{}()'.format(type(self).__name__)


class Tensor:
    r"""
    Dense row-major float64 array taking part in reverse-mode differentiation.

    :param data: array-like payload; copied to a contiguous ``float64`` array.
    :type data: array_like
    :param requires_grad: record operations on this tensor and populate :attr:`grad`
        on :meth:`backward`. (Default: `False`.)
    :type requires_grad: bool, optional
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, _ctx: Optional[Function] = None):
        data = np.asarray(data, dtype=np.float64)
        # ascontiguousarray promotes 0-d input to shape (1,)
        self.data = np.ascontiguousarray(data) if data.ndim else data.copy()
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._ctx = _ctx
        self.node_id = next(_node_ids)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> 'Tensor':
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        grad_str = ', requires_grad=True' if self.requires_grad else ''
        return 'Tensor(shape={}{})'.format(self.shape, grad_str)

    # arithmetic; forwarded to nestedvae.autograd.functional
    def __add__(self, other):
        from nestedvae.autograd import functional as F
        return F.add(self, other)

    def __radd__(self, other):
        from nestedvae.autograd import functional as F
        return F.add(other, self)

    def __sub__(self, other):
        from nestedvae.autograd import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from nestedvae.autograd import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from nestedvae.autograd import functional as F
        return F.mul(self, other)

    def __rmul__(self, other):
        from nestedvae.autograd import functional as F
        return F.mul(other, self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise UsageError('division is only defined by a python scalar')
        from nestedvae.autograd import functional as F
        return F.mul(self, 1.0 / float(other))

    def __neg__(self):
        from nestedvae.autograd import functional as F
        return F.neg(self)

    def __matmul__(self, other):
        from nestedvae.autograd import functional as F
        return F.matmul(self, other)

    def relu(self):
        from nestedvae.autograd import functional as F
        return F.relu(self)

    def sigmoid(self):
        from nestedvae.autograd import functional as F
        return F.sigmoid(self)

    def exp(self):
        from nestedvae.autograd import functional as F
        return F.exp(self)

    def log(self):
        from nestedvae.autograd import functional as F
        return F.log(self)

    def square(self):
        from nestedvae.autograd import functional as F
        return F.square(self)

    def sqrt(self):
        from nestedvae.autograd import functional as F
        return F.sqrt(self)

    def sum(self):
        from nestedvae.autograd import functional as F
        return F.sum(self)

    def mean(self):
        from nestedvae.autograd import functional as F
        return F.mean(self)

    def reshape(self, *shape):
        from nestedvae.autograd import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Graph:
    r"""
    Topologically ordered view of the operations that produced ``output``.

    Nodes are listed inputs-first; every node appears exactly once even when it is
    shared by several consumers.

    :param output: tensor at the root of the graph.
    :type output: Tensor
    """

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes: List[Tensor] = self._toposort(output)

    @staticmethod
    def _toposort(root: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node.node_id in visited:
                continue
            visited.add(node.node_id)
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.inputs:
                    if parent.requires_grad and parent.node_id not in visited:
                        stack.append((parent, False))
        return order

    def __len__(self):
        return len(self.nodes)

    def leaves(self) -> List[Tensor]:
        return [n for n in self.nodes if n.is_leaf]

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        """
        Propagate gradients from :attr:`output` to every leaf that requires them.
        Leaf gradients are accumulated (``+=``) into :attr:`Tensor.grad`.
        """
        grads: Dict[int, np.ndarray] = {
            self.output.node_id: np.ones_like(self.output.data) if seed is None else seed}
        for node in reversed(self.nodes):
            grad = grads.pop(node.node_id, None)
            if grad is None:
                continue
            if node.is_leaf:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            input_grads = node._ctx.backward(grad)
            for parent, g in zip(node._ctx.inputs, input_grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.node_id in grads:
                    grads[parent.node_id] = grads[parent.node_id] + g
                else:
                    grads[parent.node_id] = g


def backward(loss: Tensor) -> Graph:
    r"""
    Run reverse-mode differentiation from a scalar ``loss``.

    :param loss: single-element tensor.
    :type loss: Tensor

    :return: the traversed :class:`Graph`.
    """
    if loss.size != 1:
        raise UsageError('backward requires a scalar loss, got shape {}'.format(loss.shape))
    if not loss.requires_grad:
        raise UsageError('loss does not depend on any tensor with requires_grad=True')
    graph = Graph(loss)
    logger.debug('backward over %d nodes', len(graph))
    graph.backward()
    return graph
