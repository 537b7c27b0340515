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
# Seeding and worker helpers shared by training, the forest probe and fold sweeps.
#
# ===============================================================================================


import logging
import os
from typing import List

import numpy as np

from nestedvae.errors import ConfigError

__all__ = [
    'THREADS_ENV',
    'spawn_generators',
    'derive_seed',
    'worker_count',
]

logger = logging.getLogger(__name__)

THREADS_ENV = 'NESTED_FACTOR_THREADS'


def spawn_generators(seed: int, n: int) -> List[np.random.Generator]:
    """
    ``n`` independent generators derived from one seed. Stream ``k`` is the same
    for every ``n > k``.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def derive_seed(seed: int, *keys: int) -> int:
    """A 32-bit seed that depends on ``seed`` and the integer ``keys`` (fold, tree, ...)."""
    return int(np.random.SeedSequence([int(seed)] + [int(k) for k in keys]).generate_state(1)[0])


def worker_count() -> int:
    """
    Maximum number of worker threads, read from ``NESTED_FACTOR_THREADS``.
    Defaults to ``min(4, os.cpu_count())``.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == '':
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError('{} must be a positive integer, got {!r}'.format(THREADS_ENV, raw)) from None
    if value < 1:
        raise ConfigError('{} must be a positive integer, got {!r}'.format(THREADS_ENV, raw))
    return value
