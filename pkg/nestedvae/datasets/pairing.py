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
# Pair sampling for the nested objective and labelled pairs for change detection.
#
# ===============================================================================================


import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from nestedvae.datasets.base import DomainDataset, PairBatch
from nestedvae.errors import DataError, PairingError, UsageError

__all__ = [
    'PairIndex',
    'ChangePairs',
    'sample_pairs',
    'make_change_pairs',
]

logger = logging.getLogger(__name__)


class PairIndex:
    """
    Item positions bucketed by pairing key and domain.

    :param ds: the dataset.
    :param key: ``class`` pairs on class labels, ``group`` on group ids.
    :raises PairingError: if some key value occurs in a single domain only.
    """

    def __init__(self, ds: DomainDataset, key: str = 'class'):
        if key not in ('class', 'group'):
            raise UsageError('pairing key must be class or group, got {!r}'.format(key))
        values = ds.class_labels if key == 'class' else ds.group_ids
        buckets: Dict[int, Dict[int, List[int]]] = defaultdict(lambda: defaultdict(list))
        for pos, (value, domain) in enumerate(zip(values.tolist(), ds.domain_labels.tolist())):
            buckets[value][domain].append(pos)
        if not buckets:
            raise PairingError('cannot pair an empty dataset')
        isolated = sorted(v for v, per_domain in buckets.items() if len(per_domain) < 2)
        if isolated:
            raise PairingError('{} {} present in a single domain only ({})'.format(
                key, isolated[0], 'domain {}'.format(next(iter(buckets[isolated[0]])))
                if len(isolated) == 1 else '{} such values in total'.format(len(isolated))))
        self.key = key
        self.keys = sorted(buckets)
        self.domains = [sorted(buckets[v]) for v in self.keys]
        self.items = [[np.asarray(buckets[v][d], dtype=np.int64) for d in doms]
                      for v, doms in zip(self.keys, self.domains)]

    def sample(self, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(index_i, index_j, key_values)`` for ``count`` pairs."""
        picks = rng.integers(len(self.keys), size=count)
        index_i = np.empty(count, dtype=np.int64)
        index_j = np.empty(count, dtype=np.int64)
        for n, k in enumerate(picks):
            # ordered draw of two distinct domains: uniform over unordered pairs, random order
            a, b = rng.choice(len(self.domains[k]), size=2, replace=False)
            pool_a, pool_b = self.items[k][a], self.items[k][b]
            index_i[n] = pool_a[rng.integers(pool_a.size)]
            index_j[n] = pool_b[rng.integers(pool_b.size)]
        return index_i, index_j, np.asarray(self.keys, dtype=np.int64)[picks]


def sample_pairs(ds: DomainDataset, count: int, rng: np.random.Generator, key: str = 'class',
                 index: Optional[PairIndex] = None) -> PairBatch:
    """
    Draw ``count`` pairs that share a class (or group) and come from two different domains.

    A key value is chosen uniformly, then an unordered pair of the domains it occurs in,
    then one item from each of the two domains.

    :param ds: the dataset.
    :param count: number of pairs.
    :param rng: source of randomness.
    :param key: ``class`` or ``group``. (Default: `class`.)
    :param index: a prebuilt :class:`PairIndex` for ``ds`` to skip re-bucketing.
    """
    if count < 0:
        raise UsageError('count must be >= 0, got {}'.format(count))
    index = PairIndex(ds, key) if index is None else index
    index_i, index_j, _ = index.sample(count, rng)
    return PairBatch.from_indices(ds, index_i, index_j, ds.class_labels[index_i])


@dataclass
class ChangePairs:
    """Item pairs labelled ``0`` (same class, no change) or ``1`` (different class)."""

    index_a: np.ndarray
    index_b: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return self.labels.shape[0]


def make_change_pairs(ds: DomainDataset, count: int, rng: np.random.Generator) -> ChangePairs:
    """
    Alternate same-class (label ``0``) and different-class (label ``1``) pairs,
    starting with ``0``. Members may come from any domain.
    """
    by_class = {int(c): np.flatnonzero(ds.class_labels == c) for c in ds.classes}
    if len(by_class) < 2:
        raise DataError('change pairs need at least 2 classes, dataset has {}'.format(len(by_class)))
    pairable = [c for c, idx in by_class.items() if idx.size >= 2]
    if not pairable:
        raise DataError('no class has two items to form a same-class pair')
    classes = sorted(by_class)
    index_a = np.empty(count, dtype=np.int64)
    index_b = np.empty(count, dtype=np.int64)
    labels = np.arange(count, dtype=np.int64) % 2
    for n in range(count):
        if labels[n] == 0:
            pool = by_class[pairable[rng.integers(len(pairable))]]
            index_a[n], index_b[n] = rng.choice(pool, size=2, replace=False)
        else:
            ca, cb = rng.choice(len(classes), size=2, replace=False)
            pool_a, pool_b = by_class[classes[ca]], by_class[classes[cb]]
            index_a[n] = pool_a[rng.integers(pool_a.size)]
            index_b[n] = pool_b[rng.integers(pool_b.size)]
    return ChangePairs(index_a, index_b, labels)
