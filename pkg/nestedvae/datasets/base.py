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
# Dataset records: labelled images with domain labels, and batches of pairs.
#
# ===============================================================================================


import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from nestedvae.errors import DataError, DimensionError

__all__ = [
    'DomainDataset',
    'PairBatch',
    'concat_datasets',
]

logger = logging.getLogger(__name__)


@dataclass
class DomainDataset:
    r"""
    Images with a class label :math:`y` and a domain label :math:`c` per item.

    :param images: array of shape :math:`(N, C, H, W)`; a 3-d array gets :math:`C = 1`.
    :param class_labels: int array of length :math:`N`.
    :param domain_labels: int array of length :math:`N`.
    :param source_index: row of the source file each item came from, ``-1`` for synthetic data.
    :param group_ids: pairing key for items that share generating factors. Defaults to ``arange(N)``.
    :param factors: optional ground-truth factors of shape :math:`(N, K)`; the first
        ``n_shared_factors`` columns are shared across domains.
    :param meta: free-form provenance (generator parameters, seed).
    """

    images: np.ndarray
    class_labels: np.ndarray
    domain_labels: np.ndarray
    source_index: Optional[np.ndarray] = None
    group_ids: Optional[np.ndarray] = None
    factors: Optional[np.ndarray] = None
    n_shared_factors: int = 0
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float64)
        if self.images.ndim == 3:
            self.images = self.images[:, None]
        if self.images.ndim != 4:
            raise DimensionError('images must have shape (N, C, H, W), got {}'.format(self.images.shape))
        n = self.images.shape[0]
        self.class_labels = np.asarray(self.class_labels, dtype=np.int64).reshape(-1)
        self.domain_labels = np.asarray(self.domain_labels, dtype=np.int64).reshape(-1)
        self.source_index = (np.full(n, -1, dtype=np.int64) if self.source_index is None
                             else np.asarray(self.source_index, dtype=np.int64).reshape(-1))
        self.group_ids = (np.arange(n, dtype=np.int64) if self.group_ids is None
                          else np.asarray(self.group_ids, dtype=np.int64).reshape(-1))
        for name in ('class_labels', 'domain_labels', 'source_index', 'group_ids'):
            if getattr(self, name).shape[0] != n:
                raise DimensionError('{} has length {}, expected {}'.format(name, getattr(self, name).shape[0], n))
        if self.factors is not None:
            self.factors = np.asarray(self.factors, dtype=np.float64)
            if self.factors.ndim != 2 or self.factors.shape[0] != n:
                raise DimensionError('factors must have shape (N, K), got {}'.format(self.factors.shape))

    def __len__(self):
        return self.images.shape[0]

    @property
    def image_shape(self):
        return self.images.shape[1:]

    @property
    def domains(self) -> np.ndarray:
        return np.unique(self.domain_labels)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.class_labels)

    @property
    def n_domains(self) -> int:
        return int(self.domain_labels.max()) + 1 if len(self) else 0

    def subset(self, index) -> 'DomainDataset':
        index = np.asarray(index)
        return DomainDataset(self.images[index],
                             self.class_labels[index],
                             self.domain_labels[index],
                             self.source_index[index],
                             self.group_ids[index],
                             None if self.factors is None else self.factors[index],
                             self.n_shared_factors,
                             dict(self.meta))

    def exclude_domain(self, domain: int) -> 'DomainDataset':
        """Drop every item of ``domain``; the remaining items keep their positions' order."""
        return self.subset(np.flatnonzero(self.domain_labels != domain))

    def select_domains(self, domains: Sequence[int]) -> 'DomainDataset':
        return self.subset(np.flatnonzero(np.isin(self.domain_labels, list(domains))))

    def counts(self) -> Dict[str, Dict[int, int]]:
        """Item counts per class and per domain."""
        return {
            'class': {int(k): int(v) for k, v in zip(*np.unique(self.class_labels, return_counts=True))},
            'domain': {int(k): int(v) for k, v in zip(*np.unique(self.domain_labels, return_counts=True))},
        }

    def require_domains(self, minimum: int = 2) -> None:
        if len(self.domains) < minimum:
            raise DataError('need at least {} domains, dataset has {}'.format(minimum, len(self.domains)))


def concat_datasets(parts: Sequence[DomainDataset]) -> DomainDataset:
    if not parts:
        raise DataError('nothing to concatenate')
    factors = None
    if all(p.factors is not None for p in parts):
        factors = np.concatenate([p.factors for p in parts])
    return DomainDataset(np.concatenate([p.images for p in parts]),
                         np.concatenate([p.class_labels for p in parts]),
                         np.concatenate([p.domain_labels for p in parts]),
                         np.concatenate([p.source_index for p in parts]),
                         np.concatenate([p.group_ids for p in parts]),
                         factors,
                         parts[0].n_shared_factors,
                         dict(parts[0].meta))


@dataclass
class PairBatch:
    """
    Pairs :math:`(x_i, x_j)` sharing a label and coming from different domains.

    ``index_i``/``index_j`` are the dataset positions of the two members.
    """

    x_i: np.ndarray
    x_j: np.ndarray
    shared_label: np.ndarray
    domain_i: np.ndarray
    domain_j: np.ndarray
    index_i: Optional[np.ndarray] = None
    index_j: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.x_i.shape != self.x_j.shape:
            raise DimensionError('pair members differ in shape: {} vs {}'.format(self.x_i.shape, self.x_j.shape))
        n = self.x_i.shape[0]
        for name in ('shared_label', 'domain_i', 'domain_j'):
            value = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1)
            if value.shape[0] != n:
                raise DimensionError('{} has length {}, expected {}'.format(name, value.shape[0], n))
            setattr(self, name, value)

    def __len__(self):
        return self.x_i.shape[0]

    def swapped(self) -> 'PairBatch':
        return PairBatch(self.x_j, self.x_i, self.shared_label, self.domain_j, self.domain_i,
                         self.index_j, self.index_i)

    @classmethod
    def from_indices(cls, ds: DomainDataset, index_i, index_j, shared_label) -> 'PairBatch':
        index_i = np.asarray(index_i, dtype=np.int64)
        index_j = np.asarray(index_j, dtype=np.int64)
        return cls(ds.images[index_i], ds.images[index_j], shared_label,
                   ds.domain_labels[index_i], ds.domain_labels[index_j], index_i, index_j)
