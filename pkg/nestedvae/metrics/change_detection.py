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
# Change detection: two-cluster k-means on the distances between the embeddings
# of each pair; the cluster with the smaller centre means "no change".
#
# ===============================================================================================


import logging

import numpy as np

from nestedvae.errors import DimensionError, UsageError

__all__ = [
    'kmeans2_scalar',
    'pair_distances',
    'change_detection_accuracy',
]

logger = logging.getLogger(__name__)


def kmeans2_scalar(d, tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    """
    Lloyd's algorithm with two clusters on scalar values.

    Centres start at ``min(d)`` and ``max(d)``; iterations stop once neither centre
    moves by more than ``tol``. Values equidistant from both centres go to cluster 0.

    :return: labels in ``{0, 1}``; ``0`` is the cluster with the smaller centre.
    """
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    if d.size < 2:
        raise UsageError('kmeans2_scalar needs at least 2 values, got {}'.format(d.size))
    lo, hi = float(d.min()), float(d.max())
    if lo == hi:
        return np.zeros(d.size, dtype=np.int64)
    c0, c1 = lo, hi
    labels = np.zeros(d.size, dtype=np.int64)
    for it in range(max_iter):
        labels = (np.abs(d - c1) < np.abs(d - c0)).astype(np.int64)
        new0 = d[labels == 0].mean() if np.any(labels == 0) else c0
        new1 = d[labels == 1].mean() if np.any(labels == 1) else c1
        moved = max(abs(new0 - c0), abs(new1 - c1))
        c0, c1 = new0, new1
        if moved < tol:
            break
    labels = (np.abs(d - c1) < np.abs(d - c0)).astype(np.int64)
    if c1 < c0:
        labels = 1 - labels
    logger.debug('kmeans2_scalar converged after %d iterations: centres %.6g, %.6g', it + 1, c0, c1)
    return labels


def pair_distances(embeddings_a, embeddings_b) -> np.ndarray:
    a = np.asarray(embeddings_a, dtype=np.float64)
    b = np.asarray(embeddings_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionError('embedding sets must be 2-D with equal shapes, got {} and {}'.format(a.shape, b.shape))
    return np.linalg.norm(a - b, axis=1)


def change_detection_accuracy(embeddings_a, embeddings_b, labels) -> float:
    """
    Accuracy of clustering pair distances against change labels
    (``0`` same class, ``1`` different class).
    """
    labels = np.asarray(labels).reshape(-1)
    dist = pair_distances(embeddings_a, embeddings_b)
    if dist.size != labels.size:
        raise DimensionError('{} pairs but {} labels'.format(dist.size, labels.size))
    return float(np.mean(kmeans2_scalar(dist) == labels))
