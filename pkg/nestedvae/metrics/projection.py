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
# Linear views of embeddings: 2-D principal-component projection for scatter
# plots and least-squares recovery of ground-truth factors.
#
# ===============================================================================================


import logging
from typing import Tuple

import numpy as np

from nestedvae.errors import DimensionError, UsageError

__all__ = [
    'principal_components',
    'pca2',
    'linear_r2',
]

logger = logging.getLogger(__name__)


def principal_components(X, k: int = 2, tol: float = 1e-10, max_iter: int = 100000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Leading eigenvectors of the centred covariance by power iteration with deflation.

    Each component is signed so that its largest-magnitude entry is positive. A
    direction with no remaining variance is returned as zeros.

    :return: ``(components, variances)`` of shapes :math:`(k, d)` and :math:`(k,)`.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError('expected a 2-D array, got shape {}'.format(X.shape))
    if X.shape[0] < 2:
        raise UsageError('need at least 2 rows, got {}'.format(X.shape[0]))
    centred = X - X.mean(axis=0)
    cov = centred.T @ centred / X.shape[0]
    d = cov.shape[0]
    components = np.zeros((k, d))
    variances = np.zeros(k)
    start = np.random.default_rng(0).standard_normal(d)
    scale = max(np.abs(cov).max(), np.finfo(float).tiny)
    for i in range(min(k, d)):
        v = start / np.linalg.norm(start)
        for _ in range(max_iter):
            w = cov @ v
            norm = np.linalg.norm(w)
            if norm <= 1e-14 * scale:
                v = np.zeros(d)
                break
            w /= norm
            if w[np.argmax(np.abs(w))] < 0:
                w = -w
            delta = np.linalg.norm(w - v)
            v = w
            if delta < tol:
                break
        lam = max(float(v @ cov @ v), 0.0)
        components[i], variances[i] = v, lam
        cov = cov - lam * np.outer(v, v)
    return components, variances


def pca2(X) -> np.ndarray:
    """Project rows of ``X`` onto the top two principal components, shape :math:`(N, 2)`."""
    X = np.asarray(X, dtype=np.float64)
    components, _ = principal_components(X, 2)
    return (X - X.mean(axis=0)) @ components.T


def linear_r2(X, targets) -> np.ndarray:
    r"""
    Coefficient of determination of an affine least-squares fit from ``X`` to each
    target column; ``1 - SS_res / SS_tot`` per column.
    """
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    if X.shape[0] != targets.shape[0]:
        raise DimensionError('{} rows but {} targets'.format(X.shape[0], targets.shape[0]))
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, targets, rcond=None)
    residual = targets - design @ coef
    ss_res = np.sum(residual ** 2, axis=0)
    ss_tot = np.sum((targets - targets.mean(axis=0)) ** 2, axis=0)
    return 1.0 - ss_res / np.where(ss_tot > 0, ss_tot, 1.0)
