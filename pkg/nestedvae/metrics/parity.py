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
# Probe scores: accuracy, macro F1, chance-normalised scores and adjusted parity.
#
# ===============================================================================================


import logging
from typing import Sequence

import numpy as np

from nestedvae.errors import DimensionError, UsageError

__all__ = [
    'accuracy',
    'macro_f1',
    'normalize_score',
    'adjusted_parity',
    'population_std',
    'standard_error',
]

logger = logging.getLogger(__name__)


def _check_pair(pred, truth):
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if pred.shape != truth.shape:
        raise DimensionError('{} predictions for {} targets'.format(pred.size, truth.size))
    if pred.size == 0:
        raise UsageError('cannot score an empty prediction set')
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(pred == truth))


def macro_f1(pred, truth, n_classes: int) -> float:
    """
    Unweighted mean of per-class F1 over classes ``0 .. n_classes-1``.

    A class that is neither present nor predicted is skipped; a class predicted but
    absent from ``truth`` (or present but never predicted) scores 0.
    """
    pred, truth = _check_pair(pred, truth)
    scores = []
    for c in range(n_classes):
        in_truth = truth == c
        in_pred = pred == c
        if not in_truth.any() and not in_pred.any():
            continue
        tp = np.sum(in_truth & in_pred)
        fp = np.sum(~in_truth & in_pred)
        fn = np.sum(in_truth & ~in_pred)
        scores.append(2.0 * tp / (2.0 * tp + fp + fn))
    return float(np.mean(scores)) if scores else 0.0


def normalize_score(acc: float, n_classes: int) -> float:
    r"""
    Rescale an accuracy so that random guessing scores 0 and a perfect classifier 1:
    :math:`\max(0, (a - 1/n) / (1 - 1/n))`. F1 scores are used as they are.
    """
    if n_classes < 2:
        raise UsageError('n_classes must be >= 2, got {}'.format(n_classes))
    if not 0.0 <= acc <= 1.0:
        raise UsageError('accuracy must lie in [0, 1], got {}'.format(acc))
    chance = 1.0 / n_classes
    return max(0.0, (acc - chance) / (1.0 - chance))


def population_std(values: Sequence[float]) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64), ddof=0))


def standard_error(values: Sequence[float]) -> float:
    """Sample standard deviation over ``sqrt(n)``; 0 for a single value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def adjusted_parity(scores: Sequence[float]) -> float:
    r"""
    Mean score across domains penalised by its spread:

    .. math::

        \begin{equation*}
            \Delta_{adj} = \bar{S} \, (1 - 2 \sigma)
        \end{equation*}

    with :math:`\sigma` the population standard deviation of the per-domain scores.
    Scores are expected in ``[0, 1]``: normalised accuracies, F1 or normalised regression scores.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size < 2:
        raise UsageError('adjusted parity needs at least 2 domain scores, got {}'.format(scores.size))
    if np.any(scores < 0) or np.any(scores > 1):
        raise UsageError('domain scores must lie in [0, 1]')
    return float(scores.mean() * (1.0 - 2.0 * scores.std(ddof=0)))
