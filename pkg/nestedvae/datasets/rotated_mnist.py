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
# Rotated-digit domains: every sampled source image is rotated by each angle,
# one domain per angle.
#
# ===============================================================================================


import logging
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from nestedvae.datasets.base import DomainDataset
from nestedvae.errors import DataError, DimensionError

__all__ = [
    'DEFAULT_ANGLES',
    'rotate_image',
    'build_rotated_mnist',
    'build_rotated_mnist_splits',
]

logger = logging.getLogger(__name__)

DEFAULT_ANGLES = (0.0, 15.0, 30.0, 45.0, 60.0, 75.0)


def rotate_image(img: np.ndarray, degrees: float) -> np.ndarray:
    """
    Rotate counter-clockwise about the image centre with bilinear interpolation;
    samples falling outside the source are zero.

    :param img: array of shape :math:`(1, H, W)` or :math:`(H, W)`.
    :param degrees: rotation angle.
    :type degrees: float
    """
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if img.ndim not in (2, 3) or (not squeeze and img.shape[0] != 1):
        raise DimensionError('rotate_image expects (1, H, W) or (H, W), got {}'.format(img.shape))
    plane = img if squeeze else img[0]
    if not np.isfinite(degrees):
        raise DataError('rotation angle must be finite, got {}'.format(degrees))
    height, width = plane.shape
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    theta = np.deg2rad(degrees)
    cos, sin = np.cos(theta), np.sin(theta)
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing='ij')
    dy, dx = rows - cy, cols - cx
    # inverse map: output pixel -> source position
    src_rows = cy + cos * dy + sin * dx
    src_cols = cx - sin * dy + cos * dx
    coords = np.round(np.stack([src_rows, src_cols]), 10)
    out = ndimage.map_coordinates(plane, coords, order=1, mode='grid-constant', cval=0.0)
    return out if squeeze else out[None]


def build_rotated_mnist(src: DomainDataset,
                        per_class: int = 100,
                        angles: Sequence[float] = DEFAULT_ANGLES,
                        seed: int = 0,
                        exclude_sources: Optional[Iterable[int]] = None) -> DomainDataset:
    """
    Draw ``per_class`` source images per class without replacement and rotate each
    one by every angle.

    Items are ordered by angle, then class, then draw. The same source image shares a
    ``group_id`` across angles.

    :param src: single-domain source dataset (e.g. from :func:`~nestedvae.datasets.load_idx`).
    :param per_class: images drawn per class. (Default: `100`.)
    :param angles: rotation angles in degrees; domain ``k`` is ``angles[k]``.
    :param seed: seed of the draw.
    :param exclude_sources: ``source_index`` values that must not be drawn.

    :return: a :class:`DomainDataset` of ``per_class * n_classes * len(angles)`` items.
    """
    chosen = _draw(src, [per_class], seed, exclude_sources)[0]
    return _rotate_all(src, chosen, angles, seed)


def build_rotated_mnist_splits(src: DomainDataset,
                               per_class: int = 100,
                               angles: Sequence[float] = DEFAULT_ANGLES,
                               seed: int = 0) -> Tuple[DomainDataset, DomainDataset]:
    """Train and test datasets of the same structure built from disjoint source draws."""
    train_idx, test_idx = _draw(src, [per_class, per_class], seed, None)
    return _rotate_all(src, train_idx, angles, seed), _rotate_all(src, test_idx, angles, seed)


def _draw(src: DomainDataset, sizes: Sequence[int], seed: int, exclude_sources) -> list:
    rng = np.random.default_rng(seed)
    excluded = np.zeros(len(src), dtype=bool)
    if exclude_sources is not None:
        excluded = np.isin(src.source_index, np.fromiter(exclude_sources, dtype=np.int64))
    needed = int(sum(sizes))
    splits = [[] for _ in sizes]
    for label in np.sort(np.unique(src.class_labels)):
        pool = np.flatnonzero((src.class_labels == label) & ~excluded)
        if pool.size < needed:
            raise DataError('class {} has {} usable images, {} required'.format(int(label), pool.size, needed))
        picked = rng.choice(pool, size=needed, replace=False)
        start = 0
        for split, size in zip(splits, sizes):
            split.append(picked[start:start + size])
            start += size
    return [np.concatenate(split) for split in splits]


def _rotate_all(src: DomainDataset, chosen: np.ndarray, angles: Sequence[float], seed: int) -> DomainDataset:
    if len(angles) == 0:
        raise DataError('at least one rotation angle is required')
    base = src.images[chosen]
    images, classes, domains, sources, groups = [], [], [], [], []
    for k, angle in enumerate(angles):
        images.append(np.stack([rotate_image(img, angle) for img in base]))
        classes.append(src.class_labels[chosen])
        domains.append(np.full(chosen.size, k, dtype=np.int64))
        sources.append(src.source_index[chosen])
        groups.append(np.arange(chosen.size, dtype=np.int64))
    ds = DomainDataset(np.clip(np.concatenate(images), 0.0, 1.0),
                       np.concatenate(classes),
                       np.concatenate(domains),
                       np.concatenate(sources),
                       np.concatenate(groups),
                       meta={'kind': 'rotated_mnist', 'angles': [float(a) for a in angles], 'seed': int(seed)})
    logger.info('built rotated dataset: %d items, %d domains', len(ds), len(angles))
    return ds
