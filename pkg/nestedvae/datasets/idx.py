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
# Reader and writer for the IDX files MNIST is distributed in. Gzipped files
# (``*.gz``) are read transparently.
#
# ===============================================================================================


import gzip
import logging
import os
import struct

import numpy as np

from nestedvae.datasets.base import DomainDataset
from nestedvae.errors import FormatError

__all__ = [
    'IDX_IMAGES_MAGIC',
    'IDX_LABELS_MAGIC',
    'read_idx',
    'write_idx',
    'load_idx',
]

logger = logging.getLogger(__name__)

# big-endian u32: 0x0000 | type 0x08 (unsigned byte) | number of dimensions
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _open(path):
    return gzip.open(path, 'rb') if str(path).endswith('.gz') else open(path, 'rb')


def read_idx(path: str, expected_magic: int) -> np.ndarray:
    """
    Parse one unsigned-byte IDX file.

    :param path: file path, optionally gzipped.
    :param expected_magic: ``IDX_IMAGES_MAGIC`` or ``IDX_LABELS_MAGIC``.

    :return: ``uint8`` array with the dimensions stored in the header.
    """
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise FormatError('{}: truncated IDX header'.format(path))
    magic, = struct.unpack('>I', raw[:4])
    if magic != expected_magic:
        raise FormatError('{}: bad IDX magic 0x{:08x}, expected 0x{:08x}'.format(path, magic, expected_magic))
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError('{}: truncated IDX header'.format(path))
    dims = struct.unpack('>' + 'I' * ndim, raw[4:header])
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header < count:
        raise FormatError('{}: truncated IDX payload, {} of {} bytes'.format(path, len(raw) - header, count))
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def write_idx(path: str, array: np.ndarray) -> None:
    """Write a ``uint8`` array of rank 1 (labels) or 3 (images) as IDX."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    opener = gzip.open if str(path).endswith('.gz') else open
    with opener(path, 'wb') as fh:
        fh.write(struct.pack('>I', magic))
        fh.write(struct.pack('>' + 'I' * array.ndim, *array.shape))
        fh.write(array.tobytes())


def load_idx(images_path: str, labels_path: str) -> DomainDataset:
    """
    Load an IDX image/label file pair as a single-domain dataset with pixels scaled to ``[0, 1]``.

    :return: :class:`DomainDataset` with ``domain_labels`` all zero and ``source_index`` the file row.
    """
    for path in (images_path, labels_path):
        if path is None or not os.path.exists(path):
            raise FileNotFoundError('IDX file not found: {}'.format(path))
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError('{} holds {} images but {} holds {} labels'.format(
            images_path, images.shape[0], labels_path, labels.shape[0]))
    n = images.shape[0]
    logger.info('read %d images of %dx%d from %s', n, images.shape[1], images.shape[2], images_path)
    return DomainDataset(images.astype(np.float64)[:, None] / 255.0,
                         labels.astype(np.int64),
                         np.zeros(n, dtype=np.int64),
                         source_index=np.arange(n),
                         meta={'images_path': str(images_path), 'labels_path': str(labels_path)})
