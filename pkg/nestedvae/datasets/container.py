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
# Versioned binary container for generated datasets.
#
# Layout (little-endian):
#   header   '<4sIIIII'  magic b'NVDS', version, N, C, H, W
#   images   f64[N*C*H*W]
#   labels   i32[N] class, i32[N] domain, i32[N] source_index, i32[N] group_ids
#   factors  u32 K, u32 n_shared, f64[N*K]
#   meta     u32 byte length, UTF-8 JSON (sorted keys)
#
# ===============================================================================================


import json
import logging
import struct

import numpy as np

from nestedvae.datasets.base import DomainDataset
from nestedvae.errors import FormatError

__all__ = [
    'CONTAINER_MAGIC',
    'CONTAINER_VERSION',
    'write_dataset',
    'read_dataset',
]

logger = logging.getLogger(__name__)

CONTAINER_MAGIC = b'NVDS'
CONTAINER_VERSION = 1
_HEADER = struct.Struct('<4sIIIII')
_U32 = struct.Struct('<I')


def write_dataset(path: str, ds: DomainDataset) -> None:
    """Write ``ds`` to ``path``. Identical datasets give identical bytes."""
    n, c, h, w = ds.images.shape
    factors = ds.factors if ds.factors is not None else np.zeros((n, 0))
    meta = json.dumps(ds.meta, sort_keys=True, default=str).encode('utf-8')
    with open(path, 'wb') as fh:
        fh.write(_HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION, n, c, h, w))
        fh.write(np.ascontiguousarray(ds.images, dtype='<f8').tobytes())
        for labels in (ds.class_labels, ds.domain_labels, ds.source_index, ds.group_ids):
            fh.write(np.ascontiguousarray(labels, dtype='<i4').tobytes())
        fh.write(_U32.pack(factors.shape[1]))
        fh.write(_U32.pack(ds.n_shared_factors))
        fh.write(np.ascontiguousarray(factors, dtype='<f8').tobytes())
        fh.write(_U32.pack(len(meta)))
        fh.write(meta)
    logger.info('wrote %s (%d items)', path, n)


class _Reader:
    def __init__(self, raw: bytes, path: str):
        self.raw, self.path, self.pos = raw, path, 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.raw):
            raise FormatError('{}: truncated dataset container at byte {}'.format(self.path, self.pos))
        chunk = self.raw[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype)

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]


def read_dataset(path: str) -> DomainDataset:
    """Read a container written by :func:`write_dataset`."""
    with open(path, 'rb') as fh:
        reader = _Reader(fh.read(), path)
    magic, version, n, c, h, w = _HEADER.unpack(reader.take(_HEADER.size))
    if magic != CONTAINER_MAGIC:
        raise FormatError('{}: bad container magic {!r}'.format(path, magic))
    if version != CONTAINER_VERSION:
        raise FormatError('{}: unsupported container version {}'.format(path, version))
    images = reader.array('<f8', n * c * h * w).reshape(n, c, h, w).copy()
    labels = [reader.array('<i4', n).astype(np.int64) for _ in range(4)]
    k = reader.u32()
    n_shared = reader.u32()
    factors = reader.array('<f8', n * k).reshape(n, k).copy() if k else None
    meta_len = reader.u32()
    try:
        meta = json.loads(reader.take(meta_len).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError('{}: corrupt metadata block ({})'.format(path, exc)) from exc
    if reader.pos != len(reader.raw):
        raise FormatError('{}: {} trailing bytes'.format(path, len(reader.raw) - reader.pos))
    return DomainDataset(images, labels[0], labels[1], labels[2], labels[3], factors, n_shared, meta)
