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
# Synthetic confounding-additive-noise data, x = f_c(z_c) + g_c(z_s) + noise,
# with the ground-truth factors kept for evaluation.
#
# ===============================================================================================


import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from nestedvae.datasets.base import DomainDataset
from nestedvae.errors import ConfigError

__all__ = [
    'CanmSpec',
    'MixingMap',
    'CanmGenerator',
    'generate_canm',
]

logger = logging.getLogger(__name__)


@dataclass
class CanmSpec:
    """
    Parameters of the synthetic generator.

    :param shared_dim: dimension of the shared factor :math:`z_s`.
    :param domain_dim: dimension of the per-item domain factor.
    :param n_domains: number of domains, each with its own mixing maps.
    :param image_size: side of the square single-channel output.
    :param hidden: width of the hidden layer of every mixing map.
    :param noise_scale: standard deviation of the additive pixel noise.
    :param mixing_seed: seed of the mixing maps; train and test splits must share it.
    """

    shared_dim: int = 2
    domain_dim: int = 2
    n_domains: int = 2
    image_size: int = 8
    hidden: int = 16
    noise_scale: float = 0.05
    mixing_seed: int = 0

    def __post_init__(self):
        if min(self.shared_dim, self.domain_dim, self.image_size, self.hidden) < 1:
            raise ConfigError('CANM dimensions must be >= 1')
        if self.n_domains < 2:
            raise ConfigError('CANM needs at least 2 domains, got {}'.format(self.n_domains))
        if self.noise_scale < 0:
            raise ConfigError('noise_scale must be >= 0, got {}'.format(self.noise_scale))

    @property
    def n_pixels(self) -> int:
        return self.image_size * self.image_size


@dataclass
class MixingMap:
    r"""Random two-layer map :math:`z \mapsto W_2 \tanh(W_1 z + b_1)`."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray

    @classmethod
    def random(cls, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator) -> 'MixingMap':
        return cls(rng.standard_normal((in_dim, hidden)) / np.sqrt(in_dim),
                   rng.standard_normal(hidden) * 0.5,
                   rng.standard_normal((hidden, out_dim)) / np.sqrt(hidden))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return np.tanh(z @ self.w1 + self.b1) @ self.w2


class CanmGenerator:
    """
    Holds the per-domain maps ``f_c`` (domain factor) and ``g_c`` (shared factor) drawn
    from ``spec.mixing_seed``.
    """

    def __init__(self, spec: CanmSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.mixing_seed)
        self.f: List[MixingMap] = []
        self.g: List[MixingMap] = []
        for _ in range(spec.n_domains):
            self.f.append(MixingMap.random(spec.domain_dim, spec.hidden, spec.n_pixels, rng))
            self.g.append(MixingMap.random(spec.shared_dim, spec.hidden, spec.n_pixels, rng))

    def render(self, domain: int, z_domain: np.ndarray, z_shared: np.ndarray, noise: Optional[np.ndarray] = None) -> np.ndarray:
        """Images of shape :math:`(N, 1, S, S)` for one domain."""
        x = self.f[domain](z_domain) + self.g[domain](z_shared)
        if noise is not None:
            x = x + self.spec.noise_scale * noise
        return x.reshape(-1, 1, self.spec.image_size, self.spec.image_size)


def generate_canm(spec: CanmSpec, n_per_domain: int, seed: int) -> DomainDataset:
    r"""
    Sample ``n_per_domain`` groups; group ``k`` has one item per domain, all sharing
    :math:`z_s^{(k)}`, each with its own domain factor.

    The class label is ``1`` where the first shared factor is positive. ``factors``
    holds :math:`[z_s, z_c]` per item and ``group_ids`` the group index.

    :param spec: generator parameters.
    :param n_per_domain: items per domain.
    :param seed: seed of the factor and noise draws.
    """
    if n_per_domain < 1:
        raise ConfigError('n_per_domain must be >= 1, got {}'.format(n_per_domain))
    generator = CanmGenerator(spec)
    rng = np.random.default_rng(seed)
    z_shared = rng.standard_normal((n_per_domain, spec.shared_dim))
    labels = (z_shared[:, 0] > 0).astype(np.int64)
    images, classes, domains, groups, factors = [], [], [], [], []
    for c in range(spec.n_domains):
        z_domain = rng.standard_normal((n_per_domain, spec.domain_dim))
        noise = rng.standard_normal((n_per_domain, spec.n_pixels))
        images.append(generator.render(c, z_domain, z_shared, noise))
        classes.append(labels)
        domains.append(np.full(n_per_domain, c, dtype=np.int64))
        groups.append(np.arange(n_per_domain, dtype=np.int64))
        factors.append(np.hstack([z_shared, z_domain]))
    ds = DomainDataset(np.concatenate(images),
                       np.concatenate(classes),
                       np.concatenate(domains),
                       group_ids=np.concatenate(groups),
                       factors=np.concatenate(factors),
                       n_shared_factors=spec.shared_dim,
                       meta={'kind': 'canm', 'spec': dataclasses.asdict(spec), 'seed': int(seed)})
    logger.info('generated CANM dataset: %d items over %d domains', len(ds), spec.n_domains)
    return ds
