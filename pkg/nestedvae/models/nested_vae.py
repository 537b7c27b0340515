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
# The nested VAE: one weight-shared outer VAE applied to both members of a pair
# and an inner VAE that maps one member's latent mean onto the other's.
#
# ===============================================================================================


import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from nestedvae.autograd import Tensor, as_tensor, no_grad
from nestedvae.autograd import functional as F
from nestedvae.errors import ConfigError, DataError, DimensionError, UsageError
from nestedvae.layers import Module
from nestedvae.models.vae import (
    GaussianEncoder,
    LatentGaussian,
    beta_elbo_loss,
    encode,
    kl_std_normal,
    recon_mse,
    reparameterize,
)

__all__ = [
    'NestedVAE',
    'NestedNoise',
    'LOSS_COMPONENTS',
    'nested_loss',
    'embed',
    'reconstruct_mu',
]

logger = logging.getLogger(__name__)

LOSS_COMPONENTS = ('total', 'outer_i', 'outer_j', 'nested_i', 'nested_j', 'kl_outer', 'kl_nested')

# rows per forward pass in embed / reconstruct_mu
EVAL_CHUNK = 256


class NestedVAE(Module):
    r"""
    Two outer VAEs with shared weights and one nested VAE over their latent means.

    .. math::

        \begin{equation*}
            \mathcal{L} = \gamma \left( \mathcal{L}(x_i) + \mathcal{L}(x_j) \right)
            + \lambda \left( \mathcal{L}_{nest}(\mu_i \to \mu_j) + \mathcal{L}_{nest}(\mu_j \to \mu_i) \right)
        \end{equation*}

    Both pair members go through the same ``outer_encoder``/``outer_decoder`` objects,
    so the two outer VAEs share storage, not copies.

    :param outer_encoder: :class:`GaussianEncoder` producing the :math:`d`-dim outer posterior.
    :param outer_decoder: maps :math:`z` back to image shape.
    :param nested_encoder: :class:`GaussianEncoder` over :math:`d`-dim inputs producing the
        :math:`d_s`-dim nested posterior.
    :param nested_decoder: maps :math:`z_s` back to :math:`d` dims.
    :param gamma: weight of the outer losses. (Default: `0.5`.)
    :type gamma: float, optional
    :param lam: weight of the nested losses. (Default: `0.5`.)
    :type lam: float, optional
    :param beta_nest: KL weight of the nested VAE. (Default: `0.0`.)
    :type beta_nest: float, optional
    :param feed_mode: ``mu`` feeds latent means to the nested VAE, ``z`` feeds samples. (Default: `mu`.)
    :type feed_mode: str, optional
    """

    kind = 'nested_vae'

    def __init__(self,
                 outer_encoder: GaussianEncoder,
                 outer_decoder: Module,
                 nested_encoder: GaussianEncoder,
                 nested_decoder: Module,
                 gamma=0.5,
                 lam=0.5,
                 beta_nest=0.0,
                 feed_mode='mu'):
        if gamma < 0 or lam < 0 or gamma + lam <= 0:
            raise ConfigError('need gamma, lam >= 0 and gamma + lam > 0, got {} and {}'.format(gamma, lam))
        if beta_nest < 0:
            raise ConfigError('beta_nest must be >= 0, got {}'.format(beta_nest))
        if feed_mode not in ('mu', 'z'):
            raise ConfigError('feed_mode must be mu or z, got {!r}'.format(feed_mode))
        if nested_encoder.latent_dim > outer_encoder.latent_dim:
            raise DimensionError('nested latent dim {} exceeds outer latent dim {}'.format(
                nested_encoder.latent_dim, outer_encoder.latent_dim))
        self.outer_encoder = outer_encoder
        self.outer_decoder = outer_decoder
        self.nested_encoder = nested_encoder
        self.nested_decoder = nested_decoder
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.beta_nest = float(beta_nest)
        self.feed_mode = feed_mode

    @property
    def latent_dim(self) -> int:
        return self.outer_encoder.latent_dim

    @property
    def nested_latent_dim(self) -> int:
        return self.nested_encoder.latent_dim

    def forward(self, batch, beta, noise=None, rng=None):
        return nested_loss(self, batch, beta, rng=rng, noise=noise)

    def loss(self, batch, beta, noise):
        return nested_loss(self, batch, beta, noise=noise)

    def draw_noise(self, batch_size: int, rng: np.random.Generator) -> 'NestedNoise':
        return NestedNoise.draw(batch_size, self.latent_dim, self.nested_latent_dim, rng)

    def embed(self, x, level='nested') -> np.ndarray:
        return embed(self, x, level)

    def extra_repr(self):
        return 'gamma={}, lam={}, beta_nest={}, feed_mode={}'.format(self.gamma, self.lam, self.beta_nest, self.feed_mode)


@dataclass
class NestedNoise:
    """
    Standard-normal draws for one joint-loss evaluation: outer noise per pair member
    and nested noise per direction (``nested_i`` encodes member i).
    """

    outer_i: np.ndarray
    outer_j: np.ndarray
    nested_i: np.ndarray
    nested_j: np.ndarray

    @classmethod
    def draw(cls, batch_size: int, latent_dim: int, nested_latent_dim: int, rng: np.random.Generator):
        return cls(rng.standard_normal((batch_size, latent_dim)),
                   rng.standard_normal((batch_size, latent_dim)),
                   rng.standard_normal((batch_size, nested_latent_dim)),
                   rng.standard_normal((batch_size, nested_latent_dim)))

    def swapped(self) -> 'NestedNoise':
        return NestedNoise(self.outer_j, self.outer_i, self.nested_j, self.nested_i)


def _nested_direction(model: NestedVAE, source: Tensor, target: Tensor, eps) -> Tuple[Tensor, Tensor]:
    # L_nest(a -> b) = MSE(dec2(z_s), mu_b) + beta_nest * KL(q(z_s | a))
    g_s = encode(model.nested_encoder, source)
    target_hat = model.nested_decoder(reparameterize(g_s, eps))
    kl = kl_std_normal(g_s)
    loss = F.add(recon_mse(target_hat, target), F.mul(kl, model.beta_nest))
    return loss, kl


def nested_loss(model: NestedVAE, batch, beta: float, rng: Optional[np.random.Generator] = None,
                noise: Optional[NestedNoise] = None) -> Tuple[Tensor, Dict[str, float]]:
    r"""
    Joint objective of the nested model on one batch of pairs.

    Both nested directions are evaluated, so the objective is symmetric in the pair.
    Gradients of the nested terms flow into the outer encoder through :math:`\mu_i`
    and :math:`\mu_j`.

    :param model: the :class:`NestedVAE`.
    :param batch: a :class:`~nestedvae.datasets.PairBatch`.
    :param beta: KL weight of the outer VAE at the current epoch.
    :type beta: float
    :param rng: generator for the noise draws, used when ``noise`` is not given.
    :param noise: fixed :class:`NestedNoise`; makes the loss a deterministic function of the weights.

    :return: the scalar loss and a dict with the float value of every entry of ``LOSS_COMPONENTS``.
    """
    size = len(batch)
    if size == 0:
        raise DataError('empty pair batch')
    same = np.asarray(batch.domain_i) == np.asarray(batch.domain_j)
    if np.any(same):
        raise DataError('{} pair(s) draw both members from the same domain, first at position {}'.format(
            int(same.sum()), int(np.argmax(same))))
    if noise is None:
        if rng is None:
            raise UsageError('nested_loss needs either rng or noise')
        noise = model.draw_noise(size, rng)

    loss_i, g_i, _ = beta_elbo_loss(batch.x_i, model.outer_encoder, model.outer_decoder, beta, noise.outer_i)
    loss_j, g_j, _ = beta_elbo_loss(batch.x_j, model.outer_encoder, model.outer_decoder, beta, noise.outer_j)

    if model.feed_mode == 'z':
        # resample with the same draws the outer decoders used
        source_i = reparameterize(g_i, noise.outer_i)
        source_j = reparameterize(g_j, noise.outer_j)
    else:
        source_i, source_j = g_i.mu, g_j.mu
    nested_i, kl_si = _nested_direction(model, source_i, g_j.mu, noise.nested_i)
    nested_j, kl_sj = _nested_direction(model, source_j, g_i.mu, noise.nested_j)

    outer = F.mul(F.add(loss_i, loss_j), model.gamma)
    inner = F.mul(F.add(nested_i, nested_j), model.lam)
    total = F.add(outer, inner)

    components = {
        'total': total.item(),
        'outer_i': loss_i.item(),
        'outer_j': loss_j.item(),
        'nested_i': nested_i.item(),
        'nested_j': nested_j.item(),
        'kl_outer': kl_std_normal(LatentGaussian(g_i.mu.detach(), g_i.logvar.detach())).item()
        + kl_std_normal(LatentGaussian(g_j.mu.detach(), g_j.logvar.detach())).item(),
        'kl_nested': kl_si.item() + kl_sj.item(),
    }
    return total, components


def _chunks(n: int):
    for start in range(0, n, EVAL_CHUNK):
        yield slice(start, min(start + EVAL_CHUNK, n))


def embed(model: Module, x, level: str = 'nested') -> np.ndarray:
    r"""
    Deterministic embeddings, no sampling.

    :param model: a :class:`NestedVAE`, or a :class:`~nestedvae.models.BetaVAE` for ``level='outer'``.
    :param x: inputs of shape :math:`(N, C, H, W)`.
    :param level: ``outer`` gives :math:`\mu_{\phi_1}(x)`, ``nested`` gives the mean of
        :math:`q_{\phi_2}(z_s \mid \mu_{\phi_1}(x))`. (Default: `nested`.)

    :return: array of shape :math:`(N, d)` or :math:`(N, d_s)`.
    """
    if level not in ('outer', 'nested'):
        raise UsageError('level must be outer or nested, got {!r}'.format(level))
    outer = model.outer_encoder if hasattr(model, 'outer_encoder') else getattr(model, 'encoder', None)
    if outer is None:
        raise UsageError('{} has no outer encoder'.format(type(model).__name__))
    if level == 'nested' and not hasattr(model, 'nested_encoder'):
        raise UsageError('{} has no nested encoder'.format(type(model).__name__))
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    parts = []
    with no_grad():
        for rows in _chunks(data.shape[0]):
            mu = encode(outer, data[rows]).mu
            if level == 'nested':
                mu = encode(model.nested_encoder, mu).mu
            parts.append(mu.data)
    out_dim = model.nested_latent_dim if level == 'nested' else outer.latent_dim
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, out_dim))


def reconstruct_mu(model: NestedVAE, mu_a) -> np.ndarray:
    r"""
    Map outer latent means of one pair member to a prediction of the other's:
    :math:`\mu_a \to \mathbb{E}[z_s] \to \hat{\mu}_b`.
    """
    mu_a = as_tensor(mu_a)
    if mu_a.ndim != 2 or mu_a.shape[1] != model.latent_dim:
        raise DimensionError('expected (N, {}) latent means, got {}'.format(model.latent_dim, mu_a.shape))
    parts = []
    with no_grad():
        for rows in _chunks(mu_a.shape[0]):
            z_s = encode(model.nested_encoder, mu_a.data[rows]).mu
            parts.append(model.nested_decoder(z_s).data)
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, model.latent_dim))
