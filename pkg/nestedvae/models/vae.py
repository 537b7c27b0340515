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
# Single-VAE building blocks: Gaussian encoder, reparameterised sampling,
# closed-form KL to the standard normal and the beta-weighted ELBO.
#
# ===============================================================================================


import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from nestedvae.autograd import Tensor, as_tensor, no_grad
from nestedvae.autograd import functional as F
from nestedvae.errors import ConfigError, DimensionError, UsageError
from nestedvae.layers import Module

__all__ = [
    'LOGVAR_MIN',
    'LOGVAR_MAX',
    'LatentGaussian',
    'GaussianEncoder',
    'BetaSchedule',
    'BetaVAE',
    'encode',
    'reparameterize',
    'kl_std_normal',
    'recon_mse',
    'beta_elbo_loss',
    'beta_at',
]

logger = logging.getLogger(__name__)

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0


@dataclass
class LatentGaussian:
    r"""
    Diagonal Gaussian posterior :math:`q(z|x) = \mathcal{N}(\mu, \mathrm{diag}(e^{\log\sigma^2}))`.

    :param mu: means of shape :math:`(B, d)`.
    :param logvar: log-variances of shape :math:`(B, d)`, clamped to ``[-10, 10]``.
    """

    mu: Tensor
    logvar: Tensor

    def __post_init__(self):
        if self.mu.shape != self.logvar.shape:
            raise DimensionError('mu {} and logvar {} differ in shape'.format(self.mu.shape, self.logvar.shape))

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


class GaussianEncoder(Module):
    """
    A feature extractor followed by two linear heads for the mean and the log-variance.

    :param body: module mapping inputs to features.
    :param mu_head: module mapping features to :math:`\\mu`.
    :param logvar_head: module mapping features to :math:`\\log\\sigma^2`.
    """

    kind = 'gaussian_encoder'

    def __init__(self, body: Module, mu_head: Module, logvar_head: Module):
        self.body = body
        self.mu_head = mu_head
        self.logvar_head = logvar_head

    @property
    def latent_dim(self) -> int:
        return self.mu_head.out_features

    def forward(self, x) -> LatentGaussian:
        return encode(self, x)


def encode(encoder: GaussianEncoder, x) -> LatentGaussian:
    """
    Run ``encoder`` on ``x`` and return the posterior heads. The log-variance is
    clamped to ``[LOGVAR_MIN, LOGVAR_MAX]`` before anything exponentiates it.
    """
    h = encoder.body(as_tensor(x))
    mu = encoder.mu_head(h)
    logvar = F.clamp(encoder.logvar_head(h), LOGVAR_MIN, LOGVAR_MAX)
    return LatentGaussian(mu, logvar)


def reparameterize(g: LatentGaussian, eps: Union[Tensor, np.ndarray]) -> Tensor:
    r"""
    :math:`z = \mu + \epsilon \odot \exp(\tfrac{1}{2}\log\sigma^2)`.

    ``eps`` is treated as a constant; gradients reach ``mu`` and ``logvar`` only.
    """
    eps = Tensor(eps.data if isinstance(eps, Tensor) else eps)
    if eps.shape != g.mu.shape:
        raise DimensionError('eps shape {} does not match mu {}'.format(eps.shape, g.mu.shape))
    std = F.exp(F.mul(g.logvar, 0.5))
    return F.add(g.mu, F.mul(eps, std))


def kl_std_normal(g: LatentGaussian) -> Tensor:
    r"""
    Closed-form :math:`\mathrm{KL}(q \,\|\, \mathcal{N}(0, I))`, averaged over the batch:

    .. math::

        \begin{equation*}
            \frac{1}{B} \sum_b \frac{1}{2} \sum_i \left( e^{\log\sigma^2_{bi}} + \mu_{bi}^2 - \log\sigma^2_{bi} - 1 \right)
        \end{equation*}

    This is the standard form, including the :math:`-1` per dimension.
    """
    batch = g.mu.shape[0]
    per_dim = F.sub(F.sub(F.add(F.exp(g.logvar), F.square(g.mu)), g.logvar), 1.0)
    return F.mul(F.sum(per_dim), 0.5 / batch)


def recon_mse(x_hat: Tensor, x) -> Tensor:
    """Squared error summed over feature axes and averaged over the batch."""
    x = as_tensor(x)
    if x_hat.shape != x.shape:
        raise DimensionError('reconstruction shape {} does not match target {}'.format(x_hat.shape, x.shape))
    return F.mul(F.sum(F.square(F.sub(x_hat, x))), 1.0 / x.shape[0])


def beta_elbo_loss(x, encoder: GaussianEncoder, decoder: Module, beta: float, eps) -> Tuple[Tensor, LatentGaussian, Tensor]:
    r"""
    Negative beta-ELBO of one VAE.

    .. math::

        \begin{equation*}
            \mathcal{L}(x) = \mathrm{MSE}(\hat{x}, x) + \beta \, \mathrm{KL}(q(z|x) \,\|\, \mathcal{N}(0, I)),
            \quad \hat{x} = \mathrm{dec}(\mu + \epsilon \odot \sigma)
        \end{equation*}

    :param x: input batch.
    :param encoder: the :class:`GaussianEncoder`.
    :param decoder: module mapping latent codes back to the input shape.
    :param beta: KL weight, ``>= 0``.
    :type beta: float
    :param eps: standard-normal noise shaped like the latent means.

    :return: ``(loss, posterior, reconstruction)``.
    """
    if beta < 0:
        raise UsageError('beta must be >= 0, got {}'.format(beta))
    g = encode(encoder, x)
    x_hat = decoder(reparameterize(g, eps))
    loss = F.add(recon_mse(x_hat, x), F.mul(kl_std_normal(g), float(beta)))
    return loss, g, x_hat


@dataclass
class BetaSchedule:
    """
    Piecewise-linear KL weight: warm up from 0, hold, then anneal to a quarter of
    ``beta_max`` over the final window.
    """

    beta_max: float
    total_epochs: int
    warmup_fraction: float = 0.3
    anneal_fraction: float = 0.3

    def __post_init__(self):
        if self.beta_max < 0:
            raise ConfigError('beta_max must be >= 0, got {}'.format(self.beta_max))
        if self.total_epochs < 1:
            raise ConfigError('total_epochs must be >= 1, got {}'.format(self.total_epochs))
        if (self.warmup_fraction < 0 or self.anneal_fraction < 0
                or self.warmup_fraction + self.anneal_fraction > 1):
            raise ConfigError('warmup_fraction + anneal_fraction must lie in [0, 1]')

    @property
    def warmup_end(self) -> float:
        return self.warmup_fraction * self.total_epochs

    @property
    def anneal_start(self) -> float:
        return self.total_epochs * (1.0 - self.anneal_fraction)


def beta_at(schedule: BetaSchedule, epoch: int) -> float:
    """
    KL weight for ``epoch`` (0-based). The anneal window ends at ``beta_max / 4``
    on the last epoch.
    """
    if not 0 <= epoch < schedule.total_epochs:
        raise UsageError('epoch {} outside [0, {})'.format(epoch, schedule.total_epochs))
    beta_max = schedule.beta_max
    if schedule.anneal_fraction > 0 and epoch >= schedule.anneal_start:
        span = (schedule.total_epochs - 1) - schedule.anneal_start
        if span <= 0:
            return beta_max / 4.0
        frac = (epoch - schedule.anneal_start) / span
        return beta_max - 0.75 * beta_max * frac
    if epoch < schedule.warmup_end:
        return beta_max * epoch / schedule.warmup_end
    return beta_max


class BetaVAE(Module):
    """
    A single VAE; the baseline against which the nested model is compared.

    :param encoder: the :class:`GaussianEncoder`.
    :param decoder: module mapping :math:`z` back to the input shape.
    """

    kind = 'beta_vae'

    def __init__(self, encoder: GaussianEncoder, decoder: Module):
        self.encoder = encoder
        self.decoder = decoder

    @property
    def latent_dim(self) -> int:
        return self.encoder.latent_dim

    def forward(self, x, beta, eps):
        return beta_elbo_loss(x, self.encoder, self.decoder, beta, eps)

    def loss(self, x, beta: float, eps):
        """Return ``(total, components)`` for one batch."""
        total, g, x_hat = beta_elbo_loss(x, self.encoder, self.decoder, beta, eps)
        components = {
            'total': total.item(),
            'recon': recon_mse(x_hat.detach(), x).item(),
            'kl': kl_std_normal(LatentGaussian(g.mu.detach(), g.logvar.detach())).item(),
        }
        return total, components

    def draw_noise(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((batch_size, self.latent_dim))

    def embed(self, x) -> np.ndarray:
        with no_grad():
            return encode(self.encoder, x).mu.numpy()
