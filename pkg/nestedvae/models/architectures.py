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
# Default encoder/decoder stacks: a small convolutional outer VAE for 28x28
# digits, a dense outer VAE for flat or synthetic inputs, and the dense nested VAE.
#
# ===============================================================================================


import logging
from typing import Sequence, Tuple

import numpy as np

from nestedvae.config import ModelConfig, TrainConfig
from nestedvae.errors import ConfigError
from nestedvae.layers import Conv2d, Flatten, Linear, Reshape, Sequential, UpsampleConv2d
from nestedvae.models.nested_vae import NestedVAE
from nestedvae.models.vae import BetaVAE, GaussianEncoder

__all__ = [
    'mnist_encoder',
    'mnist_decoder',
    'dense_encoder',
    'dense_decoder',
    'nested_encoder',
    'nested_decoder',
    'build_outer',
    'build_nested_vae',
    'build_beta_vae',
    'build_model',
]

logger = logging.getLogger(__name__)


def _heads(features: int, latent_dim: int, rng) -> Tuple[Linear, Linear]:
    return Linear(features, latent_dim, rng=rng), Linear(features, latent_dim, rng=rng)


def mnist_encoder(latent_dim: int, rng: np.random.Generator, image_shape=(1, 28, 28),
                  activation='relu') -> GaussianEncoder:
    channels, height, width = image_shape
    if height % 4 or width % 4:
        raise ConfigError('the convolutional architecture needs H and W divisible by 4, got {}'.format(image_shape))

    ##########################################################################
    ## [B, C, H, W] -> [B, 32, H/2, W/2] -> [B, 64, H/4, W/4] -> [B, 256]
    ##########################################################################
    conv1 = Conv2d(channels, 32, 4, stride=2, padding=1, activation=activation, rng=rng)
    conv2 = Conv2d(32, 64, 4, stride=2, padding=1, activation=activation, rng=rng)
    fc = Linear(64 * (height // 4) * (width // 4), 256, activation=activation, rng=rng)
    body = Sequential(conv1, conv2, Flatten(), fc)
    return GaussianEncoder(body, *_heads(256, latent_dim, rng))


def mnist_decoder(latent_dim: int, rng: np.random.Generator, image_shape=(1, 28, 28),
                  activation='relu', output_activation='sigmoid') -> Sequential:
    channels, height, width = image_shape
    h4, w4 = height // 4, width // 4

    ##########################################################################
    ## [B, d] -> [B, 256] -> [B, 32, H/4, W/4] -> [B, 16, H/2, W/2] -> [B, C, H, W]
    ##########################################################################
    fc1 = Linear(latent_dim, 256, activation=activation, rng=rng)
    fc2 = Linear(256, 32 * h4 * w4, activation=activation, rng=rng)
    up1 = UpsampleConv2d(32, 16, 3, activation=activation, rng=rng)
    up2 = UpsampleConv2d(16, channels, 3, activation=output_activation, rng=rng)
    return Sequential(fc1, fc2, Reshape((32, h4, w4)), up1, up2)


def dense_encoder(latent_dim: int, rng: np.random.Generator, image_shape: Sequence[int],
                  hidden_sizes: Sequence[int] = (256, 128), activation='relu') -> GaussianEncoder:
    layers = [Flatten()]
    width = int(np.prod(image_shape))
    for size in hidden_sizes:
        layers.append(Linear(width, size, activation=activation, rng=rng))
        width = size
    return GaussianEncoder(Sequential(*layers), *_heads(width, latent_dim, rng))


def dense_decoder(latent_dim: int, rng: np.random.Generator, image_shape: Sequence[int],
                  hidden_sizes: Sequence[int] = (256, 128), activation='relu',
                  output_activation='sigmoid') -> Sequential:
    layers = []
    width = latent_dim
    for size in reversed(list(hidden_sizes)):
        layers.append(Linear(width, size, activation=activation, rng=rng))
        width = size
    layers.append(Linear(width, int(np.prod(image_shape)), activation=output_activation, rng=rng))
    layers.append(Reshape(tuple(image_shape)))
    return Sequential(*layers)


def nested_encoder(latent_dim: int, nested_latent_dim: int, rng: np.random.Generator,
                   hidden=64, activation='relu') -> GaussianEncoder:
    body = Sequential(Linear(latent_dim, hidden, activation=activation, rng=rng),
                      Linear(hidden, hidden, activation=activation, rng=rng))
    return GaussianEncoder(body, *_heads(hidden, nested_latent_dim, rng))


def nested_decoder(nested_latent_dim: int, latent_dim: int, rng: np.random.Generator,
                   hidden=64, activation='relu') -> Sequential:
    # linear output: targets are unbounded latent means
    return Sequential(Linear(nested_latent_dim, hidden, activation=activation, rng=rng),
                      Linear(hidden, hidden, activation=activation, rng=rng),
                      Linear(hidden, latent_dim, rng=rng))


def build_outer(cfg: ModelConfig, rng: np.random.Generator):
    """Return ``(encoder, decoder)`` of the outer VAE described by ``cfg``."""
    if cfg.architecture == 'mnist':
        encoder = mnist_encoder(cfg.latent_dim, rng, cfg.image_shape, cfg.hidden_activation)
        decoder = mnist_decoder(cfg.latent_dim, rng, cfg.image_shape, cfg.hidden_activation,
                                cfg.output_activation)
    elif cfg.architecture == 'dense':
        encoder = dense_encoder(cfg.latent_dim, rng, cfg.image_shape, cfg.hidden_sizes, cfg.hidden_activation)
        decoder = dense_decoder(cfg.latent_dim, rng, cfg.image_shape, cfg.hidden_sizes,
                                cfg.hidden_activation, cfg.output_activation)
    else:
        raise ConfigError('unknown architecture {!r}'.format(cfg.architecture))
    return encoder, decoder


def build_nested_vae(cfg: ModelConfig, train: TrainConfig, rng: np.random.Generator) -> NestedVAE:
    """Glorot-initialise a :class:`NestedVAE` from the model and training configs."""
    outer_enc, outer_dec = build_outer(cfg, rng)
    model = NestedVAE(outer_enc,
                      outer_dec,
                      nested_encoder(cfg.latent_dim, cfg.nested_latent_dim, rng, cfg.nested_hidden,
                                     cfg.hidden_activation),
                      nested_decoder(cfg.nested_latent_dim, cfg.latent_dim, rng, cfg.nested_hidden,
                                     cfg.hidden_activation),
                      gamma=train.gamma,
                      lam=train.lam,
                      beta_nest=train.beta_nest,
                      feed_mode=train.feed_mode)
    logger.debug('built %s architecture with %d parameters', cfg.architecture, model.num_parameters())
    return model


def build_beta_vae(cfg: ModelConfig, rng: np.random.Generator) -> BetaVAE:
    return BetaVAE(*build_outer(cfg, rng))


def build_model(kind: str, cfg: ModelConfig, train: TrainConfig, rng: np.random.Generator):
    """Build the model named by ``kind`` (``nested`` or ``beta-vae``)."""
    if kind == 'nested':
        return build_nested_vae(cfg, train, rng)
    if kind == 'beta-vae':
        return build_beta_vae(cfg, rng)
    raise ConfigError('unknown model kind {!r}'.format(kind))
