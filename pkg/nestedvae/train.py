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
# Training loops for the nested model and the beta-VAE baseline: sample a batch,
# draw noise, evaluate the loss, backpropagate and take one ADAM step.
#
# ===============================================================================================


import csv
import dataclasses
import json
import logging
import math
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from nestedvae.autograd import backward, no_grad
from nestedvae.config import TrainConfig
from nestedvae.datasets import DomainDataset, PairBatch, PairIndex
from nestedvae.errors import DataError, NumericError, TrainingError
from nestedvae.models import LOSS_COMPONENTS, BetaSchedule, BetaVAE, NestedVAE, beta_at
from nestedvae.optim import Adam
from nestedvae.utils import spawn_generators

__all__ = [
    'TrainLog',
    'train',
    'train_beta_vae',
    'evaluate_loss',
    'init_generator',
    'BETA_VAE_COMPONENTS',
]

logger = logging.getLogger(__name__)

BETA_VAE_COMPONENTS = ('total', 'recon', 'kl')

# generator streams derived from TrainConfig.seed
_INIT, _BATCHES, _NOISE = 0, 1, 2


def init_generator(seed: int) -> np.random.Generator:
    """Generator for weight initialisation of a run with ``seed``."""
    return spawn_generators(seed, 3)[_INIT]


@dataclass
class TrainLog:
    """
    Per-epoch means of every loss component, the KL weight used in each epoch,
    the dataset positions that appeared in any batch and the loss of the very first
    batch, evaluated before any update.
    """

    components: Tuple[str, ...]
    epochs: List[Dict[str, float]] = field(default_factory=list)
    seen_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    initial_total: Optional[float] = None

    @property
    def columns(self) -> List[str]:
        return ['epoch', 'beta'] + list(self.components)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.epochs])

    def write_csv(self, path: str, stamp: Optional[Dict[str, Any]] = None) -> None:
        """Write one row per epoch; the first line is a ``# config:`` comment when ``stamp`` is given."""
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            if stamp is not None:
                fh.write('# config: {}\n'.format(json.dumps(stamp, sort_keys=True)))
            writer = csv.DictWriter(fh, fieldnames=self.columns)
            writer.writeheader()
            for row in self.epochs:
                writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in self.columns})
        logger.info('wrote %s', path)


BatchStream = Callable[[np.random.Generator], Iterator[Tuple[Any, np.ndarray]]]


def _fit(model, config: TrainConfig, n_items: int, epoch_batches: BatchStream,
         components: Sequence[str], desc: str) -> TrainLog:
    rngs = spawn_generators(config.seed, 3)
    batch_rng, noise_rng = rngs[_BATCHES], rngs[_NOISE]
    schedule = BetaSchedule(config.beta_max, config.epochs, config.warmup_fraction, config.anneal_fraction)
    optimizer = Adam(model.parameters(), lr=config.learning_rate)
    log = TrainLog(tuple(components))
    seen = np.zeros(n_items, dtype=bool)
    show = bool(config.progress) and sys.stderr.isatty()

    for epoch in tqdm(range(config.epochs), desc=desc, disable=not show):
        beta = beta_at(schedule, epoch)
        sums: Dict[str, float] = defaultdict(float)
        n_seen = 0
        for b, (batch, used) in enumerate(epoch_batches(batch_rng)):
            size = len(batch)
            noise = model.draw_noise(size, noise_rng)
            optimizer.zero_grad()
            try:
                total, parts = model.loss(batch, beta, noise)
            except TrainingError:
                raise
            except NumericError as exc:
                raise TrainingError('non-finite value at epoch {} batch {}: {}'.format(epoch, b, exc),
                                    epoch=epoch, batch=b) from exc
            if not math.isfinite(parts['total']):
                raise TrainingError('loss is {} at epoch {} batch {}'.format(parts['total'], epoch, b),
                                    epoch=epoch, batch=b)
            if log.initial_total is None:
                log.initial_total = parts['total']
            backward(total)
            try:
                optimizer.step()
            except NumericError as exc:
                raise TrainingError('{} (epoch {} batch {})'.format(exc, epoch, b), epoch=epoch, batch=b) from exc
            for name in components:
                sums[name] += parts[name] * size
            n_seen += size
            seen[used] = True
            logger.debug('epoch %d batch %d beta %.4f total %.6f', epoch, b, beta, parts['total'])
        row = {'epoch': epoch, 'beta': float(beta)}
        row.update({name: sums[name] / n_seen for name in components})
        log.epochs.append(row)
        logger.info('epoch %d/%d beta=%.4f %s', epoch + 1, config.epochs, beta,
                    ' '.join('{}={:.4f}'.format(k, row[k]) for k in components))
    log.seen_indices = np.flatnonzero(seen)
    return log


def _pair_batches(dataset: DomainDataset, config: TrainConfig, key: str) -> BatchStream:
    index = PairIndex(dataset, key)

    def epoch_batches(rng):
        # one epoch = len(dataset) pairs
        remaining = len(dataset)
        while remaining > 0:
            size = min(config.batch_size, remaining)
            index_i, index_j, _ = index.sample(size, rng)
            batch = PairBatch.from_indices(dataset, index_i, index_j, dataset.class_labels[index_i])
            remaining -= size
            yield batch, np.concatenate([index_i, index_j])

    return epoch_batches


def train(model: NestedVAE, dataset: DomainDataset, config: TrainConfig, pair_key: Optional[str] = None) -> TrainLog:
    """
    Fit a :class:`NestedVAE` on pairs drawn from ``dataset``.

    Each epoch draws ``len(dataset)`` pairs in batches of ``config.batch_size``; all four
    parameter sets are updated jointly by one ADAM optimiser.

    :param model: an initialised model (see :func:`~nestedvae.models.build_nested_vae`).
    :param dataset: training items; must span at least two domains.
    :param config: optimisation settings.
    :param pair_key: ``class`` or ``group``; defaults to ``config.pair_key``.

    :raises TrainingError: on a non-finite loss, naming the epoch and batch.
    """
    if len(dataset) == 0:
        raise DataError('empty training set')
    dataset.require_domains(2)
    if config.beta_max is None:
        config = dataclasses.replace(config, beta_max=1.0)
    key = pair_key or config.pair_key
    logger.info('training nested model on %d items, %d domains, %d epochs',
                len(dataset), len(dataset.domains), config.epochs)
    return _fit(model, config, len(dataset), _pair_batches(dataset, config, key), LOSS_COMPONENTS, 'nested')


def train_beta_vae(model: BetaVAE, dataset: DomainDataset, config: TrainConfig) -> TrainLog:
    """Fit the baseline on single images, one shuffled pass over ``dataset`` per epoch."""
    if len(dataset) == 0:
        raise DataError('empty training set')
    if config.beta_max is None:
        config = dataclasses.replace(config, beta_max=4.0)
    n = len(dataset)

    def epoch_batches(rng):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            yield dataset.images[rows], rows

    logger.info('training beta-VAE on %d items, %d epochs', n, config.epochs)
    return _fit(model, config, n, epoch_batches, BETA_VAE_COMPONENTS, 'beta-vae')


def evaluate_loss(model, dataset: DomainDataset, beta: float, n_items: int = 256, seed: int = 0,
                  pair_key: str = 'class') -> float:
    """
    Loss of ``model`` on a fixed, seed-determined sample without any update; the same
    ``seed`` selects the same pairs and noise before and after training.
    """
    rng = np.random.default_rng(seed)
    with no_grad():
        if isinstance(model, NestedVAE):
            index_i, index_j, _ = PairIndex(dataset, pair_key).sample(n_items, rng)
            batch = PairBatch.from_indices(dataset, index_i, index_j, dataset.class_labels[index_i])
        else:
            batch = dataset.images[rng.choice(len(dataset), size=min(n_items, len(dataset)), replace=False)]
        _, parts = model.loss(batch, beta, model.draw_noise(len(batch), rng))
    return parts['total']
