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
# Experiment protocols behind the command line: dataset building, training runs
# (single, multi-seed or leave-one-domain-out sweeps) and the three evaluations.
#
# ===============================================================================================


import csv
import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from nestedvae.config import ExperimentConfig, config_to_dict, validate
from nestedvae.datasets import (
    CanmSpec,
    DomainDataset,
    build_rotated_mnist_splits,
    generate_canm,
    load_idx,
    make_change_pairs,
    read_dataset,
    sample_pairs,
    write_dataset,
)
from nestedvae.errors import ConfigError, DataError
from nestedvae.metrics import (
    ForestParams,
    MetricsReport,
    accuracy,
    aggregate_runs,
    change_detection_accuracy,
    forest_fit,
    forest_predict,
    linear_r2,
    macro_f1,
    normalize_score,
    pca2,
)
from nestedvae.models import build_model, embed, reconstruct_mu
from nestedvae.train import TrainLog, init_generator, train, train_beta_vae
from nestedvae.utils import derive_seed, load_model, save_checkpoint, worker_count

__all__ = [
    'Run',
    'dataset_paths',
    'build_datasets',
    'write_datasets',
    'load_datasets',
    'plan_runs',
    'train_run',
    'train_all',
    'evaluate',
    'write_projection',
]

logger = logging.getLogger(__name__)

TRAIN_FILE = 'train.nvds'
TEST_FILE = 'test.nvds'
CHECKPOINT_FILE = 'checkpoint.json'
LOSSES_FILE = 'losses.csv'
REFERENCE_EPOCHS = 100


@dataclass
class Run:
    """One training run: a seed, an optional held-out domain and its output directory."""

    seed: int
    holdout: Optional[int]
    directory: str

    @property
    def train_seed(self) -> int:
        return self.seed if self.holdout is None else derive_seed(self.seed, self.holdout)


def dataset_paths(cfg: ExperimentConfig) -> Tuple[str, str]:
    return os.path.join(cfg.data_dir, TRAIN_FILE), os.path.join(cfg.data_dir, TEST_FILE)


def _canm_spec(cfg: ExperimentConfig) -> CanmSpec:
    d = cfg.data
    return CanmSpec(shared_dim=d.canm_shared_dim, domain_dim=d.canm_domain_dim, n_domains=d.canm_domains,
                    image_size=d.canm_image_size, hidden=d.canm_hidden, noise_scale=d.canm_noise,
                    mixing_seed=d.canm_mixing_seed)


def build_datasets(cfg: ExperimentConfig) -> Tuple[DomainDataset, DomainDataset]:
    """Generate the train and test datasets described by ``cfg.data``."""
    seed = cfg.seeds[0]
    if cfg.data.kind == 'rotated_mnist':
        src = load_idx(cfg.data.images_path, cfg.data.labels_path)
        train_ds, test_ds = build_rotated_mnist_splits(src, cfg.data.per_class, cfg.data.angles, seed)
    elif cfg.data.kind == 'canm':
        spec = _canm_spec(cfg)
        train_ds = generate_canm(spec, cfg.data.canm_train_per_domain, seed)
        test_ds = generate_canm(spec, cfg.data.canm_test_per_domain, derive_seed(seed, 1))
    else:
        raise ConfigError('unknown data kind {!r}'.format(cfg.data.kind))
    stamp = {'data': dataclasses.asdict(cfg.data), 'seed': seed}
    for ds in (train_ds, test_ds):
        ds.meta['stamp'] = stamp
    return train_ds, test_ds


def write_datasets(cfg: ExperimentConfig) -> Tuple[str, str]:
    train_ds, test_ds = build_datasets(cfg)
    os.makedirs(cfg.data_dir, exist_ok=True)
    train_path, test_path = dataset_paths(cfg)
    write_dataset(train_path, train_ds)
    write_dataset(test_path, test_ds)
    return train_path, test_path


def load_datasets(cfg: ExperimentConfig) -> Tuple[DomainDataset, DomainDataset]:
    train_path, test_path = dataset_paths(cfg)
    for path in (train_path, test_path):
        if not os.path.exists(path):
            raise FileNotFoundError('dataset container not found: {} (run build-data first)'.format(path))
    return read_dataset(train_path), read_dataset(test_path)


def plan_runs(cfg: ExperimentConfig, n_domains: int) -> List[Run]:
    """
    Output layout: ``OUT/seed_<s>/holdout_<k>/`` for sweeps, ``OUT/seed_<s>/`` for several
    seeds and ``OUT/`` for a single run.
    """
    validate(cfg, n_domains)
    if cfg.protocol == 'lodo' and not cfg.sweep_domains and cfg.holdout_domain is None:
        raise ConfigError('the lodo protocol needs --holdout-domain K or --sweep-domains')
    if cfg.sweep_domains:
        return [Run(s, k, os.path.join(cfg.out_dir, 'seed_{}'.format(s), 'holdout_{}'.format(k)))
                for s in cfg.seeds for k in range(n_domains)]
    if len(cfg.seeds) == 1:
        return [Run(cfg.seeds[0], cfg.holdout_domain, cfg.out_dir)]
    return [Run(s, cfg.holdout_domain, os.path.join(cfg.out_dir, 'seed_{}'.format(s))) for s in cfg.seeds]


def _stamp(cfg: ExperimentConfig, run: Run) -> Dict[str, Any]:
    return {'config': config_to_dict(cfg), 'seed': run.seed, 'train_seed': run.train_seed,
            'holdout_domain': run.holdout}


def train_run(cfg: ExperimentConfig, run: Run, train_ds: DomainDataset) -> TrainLog:
    """Train one model on every training item outside the held-out domain and save it."""
    data = train_ds if run.holdout is None else train_ds.exclude_domain(run.holdout)
    if run.holdout is not None and len(data) == len(train_ds):
        raise DataError('held-out domain {} has no training items'.format(run.holdout))
    train_cfg = dataclasses.replace(cfg.train, seed=run.train_seed)
    model = build_model(cfg.model_kind, cfg.model, train_cfg, init_generator(run.train_seed))
    logger.info('run seed=%d holdout=%s -> %s', run.seed, run.holdout, run.directory)
    if cfg.model_kind == 'nested':
        log = train(model, data, train_cfg)
    else:
        log = train_beta_vae(model, data, train_cfg)
    # positions in `data` back to positions in `train_ds`
    kept = np.arange(len(train_ds)) if run.holdout is None else np.flatnonzero(train_ds.domain_labels != run.holdout)
    log.seen_indices = kept[log.seen_indices]
    if run.holdout is not None and np.any(train_ds.domain_labels[log.seen_indices] == run.holdout):
        raise DataError('held-out domain {} leaked into training batches'.format(run.holdout))
    os.makedirs(run.directory, exist_ok=True)
    stamp = _stamp(cfg, run)
    save_checkpoint(os.path.join(run.directory, CHECKPOINT_FILE), model, cfg.model_kind, cfg.model, train_cfg,
                    extra=dict(stamp, seen_items=int(log.seen_indices.size)))
    log.write_csv(os.path.join(run.directory, LOSSES_FILE), stamp)
    return log


def train_all(cfg: ExperimentConfig) -> List[Tuple[Run, TrainLog]]:
    """Train every planned run; runs execute on at most ``NESTED_FACTOR_THREADS`` threads."""
    train_ds, _ = load_datasets(cfg)
    runs = plan_runs(cfg, train_ds.n_domains)
    if cfg.data.kind == 'rotated_mnist' and cfg.train.epochs < REFERENCE_EPOCHS:
        logger.warning('training for %d epochs, below the reference %d', cfg.train.epochs, REFERENCE_EPOCHS)
    if len(runs) == 1:
        return [(runs[0], train_run(cfg, runs[0], train_ds))]
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(runs))) as pool:
        logs = list(pool.map(lambda run: train_run(cfg, run, train_ds), runs))
    return list(zip(runs, logs))


def _level(cfg: ExperimentConfig) -> str:
    return 'nested' if cfg.model_kind == 'nested' else 'outer'


def _forest_params(cfg: ExperimentConfig) -> ForestParams:
    p = cfg.probe
    return ForestParams(n_trees=p.n_trees, max_depth=p.max_depth, max_features=p.max_features,
                        min_samples_split=p.min_samples_split)


def _n_classes(*datasets: DomainDataset) -> int:
    return int(max(ds.class_labels.max() for ds in datasets)) + 1


def _lodo_run(cfg, run, model, train_ds, test_ds) -> Dict:
    k = run.holdout
    seen = train_ds.exclude_domain(k)
    level = _level(cfg)
    e_seen = embed(model, seen.images, level)
    e_test = embed(model, test_ds.images, level)
    params = _forest_params(cfg)
    n_classes = _n_classes(train_ds, test_ds)
    n_domains = max(train_ds.n_domains, test_ds.n_domains)
    scores = {}

    # digit probe: seen domains of the train split -> held-out domain of the test split
    digit = forest_fit(e_seen, seen.class_labels, params, derive_seed(run.seed, k, 1), n_classes)
    held = test_ds.domain_labels == k
    pred = forest_predict(digit, e_test[held])
    acc = accuracy(pred, test_ds.class_labels[held])
    scores[('digit', k, 'accuracy')] = acc
    scores[('digit', k, 'normalized_accuracy')] = normalize_score(acc, n_classes)
    scores[('digit', k, 'macro_f1')] = macro_f1(pred, test_ds.class_labels[held], n_classes)

    # domain probe: seen domains -> every domain of the test split
    rotation = forest_fit(e_seen, seen.domain_labels, params, derive_seed(run.seed, k, 2), n_domains)
    pred = forest_predict(rotation, e_test)
    acc = accuracy(pred, test_ds.domain_labels)
    scores[('rotation', k, 'accuracy')] = acc
    scores[('rotation', k, 'normalized_accuracy')] = normalize_score(acc, n_domains)
    scores[('rotation', k, 'macro_f1')] = macro_f1(pred, test_ds.domain_labels, n_domains)

    if cfg.model_kind == 'nested':
        scores.update(_sufficiency(cfg, run, model, test_ds))
    return scores


def _sufficiency(cfg, run, model, test_ds) -> Dict:
    # nested prediction of the partner's mean vs predicting the dataset mean
    rng = np.random.default_rng(derive_seed(run.seed, 3))
    pairs = sample_pairs(test_ds, cfg.sufficiency_pairs, rng, cfg.train.pair_key)
    mu_i = embed(model, pairs.x_i, 'outer')
    mu_j = embed(model, pairs.x_j, 'outer')
    mu_bar = embed(model, test_ds.images, 'outer').mean(axis=0)
    mse_nested = float(np.mean(np.sum((reconstruct_mu(model, mu_i) - mu_j) ** 2, axis=1)))
    mse_mean = float(np.mean(np.sum((mu_bar - mu_j) ** 2, axis=1)))
    return {('sufficiency', None, 'mse_nested'): mse_nested, ('sufficiency', None, 'mse_mean_baseline'): mse_mean}


def _change_run(cfg, run, model, train_ds, test_ds) -> Dict:
    rng = np.random.default_rng(derive_seed(run.seed, 4))
    pairs = make_change_pairs(test_ds, cfg.change_pairs, rng)
    level = _level(cfg)
    e_a = embed(model, test_ds.images[pairs.index_a], level)
    e_b = embed(model, test_ds.images[pairs.index_b], level)
    return {('change', None, 'accuracy'): change_detection_accuracy(e_a, e_b, pairs.labels)}


def _canm_run(cfg, run, model, train_ds, test_ds) -> Dict:
    if train_ds.factors is None or test_ds.factors is None:
        raise DataError('the canm protocol needs datasets with ground-truth factors')
    level = _level(cfg)
    e_train = embed(model, train_ds.images, level)
    e_test = embed(model, test_ds.images, level)
    params = _forest_params(cfg)
    n_domains = max(train_ds.n_domains, test_ds.n_domains)
    shared = forest_fit(e_train, train_ds.class_labels, params, derive_seed(run.seed, 5), 2)
    acc_shared = accuracy(forest_predict(shared, e_test), test_ds.class_labels)
    domain = forest_fit(e_train, train_ds.domain_labels, params, derive_seed(run.seed, 6), n_domains)
    acc_domain = accuracy(forest_predict(domain, e_test), test_ds.domain_labels)
    n_shared = test_ds.n_shared_factors
    return {
        ('canm_shared', None, 'accuracy'): acc_shared,
        ('canm_shared', None, 'normalized_accuracy'): normalize_score(acc_shared, 2),
        ('canm_domain', None, 'accuracy'): acc_domain,
        ('canm_domain', None, 'normalized_accuracy'): normalize_score(acc_domain, n_domains),
        ('canm_r2', None, 'shared_factors'): float(np.mean(linear_r2(e_test, test_ds.factors[:, :n_shared]))),
        ('canm_r2', None, 'domain_factors'): float(np.mean(linear_r2(e_test, test_ds.factors[:, n_shared:]))),
    }


_PROTOCOL_RUNS = {'lodo': _lodo_run, 'change': _change_run, 'canm': _canm_run}


def write_projection(path: str, embeddings: np.ndarray, ds: DomainDataset, stamp: Dict[str, Any]) -> None:
    """2-D principal-component scatter data: columns ``x, y, class, domain``."""
    xy = pca2(embeddings)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        fh.write('# config: {}\n'.format(json.dumps(stamp, sort_keys=True)))
        writer = csv.writer(fh)
        writer.writerow(['x', 'y', 'class', 'domain'])
        for (x, y), c, d in zip(xy, ds.class_labels, ds.domain_labels):
            writer.writerow([repr(float(x)), repr(float(y)), int(c), int(d)])
    logger.info('wrote %s', path)


def evaluate(cfg: ExperimentConfig, checkpoint: Optional[str] = None) -> MetricsReport:
    """
    Run ``cfg.protocol`` over every planned run and write ``metrics.json``,
    ``metrics.csv`` and ``projection.csv`` under ``cfg.out_dir``.

    :param checkpoint: explicit checkpoint for a single run; defaults to the run directory's.
    """
    train_ds, test_ds = load_datasets(cfg)
    runs = plan_runs(cfg, train_ds.n_domains)
    if checkpoint is not None and len(runs) != 1:
        raise ConfigError('--checkpoint applies to a single run, {} are planned'.format(len(runs)))
    per_run = []
    projection_model = None
    for run in runs:
        path = checkpoint or os.path.join(run.directory, CHECKPOINT_FILE)
        if not os.path.exists(path):
            raise FileNotFoundError('checkpoint not found: {}'.format(path))
        model, manifest = load_model(path)
        kind = manifest.get('model_kind')
        if kind != cfg.model_kind:
            raise ConfigError('{} holds a {} model but --model is {}'.format(path, kind, cfg.model_kind))
        per_run.append(_PROTOCOL_RUNS[cfg.protocol](cfg, run, model, train_ds, test_ds))
        logger.info('evaluated %s', path)
        if projection_model is None:
            projection_model = model

    report = MetricsReport(cfg.protocol, cfg.model_kind, aggregate_runs(per_run),
                           config=config_to_dict(cfg), seeds=list(cfg.seeds))
    if cfg.protocol == 'lodo':
        for probe in ('digit', 'rotation'):
            for metric in ('macro_f1', 'normalized_accuracy'):
                report.add_parity(probe, metric)
        report.extras['rotation_probe_macro_f1'] = float(np.mean(
            list(report.domain_scores('rotation', 'macro_f1').values())))
    elif cfg.protocol == 'change':
        report.change_detection_accuracy = report.pooled('change', 'accuracy').mean
    suff = report.pooled('sufficiency', 'mse_nested')
    if suff is not None:
        report.extras['sufficient'] = bool(suff.mean < report.pooled('sufficiency', 'mse_mean_baseline').mean)

    os.makedirs(cfg.out_dir, exist_ok=True)
    report.write_json(os.path.join(cfg.out_dir, 'metrics.json'))
    report.write_csv(os.path.join(cfg.out_dir, 'metrics.csv'))
    write_projection(os.path.join(cfg.out_dir, 'projection.csv'),
                     embed(projection_model, test_ds.images, _level(cfg)), test_ds,
                     {'config': report.config, 'seeds': report.seeds})
    return report
