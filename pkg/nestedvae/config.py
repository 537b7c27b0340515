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
# Experiment configuration. One JSON file per experiment, loaded into the
# dataclasses below and overridden by command-line flags.
#
# ===============================================================================================


import dataclasses
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from nestedvae.errors import ConfigError

__all__ = [
    'ModelConfig',
    'TrainConfig',
    'DataConfig',
    'ProbeConfig',
    'ExperimentConfig',
    'load_config',
    'config_from_dict',
    'config_to_dict',
    'apply_overrides',
    'validate',
    'MODEL_KINDS',
    'PROTOCOLS',
]

logger = logging.getLogger(__name__)

MODEL_KINDS = ('nested', 'beta-vae')
PROTOCOLS = ('lodo', 'change', 'canm')
DEFAULT_BETA_MAX = {'nested': 1.0, 'beta-vae': 4.0}


@dataclass
class ModelConfig:
    """Architecture of the outer and nested networks."""

    architecture: str = 'mnist'
    image_shape: Tuple[int, int, int] = (1, 28, 28)
    latent_dim: int = 10
    nested_latent_dim: int = 8
    hidden_sizes: List[int] = field(default_factory=lambda: [256, 128])
    nested_hidden: int = 64
    hidden_activation: str = 'relu'
    output_activation: str = 'sigmoid'


@dataclass
class TrainConfig:
    """
    Optimisation settings. ``beta_max=None`` resolves to 1 for the nested model
    and 4 for the beta-VAE baseline.
    """

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.0008
    seed: int = 0
    gamma: float = 0.5
    lam: float = 0.5
    beta_max: Optional[float] = None
    beta_nest: float = 0.0
    feed_mode: str = 'mu'
    warmup_fraction: float = 0.3
    anneal_fraction: float = 0.3
    pair_key: str = 'class'
    progress: bool = True


@dataclass
class DataConfig:
    kind: str = 'rotated_mnist'
    images_path: Optional[str] = None
    labels_path: Optional[str] = None
    per_class: int = 100
    angles: List[float] = field(default_factory=lambda: [0.0, 15.0, 30.0, 45.0, 60.0, 75.0])
    canm_shared_dim: int = 2
    canm_domain_dim: int = 2
    canm_domains: int = 2
    canm_image_size: int = 8
    canm_hidden: int = 16
    canm_noise: float = 0.05
    canm_mixing_seed: int = 0
    canm_train_per_domain: int = 1000
    canm_test_per_domain: int = 500
    cache_dir: Optional[str] = None


@dataclass
class ProbeConfig:
    n_trees: int = 100
    max_depth: int = 12
    max_features: Optional[int] = None
    min_samples_split: int = 2


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    protocol: str = 'lodo'
    model_kind: str = 'nested'
    holdout_domain: Optional[int] = None
    sweep_domains: bool = False
    seeds: List[int] = field(default_factory=lambda: [0])
    out_dir: str = 'runs'
    change_pairs: int = 1000
    sufficiency_pairs: int = 1000

    @property
    def data_dir(self) -> str:
        return self.data.cache_dir or self.out_dir


_SECTIONS = {'data': DataConfig, 'model': ModelConfig, 'train': TrainConfig, 'probe': ProbeConfig}


def _build(cls, values: Dict[str, Any], where: str):
    if not isinstance(values, dict):
        raise ConfigError('section {!r} must be an object'.format(where))
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError('unknown key(s) in {}: {}'.format(where, ', '.join(unknown)))
    return cls(**values)


def config_from_dict(values: Dict[str, Any]) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from nested dicts; unknown keys are rejected."""
    values = dict(values)
    sections = {name: _build(cls, values.pop(name, {}), name) for name, cls in _SECTIONS.items()}
    cfg = _build(ExperimentConfig, values, 'experiment')
    for name, section in sections.items():
        setattr(cfg, name, section)
    cfg.model.image_shape = tuple(int(s) for s in cfg.model.image_shape)
    cfg.seeds = [int(s) for s in cfg.seeds]
    return cfg


def load_config(path: Optional[str]) -> ExperimentConfig:
    """
    Read an experiment file. ``None`` gives the defaults.

    :param path: path of a JSON experiment file.
    :type path: str, optional
    """
    if path is None:
        return ExperimentConfig()
    with open(path, 'r', encoding='utf-8') as fh:
        try:
            values = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError('{}: invalid JSON ({})'.format(path, exc)) from exc
    if not isinstance(values, dict):
        raise ConfigError('{}: top level must be an object'.format(path))
    logger.debug('loaded config %s', path)
    return config_from_dict(values)


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    out = dataclasses.asdict(cfg)
    out['model']['image_shape'] = list(cfg.model.image_shape)
    return out


def apply_overrides(cfg: ExperimentConfig,
                    seed: Optional[int] = None,
                    holdout_domain: Optional[int] = None,
                    sweep_domains: Optional[bool] = None,
                    model_kind: Optional[str] = None,
                    epochs: Optional[int] = None,
                    out_dir: Optional[str] = None,
                    protocol: Optional[str] = None) -> ExperimentConfig:
    """Apply command-line overrides in place and resolve derived defaults."""
    if seed is not None:
        cfg.seeds = [int(seed)]
        cfg.train.seed = int(seed)
    if holdout_domain is not None:
        cfg.holdout_domain = int(holdout_domain)
        cfg.sweep_domains = False
    if sweep_domains:
        cfg.sweep_domains = True
        cfg.holdout_domain = None
    if model_kind is not None:
        cfg.model_kind = model_kind
    if epochs is not None:
        cfg.train.epochs = int(epochs)
    if out_dir is not None:
        cfg.out_dir = out_dir
    if protocol is not None:
        cfg.protocol = protocol
    if cfg.train.beta_max is None:
        cfg.train.beta_max = DEFAULT_BETA_MAX.get(cfg.model_kind, 1.0)
    return cfg


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def validate(cfg: ExperimentConfig, n_domains: Optional[int] = None) -> ExperimentConfig:
    """
    Check every configuration invariant.

    :param n_domains: number of domains in the dataset, when known; used to range-check
        the held-out domain.
    """
    t, m, d = cfg.train, cfg.model, cfg.data
    _require(cfg.model_kind in MODEL_KINDS, 'model_kind must be one of {}'.format(MODEL_KINDS))
    _require(cfg.protocol in PROTOCOLS, 'protocol must be one of {}'.format(PROTOCOLS))
    _require(d.kind in ('rotated_mnist', 'canm'), 'data.kind must be rotated_mnist or canm')
    _require(m.architecture in ('mnist', 'dense'), 'model.architecture must be mnist or dense')
    _require(t.gamma >= 0 and t.lam >= 0, 'gamma and lam must be >= 0')
    _require(t.gamma + t.lam > 0, 'gamma + lam must be > 0')
    _require(t.beta_max is None or t.beta_max >= 0, 'beta_max must be >= 0')
    _require(t.beta_nest >= 0, 'beta_nest must be >= 0')
    _require(t.feed_mode in ('mu', 'z'), 'feed_mode must be mu or z')
    _require(t.pair_key in ('class', 'group'), 'pair_key must be class or group')
    _require(t.epochs >= 1 and t.batch_size >= 1, 'epochs and batch_size must be >= 1')
    _require(t.learning_rate >= 0, 'learning_rate must be >= 0')
    _require(0 <= t.warmup_fraction and 0 <= t.anneal_fraction
             and t.warmup_fraction + t.anneal_fraction <= 1,
             'warmup_fraction + anneal_fraction must lie in [0, 1]')
    _require(1 <= m.nested_latent_dim <= m.latent_dim,
             'nested_latent_dim must satisfy 1 <= d_s <= latent_dim')
    _require(len(m.image_shape) == 3, 'image_shape must be (C, H, W)')
    _require(len(cfg.seeds) > 0, 'seeds must be nonempty')
    _require(d.per_class >= 1, 'per_class must be >= 1')
    _require(d.canm_noise >= 0, 'canm_noise must be >= 0')
    if cfg.holdout_domain is not None:
        _require(cfg.holdout_domain >= 0, 'holdout_domain must be >= 0')
        if n_domains is not None:
            _require(cfg.holdout_domain < n_domains,
                     'holdout_domain {} not in dataset with {} domains'.format(cfg.holdout_domain, n_domains))
    return cfg
