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
# Model checkpoints: a JSON manifest listing every layer (kind, activation,
# parameter names and shapes) with base64-encoded little-endian float64 blobs.
#
# ===============================================================================================


import base64
import collections
import dataclasses
import json
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from nestedvae.errors import FormatError

__all__ = [
    'CHECKPOINT_FORMAT',
    'CHECKPOINT_VERSION',
    'save_checkpoint',
    'load_checkpoint',
    'load_model',
]

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'nestedvae-checkpoint'
CHECKPOINT_VERSION = 1


def _encode(array: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(array, dtype='<f8').tobytes()).decode('ascii')


def _decode(blob: str, shape) -> np.ndarray:
    raw = base64.b64decode(blob.encode('ascii'))
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(raw) != expected:
        raise FormatError('parameter blob holds {} bytes, shape {} needs {}'.format(len(raw), shape, expected))
    return np.frombuffer(raw, dtype='<f8').astype(np.float64).reshape(shape)


def _as_dict(cfg) -> Optional[Dict[str, Any]]:
    if cfg is None:
        return None
    out = dataclasses.asdict(cfg) if dataclasses.is_dataclass(cfg) else dict(cfg)
    if 'image_shape' in out:
        out['image_shape'] = list(out['image_shape'])
    return out


def save_checkpoint(path: str, model, model_kind: str = 'nested', model_config=None, train_config=None,
                    extra: Optional[Dict[str, Any]] = None) -> None:
    """
    Write ``model`` to ``path``.

    :param model: any :class:`~nestedvae.layers.Module`.
    :param model_kind: ``nested`` or ``beta-vae``; used by :func:`load_model`.
    :param model_config: the :class:`~nestedvae.config.ModelConfig` the model was built from.
    :param train_config: the :class:`~nestedvae.config.TrainConfig` echo.
    :param extra: any JSON-serialisable stamp (resolved experiment config, seed, ...).
    """
    layers = []
    for name, module in model.named_modules():
        params = module.own_parameters()
        if not params:
            continue
        layers.append({
            'name': name,
            'kind': module.kind,
            'activation': getattr(module, 'activation', None),
            'parameters': [{'name': pname, 'shape': list(p.shape), 'data': _encode(p.data)}
                           for pname, p in params],
        })
    manifest = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'model_kind': model_kind,
        'model': _as_dict(model_config),
        'train': _as_dict(train_config),
        'extra': extra or {},
        'layers': layers,
    }
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(manifest, fh, indent=1)
    logger.info('wrote checkpoint %s (%d layers)', path, len(layers))


def load_checkpoint(path: str) -> Tuple['collections.OrderedDict[str, np.ndarray]', Dict[str, Any]]:
    """
    Read a checkpoint.

    :return: the state dict (keys as in :meth:`Module.named_parameters`) and the manifest
        without the parameter blobs.
    """
    with open(path, 'r', encoding='utf-8') as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError('{}: not a JSON checkpoint ({})'.format(path, exc)) from exc
    if not isinstance(manifest, dict) or manifest.get('format') != CHECKPOINT_FORMAT:
        raise FormatError('{}: not a {} file'.format(path, CHECKPOINT_FORMAT))
    if manifest.get('version') != CHECKPOINT_VERSION:
        raise FormatError('{}: unsupported checkpoint version {!r}'.format(path, manifest.get('version')))
    state = collections.OrderedDict()
    try:
        for layer in manifest['layers']:
            for param in layer['parameters']:
                key = '{}.{}'.format(layer['name'], param['name']) if layer['name'] else param['name']
                state[key] = _decode(param['data'], tuple(param['shape']))
            for param in layer['parameters']:
                del param['data']
    except (KeyError, TypeError) as exc:
        raise FormatError('{}: malformed layer entry ({})'.format(path, exc)) from exc
    return state, manifest


def load_model(path: str):
    """Rebuild the model recorded in a checkpoint and load its weights."""
    from nestedvae.config import ModelConfig, TrainConfig
    from nestedvae.models.architectures import build_model

    state, manifest = load_checkpoint(path)
    if manifest.get('model') is None:
        raise FormatError('{}: checkpoint carries no model config'.format(path))
    model_cfg = ModelConfig(**manifest['model'])
    model_cfg.image_shape = tuple(model_cfg.image_shape)
    train_cfg = TrainConfig(**(manifest.get('train') or {}))
    model = build_model(manifest.get('model_kind', 'nested'), model_cfg, train_cfg, np.random.default_rng(0))
    kinds = {name: module.kind for name, module in model.named_modules()}
    for layer in manifest['layers']:
        if kinds.get(layer['name']) != layer['kind']:
            raise FormatError('{}: layer {} is {!r} in the file but {!r} in the rebuilt model'.format(
                path, layer['name'], layer['kind'], kinds.get(layer['name'])))
    model.load_state_dict(state)
    logger.info('loaded %s model from %s', manifest.get('model_kind'), path)
    return model, manifest
