import os

import numpy as np
import pytest

from nestedvae.config import apply_overrides, load_config
from nestedvae.protocols import evaluate, train_all, write_datasets

pytestmark = pytest.mark.slow

CONFIG = os.path.join(os.path.dirname(__file__), os.pardir, 'configs', 'rotated_mnist.json')
MNIST_DIR = os.environ.get('NESTEDVAE_MNIST_DIR', 'data')
IMAGES = os.path.join(MNIST_DIR, 'train-images-idx3-ubyte.gz')
LABELS = os.path.join(MNIST_DIR, 'train-labels-idx1-ubyte.gz')

# the full schedule runs 100 epochs
EPOCHS = 30


def _mnist_available():
    return os.path.exists(IMAGES) and os.path.exists(LABELS)


needs_mnist = pytest.mark.skipif(not _mnist_available(),
                                 reason='MNIST IDX files not found; set NESTEDVAE_MNIST_DIR')


def _experiment(root, model_kind, protocol, sweep):
    cfg = load_config(CONFIG)
    cfg.data.images_path, cfg.data.labels_path = IMAGES, LABELS
    cfg.data.cache_dir = str(root / 'data')
    cfg.train.progress = False
    apply_overrides(cfg, model_kind=model_kind, epochs=EPOCHS, protocol=protocol,
                    sweep_domains=sweep, out_dir=str(root / '{}-{}'.format(protocol, model_kind)))
    if not os.path.exists(os.path.join(cfg.data_dir, 'train.nvds')):
        write_datasets(cfg)
    train_all(cfg)
    return evaluate(cfg)


@pytest.fixture(scope='module')
def root(tmp_path_factory):
    return tmp_path_factory.mktemp('rotated-mnist')


@needs_mnist
def test_nested_embeddings_forget_rotation(root):
    nested = _experiment(root, 'nested', 'lodo', sweep=True)
    baseline = _experiment(root, 'beta-vae', 'lodo', sweep=True)
    assert len(nested.seeds) >= 3

    nested_f1 = nested.domain_scores('rotation', 'macro_f1')
    baseline_f1 = baseline.domain_scores('rotation', 'macro_f1')
    assert sorted(nested_f1) == sorted(baseline_f1) == list(range(6))
    below = sum(nested_f1[k] < baseline_f1[k] for k in nested_f1)
    assert below >= 5

    assert nested.adjusted_parity['digit/macro_f1'] > baseline.adjusted_parity['digit/macro_f1']


@needs_mnist
def test_change_detection_beats_baseline(root):
    nested = _experiment(root, 'nested', 'change', sweep=False)
    baseline = _experiment(root, 'beta-vae', 'change', sweep=False)
    assert len(nested.seeds) >= 3
    assert nested.change_detection_accuracy >= 0.65
    assert nested.change_detection_accuracy > baseline.change_detection_accuracy
    assert np.isfinite(baseline.change_detection_accuracy)
