import numpy as np
import pytest

from nestedvae.config import ModelConfig, TrainConfig
from nestedvae.datasets import DomainDataset, write_idx


def make_domain_dataset(n_classes=3, n_domains=3, per_cell=4, size=8, seed=0):
    """Random [0, 1] images laid out domain -> class -> item."""
    rng = np.random.default_rng(seed)
    n = n_classes * n_domains * per_cell
    classes = np.tile(np.repeat(np.arange(n_classes), per_cell), n_domains)
    domains = np.repeat(np.arange(n_domains), n_classes * per_cell)
    return DomainDataset(rng.uniform(0.0, 1.0, size=(n, 1, size, size)), classes, domains)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def toy_dataset():
    return make_domain_dataset()


@pytest.fixture
def toy_model_config():
    return ModelConfig(architecture='dense',
                       image_shape=(1, 8, 8),
                       latent_dim=4,
                       nested_latent_dim=2,
                       hidden_sizes=[16],
                       nested_hidden=8,
                       hidden_activation='sigmoid',
                       output_activation='sigmoid')


@pytest.fixture
def toy_train_config():
    return TrainConfig(epochs=3, batch_size=8, seed=0, progress=False)


@pytest.fixture
def idx_files(tmp_path):
    """Tiny IDX image/label pair: 10 classes, 4 images of 8x8 each."""
    rng = np.random.default_rng(1)
    labels = np.repeat(np.arange(10, dtype=np.uint8), 4)
    images = rng.integers(0, 256, size=(labels.size, 8, 8)).astype(np.uint8)
    images_path = str(tmp_path / 'images-idx3-ubyte.gz')
    labels_path = str(tmp_path / 'labels-idx1-ubyte')
    write_idx(images_path, images)
    write_idx(labels_path, labels)
    return images_path, labels_path, images, labels

