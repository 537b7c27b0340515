import dataclasses

import numpy as np
import pytest

from nestedvae.config import TrainConfig
from nestedvae.datasets import DomainDataset
from nestedvae.errors import DataError, TrainingError
from nestedvae.models import LOSS_COMPONENTS, build_beta_vae, build_nested_vae
from nestedvae.train import BETA_VAE_COMPONENTS, evaluate_loss, init_generator, train, train_beta_vae

from conftest import make_domain_dataset


def _fresh(model_config, train_config, kind='nested'):
    rng = init_generator(train_config.seed)
    if kind == 'nested':
        return build_nested_vae(model_config, train_config, rng)
    return build_beta_vae(model_config, rng)


def _templated_dataset(seed=0):
    """One fixed binary-ish template per image plus small noise, spread over 3 domains."""
    ds = make_domain_dataset(seed=seed)
    gen = np.random.default_rng(seed)
    template = np.where(gen.uniform(size=(1, 1, 8, 8)) > 0.5, 0.9, 0.1)
    ds.images = np.clip(template + 0.02 * gen.standard_normal(ds.images.shape), 0.0, 1.0)
    return ds


class TestNestedTraining:
    def test_log_layout(self, toy_dataset, toy_model_config, toy_train_config, tmp_path):
        log = train(_fresh(toy_model_config, toy_train_config), toy_dataset, toy_train_config)
        assert len(log.epochs) == toy_train_config.epochs
        assert log.columns == ['epoch', 'beta'] + list(LOSS_COMPONENTS)
        assert log.column('epoch').tolist() == [0, 1, 2]
        assert np.isfinite(log.column('total')).all()
        assert log.initial_total is not None
        path = tmp_path / 'losses.csv'
        log.write_csv(str(path), stamp={'seed': 0})
        lines = path.read_text().splitlines()
        assert lines[0] == '# config: {"seed": 0}'
        assert lines[1].split(',') == log.columns
        assert len(lines) == 2 + toy_train_config.epochs

    def test_same_seed_same_run(self, toy_dataset, toy_model_config, toy_train_config):
        a = _fresh(toy_model_config, toy_train_config)
        b = _fresh(toy_model_config, toy_train_config)
        log_a = train(a, toy_dataset, toy_train_config)
        log_b = train(b, toy_dataset, toy_train_config)
        assert log_a.epochs == log_b.epochs
        np.testing.assert_array_equal(log_a.seen_indices, log_b.seen_indices)
        for (name, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
            assert np.array_equal(pa.data, pb.data), name

    def test_other_seed_other_run(self, toy_dataset, toy_model_config, toy_train_config):
        other = dataclasses.replace(toy_train_config, seed=1)
        log_a = train(_fresh(toy_model_config, toy_train_config), toy_dataset, toy_train_config)
        log_b = train(_fresh(toy_model_config, other), toy_dataset, other)
        assert log_a.epochs != log_b.epochs

    def test_excluded_domain_is_never_seen(self, toy_dataset, toy_model_config, toy_train_config):
        positions = np.flatnonzero(toy_dataset.domain_labels != 2)
        subset = toy_dataset.subset(positions)
        log = train(_fresh(toy_model_config, toy_train_config), subset, toy_train_config)
        assert log.seen_indices.size > 0
        assert log.seen_indices.max() < len(subset)
        assert not np.any(toy_dataset.domain_labels[positions[log.seen_indices]] == 2)

    def test_default_beta_max(self, toy_dataset, toy_model_config):
        config = TrainConfig(epochs=10, batch_size=18, progress=False)
        log = train(_fresh(toy_model_config, config), toy_dataset, config)
        beta = log.column('beta')
        assert beta.max() == 1.0
        assert beta[0] == 0.0
        assert beta[-1] == pytest.approx(0.25)

    def test_z_feed_mode(self, toy_dataset, toy_model_config, toy_train_config):
        config = dataclasses.replace(toy_train_config, feed_mode='z', beta_nest=0.5)
        log = train(_fresh(toy_model_config, config), toy_dataset, config)
        assert np.isfinite(log.column('kl_nested')).all()

    def test_group_pairing(self, toy_model_config, toy_train_config):
        ds = make_domain_dataset(n_classes=2, per_cell=3)
        ds.group_ids = np.tile(np.arange(6), 3)
        log = train(_fresh(toy_model_config, toy_train_config), ds, toy_train_config, pair_key='group')
        assert len(log.epochs) == toy_train_config.epochs

    def test_loss_decreases(self, toy_model_config):
        ds = _templated_dataset()
        config = TrainConfig(epochs=20, batch_size=8, learning_rate=0.01, progress=False)
        model = _fresh(toy_model_config, config)
        before = evaluate_loss(model, ds, beta=1.0, n_items=64, seed=11)
        train(model, ds, config)
        after = evaluate_loss(model, ds, beta=1.0, n_items=64, seed=11)
        assert after < 0.8 * before

    def test_non_finite_input(self, toy_dataset, toy_model_config, toy_train_config):
        toy_dataset.images[:] = np.nan
        with pytest.raises(TrainingError) as info:
            train(_fresh(toy_model_config, toy_train_config), toy_dataset, toy_train_config)
        assert (info.value.epoch, info.value.batch) == (0, 0)

    def test_needs_two_domains(self, toy_dataset, toy_model_config, toy_train_config):
        with pytest.raises(DataError):
            train(_fresh(toy_model_config, toy_train_config), toy_dataset.select_domains([1]), toy_train_config)
        empty = DomainDataset(np.zeros((0, 1, 8, 8)), [], [])
        with pytest.raises(DataError):
            train(_fresh(toy_model_config, toy_train_config), empty, toy_train_config)


class TestBetaVAETraining:
    def test_log_and_default_beta(self, toy_dataset, toy_model_config):
        config = TrainConfig(epochs=10, batch_size=12, progress=False)
        log = train_beta_vae(_fresh(toy_model_config, config, 'beta-vae'), toy_dataset, config)
        assert log.components == BETA_VAE_COMPONENTS
        assert log.column('beta').max() == 4.0
        # one shuffled pass per epoch visits every item
        np.testing.assert_array_equal(log.seen_indices, np.arange(len(toy_dataset)))

    def test_deterministic(self, toy_dataset, toy_model_config, toy_train_config):
        log_a = train_beta_vae(_fresh(toy_model_config, toy_train_config, 'beta-vae'), toy_dataset, toy_train_config)
        log_b = train_beta_vae(_fresh(toy_model_config, toy_train_config, 'beta-vae'), toy_dataset, toy_train_config)
        assert log_a.epochs == log_b.epochs


class TestEvaluateLoss:
    @pytest.mark.parametrize('kind', ['nested', 'beta-vae'])
    def test_repeatable_without_updates(self, kind, toy_dataset, toy_model_config, toy_train_config):
        model = _fresh(toy_model_config, toy_train_config, kind)
        state = {k: v.copy() for k, v in model.state_dict().items()}
        first = evaluate_loss(model, toy_dataset, beta=1.0, n_items=16, seed=3)
        assert evaluate_loss(model, toy_dataset, beta=1.0, n_items=16, seed=3) == first
        assert np.isfinite(first)
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(value, state[name])
