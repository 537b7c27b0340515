import numpy as np
import pytest

from nestedvae.autograd import Tensor, grad_check
from nestedvae.config import ModelConfig
from nestedvae.errors import ConfigError, DimensionError, UsageError
from nestedvae.layers import Flatten, Linear, Reshape, Sequential
from nestedvae.models import (
    BetaSchedule,
    GaussianEncoder,
    LatentGaussian,
    beta_at,
    beta_elbo_loss,
    build_beta_vae,
    encode,
    kl_std_normal,
    recon_mse,
    reparameterize,
)


class TestPosterior:
    def test_logvar_is_clamped(self, rng, toy_model_config):
        model = build_beta_vae(toy_model_config, rng)
        model.encoder.logvar_head.weight.data[...] = 100.0
        g = encode(model.encoder, np.ones((2, 1, 8, 8)))
        np.testing.assert_array_equal(g.logvar.data, np.full((2, 4), 10.0))

    def test_reparameterize(self):
        g = LatentGaussian(Tensor([[1.0, -1.0]]), Tensor([[0.0, np.log(4.0)]]))
        z = reparameterize(g, np.array([[0.5, 0.5]]))
        np.testing.assert_allclose(z.data, [[1.5, 0.0]])

    def test_sample_mean_matches_mu(self, rng):
        n = 100000
        mu, logvar = np.array([1.0, -2.0]), np.array([0.0, np.log(4.0)])
        g = LatentGaussian(Tensor(np.tile(mu, (n, 1))), Tensor(np.tile(logvar, (n, 1))))
        z = reparameterize(g, rng.standard_normal((n, 2))).data
        sigma = np.exp(0.5 * logvar)
        assert np.all(np.abs(z.mean(axis=0) - mu) < 3 * sigma / np.sqrt(n))

    def test_zero_noise_gives_the_mean(self):
        g = LatentGaussian(Tensor([[0.3, -0.7]]), Tensor([[1.5, -2.0]]))
        np.testing.assert_array_equal(reparameterize(g, np.zeros((1, 2))).data, [[0.3, -0.7]])

    def test_reparameterize_shape_mismatch(self):
        g = LatentGaussian(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
        with pytest.raises(DimensionError):
            reparameterize(g, np.zeros((2, 4)))

    def test_mismatched_heads(self):
        with pytest.raises(DimensionError):
            LatentGaussian(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 2))))


class TestKL:
    def test_standard_normal_is_zero(self):
        g = LatentGaussian(Tensor(np.zeros((3, 5))), Tensor(np.zeros((3, 5))))
        assert kl_std_normal(g).item() == 0.0

    def test_closed_form(self):
        g = LatentGaussian(Tensor([[1.0, 0.0]]), Tensor([[0.0, 1.0]]))
        expected = 0.5 * ((1 + 1 - 0 - 1) + (np.e + 0 - 1 - 1))
        np.testing.assert_allclose(kl_std_normal(g).item(), expected)

    def test_batch_mean(self):
        one = LatentGaussian(Tensor([[1.0, 2.0]]), Tensor([[0.5, -0.5]]))
        two = LatentGaussian(Tensor([[1.0, 2.0], [0.0, 0.0]]), Tensor([[0.5, -0.5], [0.0, 0.0]]))
        np.testing.assert_allclose(kl_std_normal(two).item(), kl_std_normal(one).item() / 2)

    def test_matches_monte_carlo(self, rng):
        d, samples = 10, 100000
        for _ in range(20):
            mu = rng.standard_normal(d)
            logvar = rng.uniform(-1.0, 1.0, size=d)
            closed = kl_std_normal(LatentGaussian(Tensor(mu[None]), Tensor(logvar[None]))).item()
            eps = rng.standard_normal((samples, d))
            z = mu + eps * np.exp(0.5 * logvar)
            log_q = np.sum(-0.5 * logvar - 0.5 * eps ** 2, axis=1)
            log_p = np.sum(-0.5 * z ** 2, axis=1)
            estimate = np.mean(log_q - log_p)
            assert abs(estimate - closed) / closed < 0.01


class TestLoss:
    def test_recon_mse(self):
        x_hat = Tensor(np.ones((2, 1, 2, 2)))
        np.testing.assert_allclose(recon_mse(x_hat, np.zeros((2, 1, 2, 2))).item(), 4.0)
        with pytest.raises(DimensionError):
            recon_mse(x_hat, np.zeros((2, 1, 2, 3)))

    def test_components_add_up(self, rng, toy_model_config):
        model = build_beta_vae(toy_model_config, rng)
        x = rng.uniform(size=(5, 1, 8, 8))
        total, parts = model.loss(x, 0.7, model.draw_noise(5, rng))
        np.testing.assert_allclose(parts['total'], parts['recon'] + 0.7 * parts['kl'])
        assert total.item() == parts['total']

    def test_negative_beta(self, rng, toy_model_config):
        model = build_beta_vae(toy_model_config, rng)
        with pytest.raises(UsageError):
            beta_elbo_loss(np.zeros((1, 1, 8, 8)), model.encoder, model.decoder, -1.0, np.zeros((1, 4)))

    def test_gradient_every_coordinate(self, rng):
        cfg = ModelConfig(architecture='dense', image_shape=(1, 8, 8), latent_dim=4, hidden_sizes=[6],
                          hidden_activation='sigmoid')
        model = build_beta_vae(cfg, rng)
        x = rng.uniform(size=(3, 1, 8, 8))
        eps = model.draw_noise(3, rng)
        loss_fn = lambda _: beta_elbo_loss(x, model.encoder, model.decoder, 0.5, eps)[0]
        assert grad_check(loss_fn, model.parameters(), h=1e-4) < 1e-4

    def test_matches_step_by_step_computation(self):
        gen = np.random.default_rng(12)
        encoder = GaussianEncoder(Sequential(Flatten(), Linear(4, 3, activation='relu')), Linear(3, 2), Linear(3, 2))
        decoder = Sequential(Linear(2, 4, activation='sigmoid'), Reshape((1, 2, 2)))
        for p in encoder.parameters() + decoder.parameters():
            p.data[...] = gen.uniform(-1.0, 1.0, size=p.shape)
        x = gen.uniform(size=(3, 1, 2, 2))
        eps = gen.standard_normal((3, 2))

        dense = lambda layer, v: v @ layer.weight.data + layer.bias.data
        flat = x.reshape(3, 4)
        h = np.maximum(dense(encoder.body.layers[1], flat), 0.0)
        mu, logvar = dense(encoder.mu_head, h), dense(encoder.logvar_head, h)
        z = mu + eps * np.exp(0.5 * logvar)
        x_hat = 1.0 / (1.0 + np.exp(-dense(decoder.layers[0], z)))
        recon = np.sum((x_hat - flat) ** 2) / 3
        kl = 0.5 * np.sum(np.exp(logvar) + mu ** 2 - logvar - 1.0) / 3

        loss, g, reconstruction = beta_elbo_loss(x, encoder, decoder, 0.6, eps)
        np.testing.assert_allclose(loss.item(), recon + 0.6 * kl, rtol=1e-12)
        np.testing.assert_allclose(g.mu.data, mu, rtol=1e-12)
        np.testing.assert_allclose(reconstruction.data, x_hat.reshape(x.shape), rtol=1e-12)
        # beta = 0 leaves the reconstruction term alone
        np.testing.assert_allclose(beta_elbo_loss(x, encoder, decoder, 0.0, eps)[0].item(), recon, rtol=1e-12)

    def test_embed_is_deterministic(self, rng, toy_model_config):
        model = build_beta_vae(toy_model_config, rng)
        x = rng.uniform(size=(3, 1, 8, 8))
        np.testing.assert_array_equal(model.embed(x), model.embed(x))
        assert model.embed(x).shape == (3, 4)


class TestSchedule:
    def test_reference_points(self):
        s = BetaSchedule(1.0, 100)
        assert beta_at(s, 0) == 0.0
        np.testing.assert_allclose(beta_at(s, 15), 0.5)
        assert beta_at(s, 30) == 1.0
        assert beta_at(s, 50) == 1.0
        np.testing.assert_allclose(beta_at(s, 99), 0.25)

    def test_anneal_is_monotone(self):
        s = BetaSchedule(4.0, 100)
        values = [beta_at(s, e) for e in range(70, 100)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        np.testing.assert_allclose(values[-1], 1.0)

    def test_no_warmup_no_anneal(self):
        s = BetaSchedule(2.0, 10, warmup_fraction=0.0, anneal_fraction=0.0)
        assert [beta_at(s, e) for e in range(10)] == [2.0] * 10

    def test_out_of_range(self):
        with pytest.raises(UsageError):
            beta_at(BetaSchedule(1.0, 10), 10)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            BetaSchedule(-1.0, 10)
        with pytest.raises(ConfigError):
            BetaSchedule(1.0, 10, warmup_fraction=0.8, anneal_fraction=0.5)
