import json

import numpy as np
import pytest

from nestedvae.config import TrainConfig
from nestedvae.errors import FormatError
from nestedvae.models import build_beta_vae, build_nested_vae, embed
from nestedvae.utils import CHECKPOINT_FORMAT, load_checkpoint, load_model, save_checkpoint


@pytest.fixture
def model(rng, toy_model_config):
    return build_nested_vae(toy_model_config, TrainConfig(gamma=0.7, lam=0.3), rng)


@pytest.fixture
def saved(tmp_path, model, toy_model_config):
    path = str(tmp_path / 'checkpoint.json')
    save_checkpoint(path, model, 'nested', toy_model_config, TrainConfig(gamma=0.7, lam=0.3),
                    extra={'seed': 5})
    return path


class TestCheckpoint:
    def test_bit_exact(self, saved, model):
        state, manifest = load_checkpoint(saved)
        expected = model.state_dict()
        assert list(state) == list(expected)
        for name, value in expected.items():
            assert value.tobytes() == state[name].tobytes(), name
        assert manifest['extra'] == {'seed': 5}
        assert manifest['model_kind'] == 'nested'
        assert all('data' not in p for layer in manifest['layers'] for p in layer['parameters'])

    def test_load_model(self, saved, model, toy_dataset):
        loaded, manifest = load_model(saved)
        assert loaded.gamma == 0.7 and loaded.lam == 0.3
        np.testing.assert_array_equal(embed(loaded, toy_dataset.images), embed(model, toy_dataset.images))
        np.testing.assert_array_equal(embed(loaded, toy_dataset.images, 'outer'),
                                      embed(model, toy_dataset.images, 'outer'))

    def test_beta_vae(self, tmp_path, rng, toy_model_config, toy_dataset):
        base = build_beta_vae(toy_model_config, rng)
        path = str(tmp_path / 'beta.json')
        save_checkpoint(path, base, 'beta-vae', toy_model_config)
        loaded, _ = load_model(path)
        np.testing.assert_array_equal(loaded.embed(toy_dataset.images), base.embed(toy_dataset.images))

    def test_kind_mismatch(self, tmp_path, model, toy_model_config):
        path = str(tmp_path / 'wrong.json')
        save_checkpoint(path, model, 'beta-vae', toy_model_config)
        with pytest.raises(FormatError):
            load_model(path)

    @pytest.mark.parametrize('content', [
        'not json',
        json.dumps({'format': 'something-else', 'version': 1}),
        json.dumps({'format': CHECKPOINT_FORMAT, 'version': 99, 'layers': []}),
        json.dumps({'format': CHECKPOINT_FORMAT, 'version': 1, 'layers': [{'name': 'x'}]}),
    ])
    def test_rejects_bad_files(self, tmp_path, content):
        path = tmp_path / 'bad.json'
        path.write_text(content)
        with pytest.raises(FormatError):
            load_checkpoint(str(path))

    def test_truncated_blob(self, saved):
        with open(saved) as fh:
            manifest = json.load(fh)
        manifest['layers'][0]['parameters'][0]['data'] = 'AAAA'
        with open(saved, 'w') as fh:
            json.dump(manifest, fh)
        with pytest.raises(FormatError):
            load_checkpoint(saved)

    def test_without_model_config(self, tmp_path, model):
        path = str(tmp_path / 'bare.json')
        save_checkpoint(path, model)
        with pytest.raises(FormatError):
            load_model(path)
