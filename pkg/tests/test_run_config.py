"""
Test de la configuration d'exécution (YAML + surcharges)
"""

import pytest
import yaml

from config.run_config import RunConfig, apply_override, dump_config, load_config
from config.settings import DEFAULT_CONFIG_FILE
from src.utils.errors import ConfigurationError


def test_defaults_file_matches_dataclass_defaults():
    assert load_config(DEFAULT_CONFIG_FILE) == RunConfig()


def test_document_round_trip(tmp_path):
    config = load_config(None, ['train.base_lr=2e-4', 'csnet.strides=[1, 3]', 'eval.n_repeats=3'])
    path = dump_config(config, tmp_path / 'run.yaml')
    assert load_config(path) == config


def test_overrides_are_coerced():
    config = load_config(DEFAULT_CONFIG_FILE, ['train.base_lr=2e-4', 'csnet.n_divisions=8',
                                               'csnet.strides=[1, 2]', 'weights.lambda_var=0'])
    assert config.train.base_lr == pytest.approx(2e-4)
    assert isinstance(config.train.base_lr, float)
    assert config.train.csnet.n_divisions == 8
    assert config.train.csnet.strides == (1, 2)
    assert config.train.weights.lambda_var == 0.0


def test_override_wins_over_file(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(yaml.safe_dump({'train': {'max_epochs': 3}}))
    assert load_config(path).train.max_epochs == 3
    assert load_config(path, ['train.max_epochs=7']).train.max_epochs == 7


def test_unknown_keys_are_named():
    with pytest.raises(ConfigurationError, match="foo"):
        load_config(None, ['foo.bar=1'])
    with pytest.raises(ConfigurationError, match="train.foo"):
        load_config(None, ['train.foo=1'])
    with pytest.raises(ConfigurationError, match="csnet.depth"):
        load_config(None, ['csnet.depth=2'])


def test_invalid_values_raise_configuration_error():
    with pytest.raises(ConfigurationError):
        load_config(None, ['train.base_lr=0'])
    with pytest.raises(ConfigurationError):
        load_config(None, ['train.base_lr=fast'])
    with pytest.raises(ConfigurationError):
        load_config(None, ['train.supervised=maybe'])
    with pytest.raises(ConfigurationError):
        load_config(None, ['ablate.seeds=[]'])
    with pytest.raises(ConfigurationError, match="Exp.9"):
        load_config(None, ['ablate.experiments=["Exp.1", "Exp.9"]'])


def test_ablate_experiments_subset():
    assert load_config(None).ablate.experiments is None
    config = load_config(None, ['ablate.experiments=["Exp.1", "Exp.8"]'])
    assert config.ablate.experiments == ['Exp.1', 'Exp.8']


def test_malformed_overrides():
    document = {}
    for bad in ('train.base_lr', 'base_lr=1', 'a.b.c=1', '.x=1'):
        with pytest.raises(ConfigurationError):
            apply_override(document, bad)
    apply_override(document, '--summary.pooling=max')
    assert document == {'summary': {'pooling': 'max'}}


def test_missing_or_broken_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / 'absent.yaml')
    broken = tmp_path / 'broken.yaml'
    broken.write_text("train: [unclosed\n")
    with pytest.raises(ConfigurationError):
        load_config(broken)


def test_document_layout():
    document = RunConfig().to_dict()
    assert {'csnet', 'vaegan', 'weights', 'train', 'data', 'eval'} <= set(document)
    assert 'csnet' not in document['train']
    assert document['csnet']['strides'] == [1, 2, 4]


def test_data_paths(tmp_path):
    config = load_config(None, [f'data.output_dir={tmp_path}'])
    assert config.data.checkpoint_path == tmp_path / 'checkpoint'
