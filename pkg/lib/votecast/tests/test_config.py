import json
import warnings

import pytest

from votecast import arimax, config
from votecast.config import ConfigError, load_config
from votecast.ingest import FeatureSet
from votecast.regressors import RegressorKind


def test_defaults():
    cfg = load_config(environ={})
    assert cfg.windows == [1, 2, 3, 4, 5, 6, 7, 14, 21, 28]
    assert cfg.models == ['arimax', 'linear', 'forest', 'boosting']
    assert cfg.feature_set_list == [FeatureSet.TWITTER, FeatureSet.FACEBOOK,
                                    FeatureSet.INSTAGRAM, FeatureSet.ALL]
    assert cfg.anchors == 'tumbling'
    assert cfg.initial_train_fraction == 0.8
    assert cfg.max_train_rows is None
    assert cfg.seed == 0
    assert cfg.output_dir == '.'
    assert not cfg.deterministic
    # one process per CPU
    assert cfg.processes == 0
    assert set(cfg) == set(config.FIELDS)


def test_attribute_access():
    cfg = load_config(environ={})
    with pytest.raises(AttributeError):
        cfg.colour


def test_file_then_overrides(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'windows': [7], 'seed': 5, 'per_post': True,
                                'subjects': ['  Alpha   Beta ']}))
    cfg = load_config(str(path), overrides={'windows': None, 'seed': 9})
    assert cfg.windows == [7]
    assert cfg.seed == 9
    assert cfg.per_post is True
    assert cfg.subjects == ['Alpha Beta']


@pytest.mark.parametrize('overrides, environ, seed', [
    ({}, {config.SEED_ENV: '12'}, 12),
    ({'seed': 3}, {config.SEED_ENV: '12'}, 3),
    ({}, {config.SEED_ENV: '  '}, 0),
])
def test_seed_from_environment(overrides, environ, seed):
    assert load_config(overrides=overrides, environ=environ).seed == seed


@pytest.mark.parametrize('overrides, field', [
    ({'colour': 'red'}, 'colour'),
    ({'anchors': 'sliding'}, 'anchors'),
    ({'seed': -1}, 'seed'),
    ({'refit_every': 0}, 'refit_every'),
    ({'days': 10}, 'days'),
    ({'windows': [0, 7]}, 'windows'),
    ({'models': ['svm']}, 'models'),
    ({'feature_sets': ['tiktok']}, 'feature_sets'),
    ({'initial_train_fraction': 1.0}, 'initial_train_fraction'),
    ({'forest_features': 'half'}, 'forest_features'),
    ({'boosting_features': 0.0}, 'boosting_features'),
])
def test_invalid_settings(overrides, field):
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=overrides, environ={})
    assert field in exc.value.fields


def test_every_problem_is_reported():
    with pytest.raises(ConfigError) as exc:
        load_config(overrides={'colour': 'red', 'anchors': 'sliding'}, environ={})
    assert set(exc.value.fields) == {'colour', 'anchors'}


@pytest.mark.parametrize('text', ['{"windows": [1,', '[1, 2]'])
def test_bad_config_file(tmp_path, text):
    path = tmp_path / 'run.json'
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(str(path), environ={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'nope.json'), environ={})


def test_model_builders():
    cfg = load_config(overrides={'models': ['linear', 'forest'], 'seed': 4,
                                 'forest_features': 0.5, 'forest_trees': 7},
                      environ={})
    models = cfg.model_map()
    assert list(models) == ['linear', 'forest']
    forest = models['forest']
    assert forest.kind is RegressorKind.RANDOM_FOREST
    assert (forest.tree_count, forest.feature_fraction, forest.seed) == (7, 0.5, 4)
    assert cfg.boosting_spec().feature_fraction == 1.0


def test_arimax_order():
    cfg = load_config(overrides={'arima_d': 1, 'arima_method': 'joint'}, environ={})
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        order = cfg.arimax_order()
    assert (order.p, order.d, order.q, order.method) == (0, 1, 1, 'joint')
    with pytest.warns(arimax.HighDifferencingWarning):
        assert list(load_config(environ={}).model_map())[0] == 'arimax'
