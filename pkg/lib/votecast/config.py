"""
Run configuration: defaults, JSON config files, environment and flags.

Settings are merged from (lowest to highest precedence) the defaults in
`CONFIGSPEC`, a JSON config file, the ``VOTECAST_SEED`` environment variable
(seed only) and command-line flags, then validated against `CONFIGSPEC`
with configobj's validator.  All keys are flat; a key not in `CONFIGSPEC` is an
error.
"""
import json
import logging
import os

from configobj import ConfigObj, flatten_errors, get_extra_values

try:
    from configobj.validate import Validator
except ImportError:
    from validate import Validator

from . import arimax, ingest, regressors
from .evaluate import MODEL_NAMES

__all__ = ['ConfigError', 'CONFIGSPEC', 'FIELDS', 'SEED_ENV', 'RunConfig',
           'load_config']

log = logging.getLogger(__name__)

SEED_ENV = 'VOTECAST_SEED'

CONFIGSPEC = """
interactions = string(default=None)
polls = string(default=None)
subjects = string_list(default=list())
feature_sets = string_list(default=list('twitter', 'facebook', 'instagram', 'all'))
windows = int_list(default=list(1, 2, 3, 4, 5, 6, 7, 14, 21, 28))
models = string_list(default=list('arimax', 'linear', 'forest', 'boosting'))
anchors = option('tumbling', 'rolling', default='tumbling')
per_post = boolean(default=False)
initial_train_fraction = float(min=0.0, max=1.0, default=0.8)
max_train_rows = integer(min=1, default=None)
refit_every = integer(min=1, default=1)
seed = integer(min=0, default=None)
output_dir = string(default='.')
processes = integer(min=0, default=0)
deterministic = boolean(default=False)
forest_trees = integer(min=1, default=100)
forest_depth = integer(min=1, default=8)
forest_min_leaf = integer(min=1, default=2)
forest_features = string(default='sqrt')
forest_bootstrap = boolean(default=True)
boosting_stages = integer(min=1, default=100)
boosting_depth = integer(min=1, default=3)
boosting_min_leaf = integer(min=1, default=1)
boosting_learning_rate = float(min=0.0, max=1.0, default=0.1)
boosting_features = string(default='1.0')
arima_p = integer(min=0, default=0)
arima_d = integer(min=0, default=5)
arima_q = integer(min=0, default=1)
arima_method = option('profile', 'joint', default='profile')
days = integer(min=30, default=1158)
start_date = string(default='2019-11-01')
cadence = integer(min=1, default=30)
period = integer(min=1, default=30)
scenario = string(default=None)
builtin = boolean(default=False)
labels = string_list(default=list())
shares = string(default=None)
actual = string(default=None)
""".strip().splitlines()

FIELDS = tuple(line.split("=", 1)[0].strip() for line in CONFIGSPEC)

# numbers are accepted for these string fields
_FRACTION_FIELDS = ('forest_features', 'boosting_features')


class ConfigError(ValueError):
    """Invalid configuration; ``fields`` names every offending key."""

    def __init__(self, msg, fields=()):
        super().__init__(msg)
        self.fields = tuple(fields)


def _parse_fraction(name, value):
    if value == 'sqrt':
        return value
    try:
        fraction = float(value)
    except ValueError:
        raise ConfigError("{}: expected 'sqrt' or a number in (0, 1], got {!r}".format(
            name, value), (name,))
    if not 0.0 < fraction <= 1.0:
        raise ConfigError("{}: {} is outside (0, 1]".format(name, fraction), (name,))
    return fraction


class RunConfig(dict):
    """
    Validated settings with attribute access.

    >>> cfg = load_config(overrides={'windows': [1, 7]}, environ={})
    >>> cfg.windows, cfg.seed
    ([1, 7], 0)
    """

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)

    @property
    def feature_set_list(self):
        return [ingest.FeatureSet(fs) for fs in self.feature_sets]

    def forest_spec(self):
        return regressors.RegressorSpec.forest(
            tree_count=self.forest_trees, max_depth=self.forest_depth,
            min_samples_leaf=self.forest_min_leaf,
            feature_fraction=_parse_fraction('forest_features', self.forest_features),
            bootstrap=self.forest_bootstrap, seed=self.seed)

    def boosting_spec(self):
        return regressors.RegressorSpec.boosting(
            tree_count=self.boosting_stages, max_depth=self.boosting_depth,
            min_samples_leaf=self.boosting_min_leaf,
            learning_rate=self.boosting_learning_rate,
            feature_fraction=_parse_fraction('boosting_features',
                                             self.boosting_features),
            seed=self.seed)

    def arimax_order(self):
        return arimax.ArimaxOrder(self.arima_p, self.arima_d, self.arima_q,
                                  self.arima_method)

    def model_map(self):
        """Configured models keyed by grid name, in `MODEL_NAMES` order."""
        builders = {'arimax': self.arimax_order,
                    'linear': regressors.RegressorSpec.linear,
                    'forest': self.forest_spec,
                    'boosting': self.boosting_spec}
        return {name: builders[name]() for name in MODEL_NAMES if name in self.models}


def _read_json(path):
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError("Cannot read config file {}: {}".format(path, err))
    except json.JSONDecodeError as err:
        raise ConfigError("{} is not valid JSON: {}".format(path, err))
    if not isinstance(data, dict):
        raise ConfigError("{} must hold a JSON object".format(path))
    return data


def load_config(path=None, overrides=None, environ=None):
    """
    Build and validate a `RunConfig`.

    Parameters
    ----------
    path : str, optional
        JSON config file.
    overrides : dict, optional
        Values from command-line flags; None values are ignored.
    environ : mapping, optional
        Environment to read ``VOTECAST_SEED`` from; `os.environ` by default.

    Raises
    ------
    ConfigError
    """
    if environ is None:
        environ = os.environ
    data = {}
    if path:
        data.update((k, v) for k, v in _read_json(path).items() if v is not None)
    if overrides:
        data.update((k, v) for k, v in overrides.items() if v is not None)
    if 'seed' not in data and environ.get(SEED_ENV, '').strip():
        data['seed'] = environ[SEED_ENV].strip()
    for name in _FRACTION_FIELDS:
        if isinstance(data.get(name), (int, float)) and not isinstance(data[name], bool):
            data[name] = repr(float(data[name]))

    cfg = ConfigObj(data, configspec=CONFIGSPEC)
    result = cfg.validate(Validator(), preserve_errors=True)
    problems = []
    if result is not True:
        for sections, key, error in flatten_errors(cfg, result):
            name = '.'.join(sections + [key or '']).strip('.')
            problems.append((name, 'missing' if error is False else str(error)))
    for sections, name in get_extra_values(cfg):
        problems.append(('.'.join(list(sections) + [name]), 'unknown setting'))
    if problems:
        raise ConfigError('Invalid configuration: ' + '; '.join(
            '{}: {}'.format(k, v) for k, v in problems), [k for k, _ in problems])

    values = RunConfig(cfg.dict())
    _check(values)
    if values['seed'] is None:
        values['seed'] = 0
    log.debug("Configuration: %s", values)
    return values


def _check(values):
    bad = [w for w in values['windows'] if w < 1]
    if bad:
        raise ConfigError("windows: must be positive, got {}".format(bad), ('windows',))
    try:
        [ingest.FeatureSet(fs) for fs in values['feature_sets']]
    except ValueError as err:
        raise ConfigError("feature_sets: {}".format(err), ('feature_sets',))
    unknown = [m for m in values['models'] if m not in MODEL_NAMES]
    if unknown:
        raise ConfigError("models: unknown {}; expected names from {}".format(
            unknown, MODEL_NAMES), ('models',))
    if not 0.0 < values['initial_train_fraction'] < 1.0:
        raise ConfigError("initial_train_fraction: must lie strictly inside (0, 1)",
                          ('initial_train_fraction',))
    for name in _FRACTION_FIELDS:
        _parse_fraction(name, values[name])
    values['subjects'] = [ingest.normalize_subject(s) for s in values['subjects']]
