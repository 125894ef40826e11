"""
Error metrics, augmented walk-forward evaluation and the model grid.

`walk_forward` trains on the first part of a `~votecast.ingest.ModelDataset`,
predicts the next row, appends that row to the training data, refits and
repeats until the dataset is exhausted.  `run_grid` repeats this for every
(feature set, window, model) cell and collects the errors in an `EvalGrid`,
which reads and writes the CSV form::

    feature_set,window,model,mae,rmse,steps
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from astropy.table import Table

from . import arimax, ingest, mputil, regressors
from . import series as ser

__all__ = ['Metric', 'EvaluationError', 'LengthMismatch', 'EmptyInput',
           'DatasetTooSmall', 'DEFAULT_WINDOWS', 'MODEL_NAMES', 'mae', 'rmse',
           'StepRecord', 'WalkForwardResult', 'CellResult', 'EvalGrid',
           'FinalForecast', 'default_models', 'model_name', 'walk_forward',
           'run_grid', 'forecast_final']

log = logging.getLogger(__name__)

DEFAULT_WINDOWS = (1, 2, 3, 4, 5, 6, 7, 14, 21, 28)
MODEL_NAMES = ('arimax', 'linear', 'forest', 'boosting')
GRID_COLUMNS = ('feature_set', 'window', 'model', 'mae', 'rmse', 'steps')


class Metric(Enum):
    MAE = 'mae'
    RMSE = 'rmse'


class EvaluationError(ValueError):
    pass


class LengthMismatch(EvaluationError):
    pass


class EmptyInput(EvaluationError):
    pass


class DatasetTooSmall(EvaluationError):
    pass


def _pair(predicted, actual):
    predicted = np.asarray(predicted, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if predicted.size != actual.size:
        raise LengthMismatch("{} predictions for {} actual values".format(
            predicted.size, actual.size))
    if predicted.size == 0:
        raise EmptyInput("Metrics need at least one pair")
    return predicted, actual


def mae(predicted, actual):
    """
    Mean absolute error.

    >>> mae([1, 2, 3], [2, 2, 5])
    1.0
    """
    predicted, actual = _pair(predicted, actual)
    return float(np.mean(np.abs(predicted - actual)))


def rmse(predicted, actual):
    """Root mean squared error."""
    predicted, actual = _pair(predicted, actual)
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))


@dataclass(frozen=True)
class StepRecord:
    anchor: int
    predicted: float
    actual: float
    train_size: int


class WalkForwardResult(NamedTuple):
    steps: tuple
    mae: float
    rmse: float


@dataclass(frozen=True)
class CellResult:
    mae: float
    rmse: float
    steps: int


def default_models(forest=None, boosting=None, order=None):
    """Name -> model mapping of the four families with default settings."""
    return {'arimax': order if order is not None else arimax.ArimaxOrder(),
            'linear': regressors.RegressorSpec.linear(),
            'forest': forest if forest is not None else regressors.RegressorSpec.forest(),
            'boosting': (boosting if boosting is not None
                         else regressors.RegressorSpec.boosting())}


def model_name(model):
    """Grid name of a model; plain callables use their ``__name__``."""
    if isinstance(model, (arimax.ArimaxOrder, regressors.RegressorSpec)):
        return model.name
    return getattr(model, '__name__', 'custom')


def _min_train_rows(model, n_features):
    if isinstance(model, arimax.ArimaxOrder):
        # p + q + k + 1 < n - d
        return model.p + model.q + n_features + model.d + 2
    return 1


class _Predictor:
    """Fits ``model`` on a training slice and predicts rows ahead of it."""

    def __init__(self, model, processes=1):
        self.model = model
        self.processes = processes
        self.fitted = None

    def refit(self, X, y):
        if isinstance(self.model, arimax.ArimaxOrder):
            self.fitted = arimax.fit_arimax(y, X if X.shape[1] else None, self.model)
        elif isinstance(self.model, regressors.RegressorSpec):
            self.fitted = regressors.fit(X, y, self.model, self.processes)
        else:
            self.fitted = (X, y)

    def update(self, X, y):
        """Bring a stale fit up to date with the training history ``(X, y)``."""
        if isinstance(self.model, arimax.ArimaxOrder):
            self.fitted = arimax.extend(self.fitted, y, X if X.shape[1] else None)
        elif not isinstance(self.model, regressors.RegressorSpec):
            self.fitted = (X, y)

    def predict(self, X_ahead):
        """Prediction for the last of the rows ``X_ahead``."""
        if isinstance(self.model, arimax.ArimaxOrder):
            future = X_ahead if X_ahead.shape[1] else None
            return float(arimax.forecast(self.fitted, X_ahead.shape[0], future)[-1])
        if isinstance(self.model, regressors.RegressorSpec):
            return regressors.predict(self.fitted, X_ahead[-1])
        X, y = self.fitted
        return float(self.model(X, y, X_ahead[-1]))


def walk_forward(dataset, model, initial_train_fraction=0.8, horizon_steps=1,
                 max_train_rows=None, refit_every=1, processes=1):
    """
    Augmented out-of-sample evaluation of ``model`` on ``dataset``.

    The model is trained on the first ``ceil(fraction * n)`` rows and
    predicts the target ``horizon_steps`` rows ahead.  The next row is then
    appended to the training data and the model refitted, until every row
    has been predicted.

    Parameters
    ----------
    dataset : ModelDataset
    model : RegressorSpec, ArimaxOrder or callable
        A callable is called as ``model(X_train, y_train, x_next)`` and
        returns the prediction.
    initial_train_fraction : float
        In ``(0, 1)``.
    horizon_steps : int
        Rows between the last training row and the predicted row.
    max_train_rows : int, optional
        Keep only the most recent rows for training.
    refit_every : int
        Refit only every ``refit_every`` steps; in between, regressors keep
        their fit and ARIMAX keeps its coefficients with an updated state.
    processes : int
        Worker processes for growing forest trees; 0 or None for one per CPU.

    Returns
    -------
    result : WalkForwardResult
        ``(steps, mae, rmse)``.

    Raises
    ------
    DatasetTooSmall
    """
    if not 0.0 < initial_train_fraction < 1.0:
        raise EvaluationError("initial_train_fraction must lie in (0, 1)")
    if horizon_steps < 1 or refit_every < 1:
        raise EvaluationError("horizon_steps and refit_every must be at least 1")
    if max_train_rows is not None and max_train_rows < 1:
        raise EvaluationError("max_train_rows must be at least 1")

    X, y = dataset.features, dataset.targets
    n = len(dataset)
    start = int(math.ceil(initial_train_fraction * n))
    needed = _min_train_rows(model, X.shape[1])
    if max_train_rows is not None and max_train_rows < needed:
        raise DatasetTooSmall("max_train_rows={} is below the {} rows the model needs".format(
            max_train_rows, needed))
    if start < needed or start + horizon_steps > n:
        raise DatasetTooSmall(
            "{} rows: {} initial training rows (need {}) leave no step to predict".format(
                n, start, needed))

    predictor = _Predictor(model, processes)
    records = []
    for step, i in enumerate(range(start, n - horizon_steps + 1)):
        first = 0 if max_train_rows is None else max(0, i - max_train_rows)
        X_train, y_train = X[first:i], y[first:i]
        if step % refit_every == 0:
            predictor.refit(X_train, y_train)
        else:
            predictor.update(X_train, y_train)
        target = i + horizon_steps - 1
        pred = predictor.predict(X[i:target + 1])
        records.append(StepRecord(int(dataset.anchors[target]), pred,
                                  float(y[target]), i - first))
    log.debug("%s: %d walk-forward steps on %s/w=%d", model_name(model),
              len(records), dataset.feature_set.value, dataset.window)

    predicted = [r.predicted for r in records]
    actual = [r.actual for r in records]
    return WalkForwardResult(tuple(records), mae(predicted, actual),
                             rmse(predicted, actual))


class EvalGrid:
    """
    Walk-forward errors per ``(feature_set, window, model)`` cell.

    Cells whose dataset could not be assembled or evaluated are listed in
    ``absent`` with the reason instead.
    """

    def __init__(self, subject=None):
        self.subject = subject
        self.cells = {}
        self.absent = {}

    @staticmethod
    def _key(feature_set, window, model):
        return ingest.FeatureSet(feature_set), int(window), str(model)

    def add(self, feature_set, window, model, result):
        self.cells[self._key(feature_set, window, model)] = result

    def __getitem__(self, key):
        return self.cells[self._key(*key)]

    def __contains__(self, key):
        return self._key(*key) in self.cells

    def __len__(self):
        return len(self.cells)

    def keys(self):
        """Cell keys in report order."""
        fs_order = list(ingest.FeatureSet)

        def rank(key):
            fs, window, model = key
            m = MODEL_NAMES.index(model) if model in MODEL_NAMES else len(MODEL_NAMES)
            return fs_order.index(fs), window, m, model
        return sorted(self.cells, key=rank)

    def best(self, metric=Metric.MAE):
        """The cell key and result with the lowest ``metric``."""
        if not self.cells:
            raise EmptyInput("The grid has no cells")
        attr = Metric(metric).value
        key = min(self.keys(), key=lambda k: getattr(self.cells[k], attr))
        return key, self.cells[key]

    def to_table(self):
        keys = self.keys()
        return Table([[k[0].value for k in keys], [k[1] for k in keys],
                      [k[2] for k in keys],
                      [self.cells[k].mae for k in keys],
                      [self.cells[k].rmse for k in keys],
                      [self.cells[k].steps for k in keys]],
                     names=GRID_COLUMNS,
                     dtype=[str, np.int64, str, float, float, np.int64])

    def write(self, path):
        self.to_table().write(str(path), format='ascii.csv',
                              formats={'mae': '%.6f', 'rmse': '%.6f'},
                              overwrite=True)

    @classmethod
    def read(cls, path, subject=None):
        tab = Table.read(str(path), format='ascii.csv')
        if tuple(tab.colnames) != GRID_COLUMNS:
            raise EvaluationError("{} is not a grid file".format(path))
        grid = cls(subject)
        for row in tab:
            grid.add(str(row['feature_set']), int(row['window']), str(row['model']),
                     CellResult(float(row['mae']), float(row['rmse']),
                                int(row['steps'])))
        return grid


def _within_polls(dataset):
    return dataset.head(int(np.count_nonzero(~dataset.extended)))


def _run_cell(task):
    """Evaluate one grid cell; module level so it can run in a worker process."""
    (table, polls, subject, feature_set, window, name, model, options) = task
    try:
        dataset = ingest.assemble_dataset(table, polls, subject, feature_set,
                                          window, options['anchors'],
                                          options['per_post'])
        result = walk_forward(_within_polls(dataset), model,
                              options['initial_train_fraction'],
                              max_train_rows=options['max_train_rows'],
                              refit_every=options['refit_every'])
    except (ingest.IngestError, ser.SeriesError, EvaluationError,
            arimax.ArimaxError) as err:
        return feature_set, window, name, None, str(err)
    return (feature_set, window, name,
            CellResult(result.mae, result.rmse, len(result.steps)), None)


def run_grid(table, polls, subject, windows=DEFAULT_WINDOWS, feature_sets=None,
             models=None, anchors=ser.TUMBLING, per_post=False,
             initial_train_fraction=0.8, max_train_rows=None, refit_every=1,
             processes=1):
    """
    Walk-forward errors for every (feature set, window, model) combination.

    Only rows inside the poll span are evaluated.  Cells whose dataset
    cannot be built (for instance a window longer than the data) are
    recorded in `EvalGrid.absent` and skipped.

    Parameters
    ----------
    table : InteractionTable
    polls : PollBook
    subject : str
    windows : sequence of int
    feature_sets : sequence of FeatureSet, optional
        All four by default.
    models : mapping or sequence, optional
        ``name -> model`` mapping, or names taken from `default_models`.
    processes : int
        Worker processes; 1 runs in this process and 0 or None uses one per
        CPU.  Cells are spread over the pool.

    Returns
    -------
    grid : EvalGrid
    """
    if feature_sets is None:
        feature_sets = tuple(ingest.FeatureSet)
    if models is None:
        models = default_models()
    elif not isinstance(models, dict):
        defaults = default_models()
        try:
            models = {name: defaults[name] for name in models}
        except KeyError as err:
            raise EvaluationError("Unknown model {}".format(err))
    options = dict(anchors=anchors, per_post=per_post,
                   initial_train_fraction=initial_train_fraction,
                   max_train_rows=max_train_rows, refit_every=refit_every)
    tasks = [(table, polls, subject, ingest.FeatureSet(fs), int(w), name, model, options)
             for fs in feature_sets for w in windows
             for name, model in models.items()]
    pool_size = mputil.default_pool_size(len(tasks), processes)
    log.info("Evaluating %d grid cells for %s in %d process(es)", len(tasks),
             subject, pool_size)

    grid = EvalGrid(subject)
    for fs, w, name, result, reason in mputil.map_pool(_run_cell, tasks, pool_size):
        if result is None:
            log.warning("Skipping %s/w=%d/%s: %s", fs.value, w, name, reason)
            grid.absent[(fs, w, name)] = reason
        else:
            log.debug("%s/w=%d/%s: mae=%.6f rmse=%.6f", fs.value, w, name,
                      result.mae, result.rmse)
            grid.add(fs, w, name, result)
    return grid


@dataclass(frozen=True)
class FinalForecast:
    subject: str
    anchor: int
    predicted: float
    last_poll: float
    train_size: int
    horizon: int


def forecast_final(dataset, model, max_train_rows=None, processes=1):
    """
    Predict the target at the dataset's final anchor.

    The model is trained on rows inside the poll span (all rows but the
    last one when none is past the final poll) and forecasts forward to the
    final anchor; ARIMAX uses the intervening feature rows as future
    exogenous values.  The prediction is clipped to ``[0, 100]``.
    ``processes`` is passed on to forest fitting.
    """
    n = len(dataset)
    n_train = int(np.count_nonzero(~dataset.extended))
    if n_train >= n:
        n_train = n - 1
    first = 0 if max_train_rows is None else max(0, n_train - max_train_rows)
    if n_train - first < _min_train_rows(model, dataset.features.shape[1]):
        raise DatasetTooSmall("{} training rows are not enough to forecast {}".format(
            n_train - first, dataset.subject))
    predictor = _Predictor(model, processes)
    predictor.refit(dataset.features[first:n_train], dataset.targets[first:n_train])
    pred = predictor.predict(dataset.features[n_train:])
    return FinalForecast(dataset.subject, int(dataset.anchors[-1]),
                         float(np.clip(pred, 0.0, 100.0)),
                         float(dataset.targets[-1]), n_train - first, n - n_train)
