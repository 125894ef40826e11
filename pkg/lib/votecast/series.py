"""
Calendar-aligned daily series arithmetic.

Days are counted as integer Modified Julian Dates (MJD), so consecutive
calendar days differ by exactly one.  This module provides the dense
`DailySeries` container, sparse poll observations and three operations on
them::

    interpolate_daily(obs, end=None)
        Linear interpolation of sparse observations onto every day, holding
        the last value flat past the final observation when ``end`` is given.

    aggregate_window(series, w, anchors='tumbling')
        Trailing ``w``-day sums ending at each anchor day.

    decompose(series, period)
        Classical additive decomposition into trend, seasonal and residual.

All containers are immutable once built.
"""
from dataclasses import dataclass

import numpy as np
from astropy.time import Time

__all__ = ['COUNT', 'PERCENT', 'SeriesError', 'FewerThanTwoPoints',
           'NonMonotoneDates', 'WindowLargerThanSeries', 'SeriesTooShort',
           'day_from_iso', 'days_from_iso', 'day_to_iso', 'days_to_iso',
           'DailySeries', 'SparseObservations', 'Decomposition',
           'interpolate_daily', 'aggregate_window', 'decompose']

COUNT = 'count'
PERCENT = 'percent'
UNITS = (COUNT, PERCENT)

TUMBLING = 'tumbling'
ROLLING = 'rolling'
ANCHOR_MODES = (TUMBLING, ROLLING)

# Day arithmetic runs on TAI: a day is always 86400 s there, so no
# leap-second table is consulted when converting calendar dates.
_TIME_SCALE = 'tai'


class SeriesError(ValueError):
    pass


class FewerThanTwoPoints(SeriesError):
    pass


class NonMonotoneDates(SeriesError):
    pass


class WindowLargerThanSeries(SeriesError):
    pass


class SeriesTooShort(SeriesError):
    pass


def days_from_iso(texts):
    """
    Convert ISO-8601 calendar dates (``YYYY-MM-DD``) to integer MJD days.

    Parameters
    ----------
    texts : sequence of str

    Returns
    -------
    days : numpy.ndarray of int64

    Raises
    ------
    ValueError
        If any entry is not a calendar date.
    """
    texts = [str(t).strip() for t in texts]
    if not texts:
        return np.zeros(0, dtype=np.int64)
    for text in texts:
        # astropy happily accepts times of day too; inputs here are whole days
        if len(text) != 10:
            raise ValueError("Not an ISO calendar date: {!r}".format(text))
    mjd = Time(texts, format='iso', scale=_TIME_SCALE).mjd
    days = np.rint(mjd).astype(np.int64)
    if not np.allclose(mjd, days):
        raise ValueError("Dates must fall on whole days")
    return days


def day_from_iso(text):
    """
    >>> day_from_iso('2019-11-01')
    58788
    """
    return int(days_from_iso([text])[0])


def days_to_iso(days):
    """Convert integer MJD days back to ``YYYY-MM-DD`` strings."""
    days = np.asarray(days, dtype=np.int64)
    if days.size == 0:
        return []
    out = Time(days.astype(float), format='mjd',
               scale=_TIME_SCALE).to_value('iso', subfmt='date')
    return [str(s) for s in np.atleast_1d(out)]


def day_to_iso(day):
    """
    >>> day_to_iso(58788)
    '2019-11-01'
    """
    return days_to_iso([day])[0]


@dataclass(frozen=True, eq=False)
class DailySeries:
    """
    Dense daily values starting at MJD day ``start``.

    ``values[i]`` belongs to day ``start + i``.  Percent series are bounded
    to ``[0, 100]``.
    """
    start: int
    values: np.ndarray
    unit: str = COUNT

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise SeriesError("A daily series needs at least one value")
        if self.unit not in UNITS:
            raise SeriesError("Unknown unit {!r}; expected one of {}".format(
                self.unit, UNITS))
        if self.unit == PERCENT:
            if not np.all((values >= 0.0) & (values <= 100.0)):
                raise SeriesError("Percent values must lie in [0, 100]")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'start', int(self.start))

    def __len__(self):
        return self.values.size

    @property
    def end(self):
        """Last day covered (inclusive)."""
        return self.start + self.values.size - 1

    @property
    def days(self):
        return np.arange(self.start, self.end + 1, dtype=np.int64)

    def at(self, days):
        """Values at the given day(s); days outside the series raise."""
        idx = np.asarray(days, dtype=np.int64) - self.start
        if np.any(idx < 0) or np.any(idx >= self.values.size):
            raise SeriesError("Day outside series coverage")
        return self.values[idx]

    def between(self, first, last):
        """Sub-series over ``[first, last]`` (inclusive)."""
        if first < self.start or last > self.end or last < first:
            raise SeriesError("Range [{}, {}] outside [{}, {}]".format(
                first, last, self.start, self.end))
        return DailySeries(first,
                           self.values[first - self.start:last - self.start + 1],
                           self.unit)


@dataclass(frozen=True, eq=False)
class SparseObservations:
    """Dated percent observations (e.g. polls), dates strictly increasing."""
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = np.array(self.dates, dtype=np.int64).ravel()
        values = np.array(self.values, dtype=float).ravel()
        if dates.size != values.size:
            raise SeriesError("dates and values must be equal lengths")
        if dates.size > 1 and np.any(np.diff(dates) <= 0):
            raise NonMonotoneDates("Observation dates must be strictly increasing")
        if not np.all((values >= 0.0) & (values <= 100.0)):
            raise SeriesError("Observed values must lie in [0, 100]")
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, 'dates', dates)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.dates.size

    @property
    def first(self):
        return int(self.dates[0])

    @property
    def last(self):
        return int(self.dates[-1])


@dataclass(frozen=True, eq=False)
class Decomposition:
    """
    Additive decomposition ``observed = trend + seasonal + residual``.

    ``trend`` and ``residual`` are NaN where the centered moving average is
    undefined (the first and last half-window of days).
    """
    start: int
    period: int
    observed: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray

    @property
    def defined(self):
        """Mask of days where all three components are defined."""
        return ~np.isnan(self.trend)

    def reconstruct(self):
        return self.trend + self.seasonal + self.residual


def interpolate_daily(obs, end=None):
    """
    Linearly interpolate sparse observations onto every calendar day.

    Parameters
    ----------
    obs : SparseObservations
        At least two observations.
    end : int, optional
        Last day of the output.  Days past the final observation hold the
        last observed value flat.  Defaults to the last observation date.

    Returns
    -------
    series : DailySeries
        Percent series spanning ``[obs.first, end]``; observation days
        reproduce the observed values exactly.

    Examples
    --------
    >>> obs = SparseObservations([0, 30], [40.0, 43.0])
    >>> float(interpolate_daily(obs).at(10))
    41.0
    """
    if len(obs) < 2:
        raise FewerThanTwoPoints(
            "Interpolation needs at least 2 observations, got {}".format(len(obs)))
    if end is None:
        end = obs.last
    if end < obs.last:
        raise SeriesError("end ({}) precedes the last observation ({})".format(
            end, obs.last))
    days = np.arange(obs.first, end + 1, dtype=np.int64)
    # np.interp holds the right-hand value flat beyond the last knot
    values = np.interp(days, obs.dates, obs.values)
    return DailySeries(obs.first, values, PERCENT)


def aggregate_window(series, w, anchors=TUMBLING):
    """
    Trailing window sums.

    Each output value is the sum of the ``w`` days ending at (and including)
    its anchor day.  ``'tumbling'`` anchors sit at ``start + w - 1``,
    ``start + 2w - 1``, ...; ``'rolling'`` anchors are every day from
    ``start + w - 1`` on.

    Returns
    -------
    anchor_days, sums : numpy.ndarray

    Examples
    --------
    >>> s = DailySeries(0, [10, 20, 30, 40])
    >>> days, sums = aggregate_window(s, 2)
    >>> days.tolist(), sums.tolist()
    ([1, 3], [30.0, 70.0])
    """
    w = int(w)
    if w < 1:
        raise SeriesError("Window must be a positive number of days")
    if anchors not in ANCHOR_MODES:
        raise SeriesError("anchors must be one of {}".format(ANCHOR_MODES))
    n = len(series)
    if w > n:
        raise WindowLargerThanSeries(
            "Window of {} days exceeds the {}-day series".format(w, n))

    rolling = np.lib.stride_tricks.sliding_window_view(series.values, w).sum(axis=1)
    days = np.arange(series.start + w - 1, series.end + 1, dtype=np.int64)
    if anchors == TUMBLING:
        # tumbling sums are taken from the rolling ones so shared anchors agree
        return days[::w], rolling[::w]
    return days, rolling


def _centered_weights(period):
    if period % 2:
        return np.full(period, 1.0 / period)
    # even periods: 2 x period moving average
    weights = np.ones(period + 1)
    weights[0] = weights[-1] = 0.5
    return weights / period


def decompose(series, period):
    """
    Classical additive seasonal decomposition.

    The trend is the centered moving average of width ``period`` (the
    2 x ``period`` average for even periods); the seasonal component is the
    per-position mean of the detrended values, re-centered to zero mean over
    one cycle; the residual is what remains.

    Parameters
    ----------
    series : DailySeries
        At least ``2 * period`` days.
    period : int
        Season length in days.

    Returns
    -------
    result : Decomposition
    """
    period = int(period)
    if period < 1:
        raise SeriesError("period must be a positive number of days")
    values = np.asarray(series.values, dtype=float)
    n = values.size
    if n < 2 * period:
        raise SeriesTooShort(
            "Decomposition with period {} needs at least {} days, got {}".format(
                period, 2 * period, n))

    weights = _centered_weights(period)
    half = weights.size // 2
    trend = np.full(n, np.nan)
    trend[half:n - half] = np.convolve(values, weights, mode='valid')

    detrended = values - trend
    position = np.arange(n) % period
    means = np.array([np.nanmean(detrended[position == j]) for j in range(period)])
    means -= means.mean()
    seasonal = means[position]
    residual = values - trend - seasonal

    return Decomposition(series.start, period, values.copy(), trend, seasonal,
                         residual)
