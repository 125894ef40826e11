import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from votecast import series as ser


@pytest.mark.parametrize('text, day', [
    ('2019-11-01', 58788),
    ('2020-02-29', 58908),
    ('2023-01-01', 59945),
])
def test_day_from_iso(text, day):
    assert ser.day_from_iso(text) == day
    assert ser.day_to_iso(day) == text


def test_consecutive_days_differ_by_one():
    days = ser.days_from_iso(['2019-12-31', '2020-01-01', '2020-01-02'])
    assert_array_equal(np.diff(days), [1, 1])


@pytest.mark.parametrize('text', ['2020-13-01', '2020-01-01 12:00', 'yesterday'])
def test_bad_dates(text):
    with pytest.raises(ValueError):
        ser.day_from_iso(text)


class TestDailySeries:
    def setup_class(self):
        self.s = ser.DailySeries(100, [1, 2, 3, 4, 5])

    def test_coverage(self):
        assert len(self.s) == 5
        assert self.s.end == 104
        assert_array_equal(self.s.days, [100, 101, 102, 103, 104])

    def test_at(self):
        assert_array_equal(self.s.at([100, 104]), [1.0, 5.0])
        with pytest.raises(ser.SeriesError):
            self.s.at(105)

    def test_between(self):
        sub = self.s.between(101, 103)
        assert sub.start == 101
        assert_array_equal(sub.values, [2, 3, 4])
        with pytest.raises(ser.SeriesError):
            self.s.between(99, 103)

    def test_read_only(self):
        with pytest.raises(ValueError):
            self.s.values[0] = 10


def test_percent_bounds():
    with pytest.raises(ser.SeriesError):
        ser.DailySeries(0, [50.0, 101.0], ser.PERCENT)


def test_interpolate_daily():
    obs = ser.SparseObservations([0, 30], [40.0, 43.0])
    daily = ser.interpolate_daily(obs)
    assert len(daily) == 31
    assert daily.unit == ser.PERCENT
    assert_allclose(daily.at([0, 10, 15, 30]), [40.0, 41.0, 41.5, 43.0])


def test_interpolate_holds_last_value():
    obs = ser.SparseObservations([0, 10], [40.0, 42.0])
    daily = ser.interpolate_daily(obs, end=15)
    assert daily.end == 15
    assert_allclose(daily.values[10:], 42.0)


def test_interpolate_needs_two_points():
    with pytest.raises(ser.FewerThanTwoPoints):
        ser.interpolate_daily(ser.SparseObservations([0], [40.0]))


def test_observations_must_increase():
    with pytest.raises(ser.NonMonotoneDates):
        ser.SparseObservations([0, 10, 10], [1.0, 2.0, 3.0])


@pytest.mark.parametrize('w, days, sums', [
    (1, [0, 1, 2, 3, 4, 5], [1, 2, 3, 4, 5, 6]),
    (2, [1, 3, 5], [3, 7, 11]),
    (3, [2, 5], [6, 15]),
    (4, [3], [10]),
    (6, [5], [21]),
])
def test_tumbling_windows(w, days, sums):
    s = ser.DailySeries(0, [1, 2, 3, 4, 5, 6])
    anchors, values = ser.aggregate_window(s, w)
    assert_array_equal(anchors, days)
    assert_allclose(values, sums)


def test_rolling_windows():
    s = ser.DailySeries(10, [1, 2, 3, 4])
    anchors, values = ser.aggregate_window(s, 2, ser.ROLLING)
    assert_array_equal(anchors, [11, 12, 13])
    assert_allclose(values, [3, 5, 7])


def test_tumbling_is_subset_of_rolling():
    s = ser.DailySeries(0, np.arange(50) ** 2)
    tdays, tsums = ser.aggregate_window(s, 7, ser.TUMBLING)
    rdays, rsums = ser.aggregate_window(s, 7, ser.ROLLING)
    idx = np.searchsorted(rdays, tdays)
    assert_array_equal(rdays[idx], tdays)
    assert_allclose(rsums[idx], tsums)


def test_window_larger_than_series():
    with pytest.raises(ser.WindowLargerThanSeries):
        ser.aggregate_window(ser.DailySeries(0, [1, 2, 3]), 4)


def test_decompose_recovers_components():
    t = np.arange(120)
    seasonal = np.tile([1.0, -1.0, 2.0, -2.0], 30)
    values = 10.0 + 0.5 * t + seasonal
    result = ser.decompose(ser.DailySeries(0, values), 4)
    ok = result.defined
    assert ok.sum() == 120 - 4
    assert_allclose(result.trend[ok], (10.0 + 0.5 * t)[ok], atol=1e-9)
    assert_allclose(result.seasonal, seasonal, atol=1e-9)
    assert_allclose(result.residual[ok], 0.0, atol=1e-9)
    assert_allclose(result.reconstruct()[ok], values[ok])


def test_decompose_odd_period():
    values = 3.0 + np.tile([0.0, 1.0, -1.0], 10)
    result = ser.decompose(ser.DailySeries(0, values), 3)
    assert np.isnan(result.trend[0]) and np.isnan(result.trend[-1])
    assert_allclose(result.trend[1:-1], 3.0)
    assert_allclose(result.seasonal.reshape(-1, 3).sum(axis=1), 0.0, atol=1e-12)


def test_decompose_too_short():
    with pytest.raises(ser.SeriesTooShort):
        ser.decompose(ser.DailySeries(0, np.ones(59)), 30)


def test_decompose_weekly_sine():
    t = np.arange(70)
    wave = np.sin(2 * np.pi * t / 7)
    result = ser.decompose(ser.DailySeries(0, 10.0 + wave), 7)
    assert_allclose(result.trend[result.defined], 10.0, atol=1e-9)
    assert_allclose(result.seasonal, wave, atol=1e-9)
    assert np.abs(result.seasonal).max() == pytest.approx(1.0, rel=0.05)
