"""
Deterministic synthetic benchmark: interaction tables calibrated to
published summary statistics and poll series linked to the interactions.

Interaction counts are drawn from log-normal distributions clipped to each
target's ``[min, max]`` range and rounded.  The log-normal parameters start
from the moment-matching values

    sigma**2 = log(1 + std**2 / mean**2),   mu = log(mean) - sigma**2 / 2

and are then refined with `scipy.optimize.least_squares` so that the clipped
draw itself has the target mean and standard deviation.

Poll shares follow a latent daily share

    base + trend * t + amplitude * sin(2 pi t / period)
         + weight * z(t) + noise(t)

where ``z`` is the standardized 7-day trailing volume of a driver feature,
sampled every ``cadence`` days.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import ingest
from . import series as ser
from .ingest import FeatureKind, Platform

__all__ = ['SynthError', 'InfeasibleTarget', 'FeatureStatTarget', 'LinkModel',
           'REFERENCE_TARGETS', 'BENCHMARK_START', 'BENCHMARK_DAYS',
           'BENCHMARK_LINKS', 'lognormal_params', 'calibrated_draw',
           'gen_interactions', 'latent_share', 'gen_polls', 'merge_polls',
           'gen_benchmark']

log = logging.getLogger(__name__)

BENCHMARK_START = '2019-11-01'
BENCHMARK_DAYS = 1158
DRIVER_WINDOW = 7
# standardized driver volume is clipped to this many standard deviations
DRIVER_CLIP = 3.0


class SynthError(ValueError):
    pass


class InfeasibleTarget(SynthError):
    pass


@dataclass(frozen=True)
class FeatureStatTarget:
    subject: str
    platform: Platform
    feature: FeatureKind
    min: float
    max: float
    mean: float
    std: float

    def __post_init__(self):
        object.__setattr__(self, 'platform', Platform(self.platform))
        object.__setattr__(self, 'feature', FeatureKind(self.feature))
        if self.feature not in ingest.PLATFORM_FEATURES[self.platform]:
            raise ingest.InvalidPlatformFeaturePair("{} has no {} feature".format(
                self.platform.value, self.feature.value))
        if self.min > self.max or self.std < 0:
            raise SynthError("Need min <= max and std >= 0")


def _targets(subject, rows):
    return tuple(FeatureStatTarget(subject, Platform(p), FeatureKind(f), *stats)
                 for p, f, stats in rows)


# Published per-active-day statistics of the two leading candidates.
# Instagram's "Share (comment)" column is stored under FeatureKind.SHARE.
REFERENCE_TARGETS = {
    'challenger': _targets('challenger', [
        ('twitter', 'post', (1, 22, 2.18, 1.62)),
        ('twitter', 'like', (1718, 450026, 45405.50, 53972.29)),
        ('twitter', 'retweet', (183, 65902, 5160.18, 6336.01)),
        ('twitter', 'reply', (114, 29884, 3377.89, 3927.55)),
        ('facebook', 'post', (1, 7, 1.86, 1.06)),
        ('facebook', 'like', (1200, 167000, 16372.40, 15350.86)),
        ('facebook', 'comment', (46, 27500, 2606.20, 2880.76)),
        ('facebook', 'share', (41, 12100, 1876.02, 1657.93)),
        ('instagram', 'post', (0, 5, 1.29, 0.59)),
        ('instagram', 'like', (0, 4724120, 485787.72, 426963.44)),
        ('instagram', 'share', (2310, 179820, 19601.68, 20457.15)),
    ]),
    'incumbent': _targets('incumbent', [
        ('twitter', 'post', (1, 257, 4.3, 7.23)),
        ('twitter', 'like', (9, 3241605, 61702.06, 116693.0)),
        ('twitter', 'retweet', (16, 1317198, 17086.71, 40882.07)),
        ('twitter', 'reply', (1, 110776, 4248.32, 7548.85)),
        ('facebook', 'post', (1, 18, 3.18, 2.47)),
        ('facebook', 'like', (3500, 689000, 72004.91, 74402.03)),
        ('facebook', 'comment', (46, 125000, 6895.86, 8897.32)),
        ('facebook', 'share', (59, 89900, 4633.98, 6316.15)),
        ('instagram', 'post', (1, 10, 1.73, 1.44)),
        ('instagram', 'like', (29169, 1969447, 333650.42, 292143.55)),
        ('instagram', 'share', (0, 191601, 6883.42, 11296.15)),
    ]),
}


@dataclass(frozen=True)
class LinkModel:
    """Latent poll-share model of one subject."""
    base_share: float
    trend_per_day: float = 0.0
    seasonal_amplitude: float = 0.0
    seasonal_period: float = 365.0
    interaction_weight: float = 0.0
    noise_std: float = 0.0
    driver: str = 'twitter.like'
    undecided_share: float = 0.0
    undecided_noise: float = 0.0

    def __post_init__(self):
        if self.noise_std < 0 or self.undecided_noise < 0:
            raise SynthError("Noise levels must be non-negative")
        if self.seasonal_period <= 0:
            raise SynthError("seasonal_period must be positive")
        if not 0.0 <= self.undecided_share <= 100.0:
            raise SynthError("undecided_share must lie in [0, 100]")
        try:
            ingest.parse_feature_label(self.driver)
        except ingest.IngestError as err:
            raise SynthError("Invalid driver: {}".format(err))

    @property
    def driver_key(self):
        return ingest.parse_feature_label(self.driver)


# monthly polls of a smooth latent share: no interaction term, no daily noise
BENCHMARK_LINKS = {
    'challenger': LinkModel(base_share=44.0, trend_per_day=0.003,
                            seasonal_amplitude=0.3, seasonal_period=365.0,
                            undecided_share=5.0, undecided_noise=0.5),
    'incumbent': LinkModel(base_share=47.0, trend_per_day=-0.003,
                           seasonal_amplitude=0.3, seasonal_period=365.0,
                           undecided_share=5.0, undecided_noise=0.5),
}


def lognormal_params(mean, std):
    """
    Moment-matching ``(mu, sigma)`` of a log-normal with the given mean and
    standard deviation.

    >>> mu, sigma = lognormal_params(1.0, 0.0)
    >>> float(mu), float(sigma)
    (0.0, 0.0)
    """
    sigma2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - 0.5 * sigma2, math.sqrt(sigma2)


def calibrated_draw(target, z):
    """
    Clipped, rounded log-normal values for ``target`` from the standard
    normal draw ``z``.

    Raises
    ------
    InfeasibleTarget
        If the target mean lies outside ``[min, max]``.
    """
    lo, hi = float(target.min), float(target.max)
    if not lo <= target.mean <= hi:
        raise InfeasibleTarget("{} {}.{}: mean {} outside [{}, {}]".format(
            target.subject, target.platform.value, target.feature.value,
            target.mean, lo, hi))
    if target.std == 0 or lo == hi:
        return np.full(z.size, np.clip(np.round(target.mean), lo, hi))
    if target.mean <= 0:
        return np.zeros(z.size)

    def draw(params):
        return np.clip(np.exp(params[0] + math.exp(params[1]) * z), lo, hi)

    def residuals(params):
        x = draw(params)
        return [(x.mean() - target.mean) / target.mean,
                (x.std() - target.std) / target.std]

    mu, sigma = lognormal_params(target.mean, target.std)
    start = np.array([mu, math.log(max(sigma, 1e-6))])
    fitted = optimize.least_squares(residuals, start, xtol=1e-10, ftol=1e-10)
    params = fitted.x if np.sum(np.square(fitted.fun)) < np.sum(np.square(residuals(start))) \
        else start
    return np.round(draw(params))


def gen_interactions(targets, days, seed, start=None):
    """
    Interaction table with one calibrated series per target.

    Every target gets its own random stream derived from ``seed``.
    Interactions on days without a post on their platform are zero.

    Parameters
    ----------
    targets : sequence of FeatureStatTarget
    days : int
        At least 30.
    seed : int
    start : int, optional
        First MJD day; `BENCHMARK_START` by default.

    Returns
    -------
    table : InteractionTable
    """
    days = int(days)
    if days < 30:
        raise SynthError("Generate at least 30 days")
    if start is None:
        start = ser.day_from_iso(BENCHMARK_START)
    targets = list(targets)
    streams = np.random.SeedSequence(int(seed)).spawn(len(targets))
    counts = {}
    for target, stream in zip(targets, streams):
        z = np.random.default_rng(stream).standard_normal(days)
        key = (ingest.normalize_subject(target.subject), target.platform, target.feature)
        if key in counts:
            raise SynthError("Duplicate target {}".format(key))
        counts[key] = calibrated_draw(target, z).astype(np.int64)

    for (subject, platform, feature), values in counts.items():
        if feature is FeatureKind.POST:
            continue
        posts = counts.get((subject, platform, FeatureKind.POST))
        if posts is not None:
            values[posts == 0] = 0
    log.debug("Generated %d interaction series over %d days", len(counts), days)
    return ingest.InteractionTable(start, counts)


def _driver_signal(values):
    trailing = np.convolve(values.astype(float), np.ones(DRIVER_WINDOW))[:values.size]
    spread = trailing.std()
    if spread == 0:
        return np.zeros(values.size)
    return np.clip((trailing - trailing.mean()) / spread, -DRIVER_CLIP, DRIVER_CLIP)


def latent_share(link, interactions, subject, seed=0):
    """Latent daily share of ``subject`` over the interaction range."""
    platform, feature = link.driver_key
    driver = interactions.counts(subject, platform, feature)
    t = np.arange(driver.size, dtype=float)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, link.noise_std, t.size) if link.noise_std else 0.0
    share = (link.base_share + link.trend_per_day * t
             + link.seasonal_amplitude * np.sin(2.0 * np.pi * t / link.seasonal_period)
             + link.interaction_weight * _driver_signal(driver) + noise)
    return np.clip(share, 0.0, 100.0)


def gen_polls(link, interactions, subject, poll_cadence_days, seed):
    """
    Poll book of one subject sampled from its latent share.

    Polls fall on days ``0, cadence, 2 * cadence, ...`` of the interaction
    range.  The undecided series is ``undecided_share`` plus noise, clipped
    so the day's total stays within 100.

    Raises
    ------
    UnknownSubject
    """
    cadence = int(poll_cadence_days)
    if cadence < 1:
        raise SynthError("Poll cadence must be at least 1 day")
    if subject not in interactions:
        raise ingest.UnknownSubject("No interactions for subject {!r}".format(subject))
    share_seed, undecided_seed = np.random.SeedSequence(int(seed)).spawn(2)
    share = latent_share(link, interactions, subject, share_seed)
    offsets = np.arange(0, share.size, cadence)
    values = share[offsets]
    rng = np.random.default_rng(undecided_seed)
    undecided = link.undecided_share + (
        rng.normal(0.0, link.undecided_noise, offsets.size) if link.undecided_noise else 0.0)
    undecided = np.clip(undecided, 0.0, 100.0 - values)
    dates = interactions.start + offsets
    return ingest.PollBook({subject: ser.SparseObservations(dates, values)},
                           ser.SparseObservations(dates, undecided))


def merge_polls(books):
    """
    Combine single-subject poll books sharing one poll calendar.

    The undecided share is the mean of the books' undecided series, clipped
    so that every day's total stays within 100.
    """
    books = list(books)
    observations = {}
    for book in books:
        for subject in book.subjects:
            if subject in observations:
                raise SynthError("{!r} appears in two poll books".format(subject))
            observations[subject] = book.observations(subject)
    undecided = [b.undecided for b in books if b.undecided is not None]
    if not undecided:
        return ingest.PollBook(observations)
    dates = undecided[0].dates
    if any(not np.array_equal(u.dates, dates) for u in undecided) or any(
            not np.array_equal(o.dates, dates) for o in observations.values()):
        raise SynthError("Poll books must share one poll calendar")
    room = 100.0 - np.sum([o.values for o in observations.values()], axis=0)
    level = np.mean([u.values for u in undecided], axis=0)
    return ingest.PollBook(observations,
                           ser.SparseObservations(dates, np.clip(level, 0.0,
                                                                 np.maximum(room, 0.0))))


def gen_benchmark(days=BENCHMARK_DAYS, seed=7, cadence=30, start=None,
                  targets=None, links=None):
    """
    Two-candidate benchmark: calibrated interactions and linked polls.

    Returns
    -------
    interactions, polls : InteractionTable, PollBook
    """
    targets = REFERENCE_TARGETS if targets is None else targets
    links = BENCHMARK_LINKS if links is None else links
    if start is None:
        start = ser.day_from_iso(BENCHMARK_START)
    all_targets = [t for subject in sorted(targets) for t in targets[subject]]
    table = gen_interactions(all_targets, days, seed, start)
    seeds = np.random.SeedSequence([int(seed), 1]).generate_state(len(links))
    books = [gen_polls(links[subject], table, subject, cadence, int(s))
             for subject, s in zip(sorted(links), seeds)]
    log.info("Benchmark: %d days, %d subjects, seed %d", days, len(links), seed)
    return table, merge_polls(books)
