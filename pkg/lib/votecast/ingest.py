"""
Reading, validating and assembling the social-media and poll inputs.

Two CSV inputs are understood::

    interactions.csv    date,candidate,platform,feature,value
        Daily counts per candidate, platform and feature kind.  Only the
        platform/feature pairs listed in `PLATFORM_FEATURES` are valid.

    polls.csv           date,subject,share_pct
        Dated vote shares per subject.  The reserved subject
        ``__undecided__`` carries the undecided share.

Parsed inputs become an `InteractionTable` (dense over its date range, missing
cells filled with zero) and a `PollBook`.  `assemble_dataset` turns both into
a time-ordered `ModelDataset` for one subject, feature set and window.

Instagram's "Share (comment)" column of the published statistics is stored
under the ``share`` feature kind.
"""
import csv
import logging
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
from astropy.table import Table

from . import series as ser

__all__ = ['Platform', 'FeatureKind', 'FeatureSet', 'PLATFORM_FEATURES',
           'FEATURE_ORDER', 'UNDECIDED', 'IngestError', 'MalformedRow',
           'InvalidPlatformFeaturePair', 'NegativeCount', 'DuplicateCell',
           'ShareOutOfRange', 'NonMonotoneDates', 'SumExceeds100',
           'UnknownSubject', 'InsufficientOverlap', 'normalize_subject',
           'feature_label', 'parse_feature_label', 'InteractionTable',
           'PollBook', 'FeatureStats',
           'SummaryStats', 'ModelDataset', 'parse_interactions',
           'parse_polls', 'write_interactions', 'write_polls', 'describe',
           'assemble_dataset']

log = logging.getLogger(__name__)

INTERACTION_COLUMNS = ('date', 'candidate', 'platform', 'feature', 'value')
POLL_COLUMNS = ('date', 'subject', 'share_pct')
UNDECIDED = '__undecided__'
POLL_SUM_TOLERANCE = 0.5


class Platform(Enum):
    TWITTER = 'twitter'
    FACEBOOK = 'facebook'
    INSTAGRAM = 'instagram'


class FeatureKind(Enum):
    POST = 'post'
    LIKE = 'like'
    RETWEET = 'retweet'
    REPLY = 'reply'
    COMMENT = 'comment'
    SHARE = 'share'


# Feature order within each platform is fixed; datasets concatenate columns
# in exactly this order.
PLATFORM_FEATURES = {
    Platform.TWITTER: (FeatureKind.POST, FeatureKind.LIKE,
                       FeatureKind.RETWEET, FeatureKind.REPLY),
    Platform.FACEBOOK: (FeatureKind.POST, FeatureKind.LIKE,
                        FeatureKind.COMMENT, FeatureKind.SHARE),
    Platform.INSTAGRAM: (FeatureKind.POST, FeatureKind.LIKE,
                         FeatureKind.SHARE),
}

FEATURE_ORDER = tuple((p, f) for p, feats in PLATFORM_FEATURES.items()
                      for f in feats)


class FeatureSet(Enum):
    TWITTER = 'twitter'
    FACEBOOK = 'facebook'
    INSTAGRAM = 'instagram'
    ALL = 'all'

    @property
    def platforms(self):
        if self is FeatureSet.ALL:
            return tuple(Platform)
        return (Platform(self.value),)

    @property
    def features(self):
        return tuple((p, f) for p in self.platforms
                     for f in PLATFORM_FEATURES[p])


def feature_label(platform, feature):
    """
    >>> feature_label(Platform.TWITTER, FeatureKind.RETWEET)
    'twitter.retweet'
    """
    return '{}.{}'.format(platform.value, feature.value)


def parse_feature_label(label):
    """
    Inverse of `feature_label`.

    >>> parse_feature_label('facebook.share')
    (<Platform.FACEBOOK: 'facebook'>, <FeatureKind.SHARE: 'share'>)
    """
    try:
        platform, feature = str(label).strip().lower().split('.')
        platform, feature = Platform(platform), FeatureKind(feature)
    except ValueError:
        raise IngestError("Not a feature label: {!r}".format(label))
    if feature not in PLATFORM_FEATURES[platform]:
        raise InvalidPlatformFeaturePair("{} has no {} feature".format(
            platform.value, feature.value))
    return platform, feature


def normalize_subject(name):
    """Subject keys are compared with surrounding and repeated blanks removed."""
    key = ' '.join(str(name).split())
    if not key:
        raise IngestError("Empty subject name")
    return key


class IngestError(ValueError):
    """Base class for input validation failures; ``lineno`` may be None."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = 'line {}: {}'.format(lineno, msg)
        super().__init__(msg)
        self.lineno = lineno


class MalformedRow(IngestError):
    pass


class InvalidPlatformFeaturePair(IngestError):
    pass


class NegativeCount(IngestError):
    pass


class DuplicateCell(IngestError):
    pass


class ShareOutOfRange(IngestError):
    pass


class NonMonotoneDates(IngestError):
    pass


class SumExceeds100(IngestError):
    pass


class UnknownSubject(IngestError):
    pass


class InsufficientOverlap(IngestError):
    pass


#################
#
#
#               Containers
#
#################

class InteractionTable:
    """
    Daily interaction counts keyed by ``(subject, Platform, FeatureKind)``.

    Every series covers the same days ``[start, end]``.  Valid keys that were
    never observed for a known subject read as all-zero series.
    """

    def __init__(self, start, counts):
        self.start = int(start)
        self._counts = {}
        self._subjects = []
        n_days = None
        for (subject, platform, feature), values in counts.items():
            subject = normalize_subject(subject)
            platform, feature = Platform(platform), FeatureKind(feature)
            if feature not in PLATFORM_FEATURES[platform]:
                raise InvalidPlatformFeaturePair(
                    "{} has no {} feature".format(platform.value, feature.value))
            values = np.array(values, dtype=np.int64).ravel()
            if n_days is None:
                n_days = values.size
            elif values.size != n_days:
                raise IngestError("All interaction series must share one date range")
            if np.any(values < 0):
                raise NegativeCount("Negative count for {} {}".format(
                    subject, feature_label(platform, feature)))
            values.setflags(write=False)
            self._counts[(subject, platform, feature)] = values
            if subject not in self._subjects:
                self._subjects.append(subject)
        if not n_days:
            raise IngestError("An interaction table needs at least one day")
        self.n_days = n_days

    @property
    def end(self):
        return self.start + self.n_days - 1

    @property
    def subjects(self):
        return tuple(self._subjects)

    def keys(self):
        return list(self._counts)

    def __contains__(self, subject):
        return normalize_subject(subject) in self._subjects

    def _check_subject(self, subject):
        subject = normalize_subject(subject)
        if subject not in self._subjects:
            raise UnknownSubject("No interactions for subject {!r}".format(subject))
        return subject

    def counts(self, subject, platform, feature):
        """Raw daily counts as a read-only int64 array."""
        subject = self._check_subject(subject)
        platform, feature = Platform(platform), FeatureKind(feature)
        if feature not in PLATFORM_FEATURES[platform]:
            raise InvalidPlatformFeaturePair(
                "{} has no {} feature".format(platform.value, feature.value))
        try:
            return self._counts[(subject, platform, feature)]
        except KeyError:
            return np.zeros(self.n_days, dtype=np.int64)

    def series(self, subject, platform, feature):
        return ser.DailySeries(self.start, self.counts(subject, platform, feature),
                               ser.COUNT)


class PollBook:
    """
    Poll observations per subject plus an optional undecided series.

    On every poll date the subjects' shares plus the undecided share may not
    exceed 100 by more than `POLL_SUM_TOLERANCE` (published rounding).
    """

    def __init__(self, observations, undecided=None):
        self._obs = {}
        for subject, obs in observations.items():
            subject = normalize_subject(subject)
            if subject == UNDECIDED:
                raise IngestError("{} is reserved".format(UNDECIDED))
            self._obs[subject] = obs
        self.undecided = undecided
        self._check_totals()

    def _check_totals(self):
        totals = {}
        parts = list(self._obs.values())
        if self.undecided is not None:
            parts.append(self.undecided)
        for obs in parts:
            for day, value in zip(obs.dates.tolist(), obs.values.tolist()):
                totals[day] = totals.get(day, 0.0) + value
        for day in sorted(totals):
            if totals[day] > 100.0 + POLL_SUM_TOLERANCE:
                raise SumExceeds100("Shares on {} sum to {:.2f}".format(
                    ser.day_to_iso(day), totals[day]))

    @property
    def subjects(self):
        return tuple(self._obs)

    def __contains__(self, subject):
        return normalize_subject(subject) in self._obs

    def observations(self, subject):
        subject = normalize_subject(subject)
        try:
            return self._obs[subject]
        except KeyError:
            raise UnknownSubject("No polls for subject {!r}".format(subject))

    def latest(self, subject):
        """Most recent (day, share) for ``subject``."""
        obs = self.observations(subject)
        return obs.last, float(obs.values[-1])


@dataclass(frozen=True)
class FeatureStats:
    count: int
    min: float
    max: float
    mean: float
    std: float


class SummaryStats(dict):
    """Mapping ``(Platform, FeatureKind) -> FeatureStats`` for one subject."""

    def __init__(self, subject, stats):
        super().__init__(stats)
        self.subject = subject

    def rows(self):
        for (platform, feature), st in self.items():
            yield (self.subject, platform.value, feature.value, st.count,
                   st.min, st.max, st.mean, st.std)


@dataclass(frozen=True, eq=False)
class ModelDataset:
    """
    Time-ordered model rows for one subject, feature set and window.

    Row ``i`` holds the anchor day, the window sums ending at it and the
    interpolated poll share on that day.  ``extended[i]`` marks anchors past
    the last poll, whose target is the flat-held final poll value.
    """
    subject: str
    feature_set: FeatureSet
    window: int
    anchors: np.ndarray
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple
    extended: np.ndarray = None

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype=np.int64).ravel()
        features = np.array(self.features, dtype=float)
        targets = np.array(self.targets, dtype=float).ravel()
        names = tuple(self.feature_names)
        if features.ndim != 2:
            features = features.reshape(anchors.size, len(names))
        extended = (np.zeros(anchors.size, dtype=bool) if self.extended is None
                    else np.array(self.extended, dtype=bool).ravel())
        if not (anchors.size == targets.size == features.shape[0] == extended.size):
            raise IngestError("Dataset columns have different lengths")
        if features.shape[1] != len(names):
            raise IngestError("Feature width does not match feature names")
        if anchors.size > 1 and np.any(np.diff(anchors) <= 0):
            raise IngestError("Dataset rows must be strictly increasing in anchor")
        if not np.all((targets >= 0.0) & (targets <= 100.0)):
            raise IngestError("Targets must lie in [0, 100]")
        for name, arr in (('anchors', anchors), ('features', features),
                          ('targets', targets), ('extended', extended)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, 'feature_names', names)
        object.__setattr__(self, 'feature_set', FeatureSet(self.feature_set))
        object.__setattr__(self, 'window', int(self.window))

    def __len__(self):
        return self.anchors.size

    def head(self, n):
        """Dataset restricted to its first ``n`` rows."""
        return ModelDataset(self.subject, self.feature_set, self.window,
                            self.anchors[:n], self.features[:n],
                            self.targets[:n], self.feature_names,
                            self.extended[:n])

    def to_table(self):
        tab = Table()
        tab['anchor'] = ser.days_to_iso(self.anchors)
        for j, name in enumerate(self.feature_names):
            tab[name] = self.features[:, j]
        tab['target'] = self.targets
        tab['extended'] = self.extended.astype(np.int64)
        tab.meta['comments'] = ['subject={}'.format(self.subject),
                                'feature_set={}'.format(self.feature_set.value),
                                'window={}'.format(self.window)]
        return tab

    def write(self, path):
        """Write as CSV; floats use 17 significant digits so re-reading is exact."""
        tab = self.to_table()
        formats = {name: '%.17g' for name in self.feature_names}
        formats['target'] = '%.17g'
        tab.write(str(path), format='ascii.csv', formats=formats, overwrite=True,
                  comment='# ')

    @classmethod
    def read(cls, path):
        tab = Table.read(str(path), format='ascii.csv', comment='#')
        meta = dict(c.split('=', 1) for c in tab.meta.get('comments', [])
                    if '=' in c)
        names = [c for c in tab.colnames if c not in ('anchor', 'target', 'extended')]
        features = np.column_stack([np.asarray(tab[c], dtype=float) for c in names]) \
            if names else np.zeros((len(tab), 0))
        return cls(meta['subject'].strip(), FeatureSet(meta['feature_set'].strip()),
                   int(meta['window']), ser.days_from_iso(list(tab['anchor'])),
                   features, np.asarray(tab['target'], dtype=float), tuple(names),
                   np.asarray(tab['extended'], dtype=bool))


#################
#
#
#               Parsing
#
#################

_COUNT = re.compile(r'-?[0-9]+')
_SHARE = re.compile(r'-?[0-9]+(\.[0-9]{1,2})?')
_SAFE_NAME = re.compile(r'[^A-Za-z0-9_.-]+')


def _read_rows(path, columns):
    """Yield ``(lineno, fields)`` for every non-blank data row of a CSV file."""
    with open(path, encoding='utf-8', newline='') as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(columns):
            raise MalformedRow("missing or invalid header; expected '{}'".format(
                ','.join(columns)), lineno=1)
        for fields in reader:
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(columns):
                raise MalformedRow("expected {} fields, got {}".format(
                    len(columns), len(fields)), lineno=reader.line_num)
            yield reader.line_num, [f.strip() for f in fields]


def _parse_dates(rows):
    """Map every distinct date string in ``rows`` to its MJD day."""
    texts = sorted({fields[0] for _, fields in rows})
    try:
        return dict(zip(texts, ser.days_from_iso(texts).tolist()))
    except ValueError:
        pass
    for lineno, fields in rows:
        try:
            ser.day_from_iso(fields[0])
        except ValueError:
            raise MalformedRow("invalid date {!r}".format(fields[0]), lineno=lineno)
    raise MalformedRow("invalid dates")


def parse_interactions(path):
    """
    Parse and densify an interactions CSV file.

    Cells absent from the file are filled with 0 over the union date range.

    Raises
    ------
    MalformedRow, InvalidPlatformFeaturePair, NegativeCount, DuplicateCell
    """
    rows = list(_read_rows(path, INTERACTION_COLUMNS))
    if not rows:
        raise MalformedRow("no data rows", lineno=2)
    days = _parse_dates(rows)

    cells = {}
    for lineno, (date, candidate, platform, feature, value) in rows:
        try:
            platform = Platform(platform.lower())
            feature = FeatureKind(feature.lower())
        except ValueError:
            raise MalformedRow("unknown platform/feature {!r}/{!r}".format(
                platform, feature), lineno=lineno)
        if feature not in PLATFORM_FEATURES[platform]:
            raise InvalidPlatformFeaturePair(
                "{} has no {} feature".format(platform.value, feature.value),
                lineno=lineno)
        if not _COUNT.fullmatch(value):
            raise MalformedRow("value {!r} is not an integer".format(value),
                               lineno=lineno)
        count = int(value)
        if count < 0:
            raise NegativeCount("negative count {}".format(count), lineno=lineno)
        try:
            key = (normalize_subject(candidate), platform, feature)
        except IngestError:
            raise MalformedRow("empty candidate", lineno=lineno)
        cell = (days[date],) + key
        if cell in cells:
            raise DuplicateCell("duplicate row for {} {} {}".format(
                date, key[0], feature_label(platform, feature)), lineno=lineno)
        cells[cell] = count

    start = min(days.values())
    n_days = max(days.values()) - start + 1
    counts = {}
    for (day, subject, platform, feature), count in cells.items():
        key = (subject, platform, feature)
        if key not in counts:
            counts[key] = np.zeros(n_days, dtype=np.int64)
        counts[key][day - start] = count
    log.debug("Read %d interaction rows over %d days from %s", len(rows),
              n_days, path)
    return InteractionTable(start, counts)


def parse_polls(path):
    """
    Parse a polls CSV file into a `PollBook`.

    Raises
    ------
    MalformedRow, ShareOutOfRange, NonMonotoneDates, SumExceeds100
    """
    rows = list(_read_rows(path, POLL_COLUMNS))
    if not rows:
        raise MalformedRow("no data rows", lineno=2)
    days = _parse_dates(rows)

    points = {}
    for lineno, (date, subject, share) in rows:
        if not _SHARE.fullmatch(share):
            raise MalformedRow(
                "share {!r} is not a number with at most two decimals".format(share),
                lineno=lineno)
        value = float(share)
        if value < 0.0 or value > 100.0:
            raise ShareOutOfRange("share {} outside [0, 100]".format(share),
                                  lineno=lineno)
        try:
            subject = normalize_subject(subject)
        except IngestError:
            raise MalformedRow("empty subject", lineno=lineno)
        day = days[date]
        seen = points.setdefault(subject, [])
        if seen and day <= seen[-1][0]:
            raise NonMonotoneDates("dates for {!r} are not strictly increasing".format(
                subject), lineno=lineno)
        seen.append((day, value))

    def as_obs(pts):
        return ser.SparseObservations([d for d, _ in pts], [v for _, v in pts])

    undecided = points.pop(UNDECIDED, None)
    return PollBook({s: as_obs(p) for s, p in points.items()},
                    as_obs(undecided) if undecided else None)


def write_interactions(table, path):
    """Write every cell of ``table`` (zeros included) in the interactions CSV format."""
    dates, subjects, platforms, features, values = [], [], [], [], []
    iso = ser.days_to_iso(np.arange(table.start, table.end + 1))
    for i, date in enumerate(iso):
        for subject in table.subjects:
            for platform, feature in FEATURE_ORDER:
                dates.append(date)
                subjects.append(subject)
                platforms.append(platform.value)
                features.append(feature.value)
                values.append(int(table.counts(subject, platform, feature)[i]))
    tab = Table([dates, subjects, platforms, features, values],
                names=INTERACTION_COLUMNS)
    tab.write(str(path), format='ascii.csv', overwrite=True)


def write_polls(book, path):
    """Write ``book`` in the polls CSV format, shares with two decimals."""
    rows = []
    named = [(s, book.observations(s)) for s in book.subjects]
    if book.undecided is not None:
        named.append((UNDECIDED, book.undecided))
    for subject, obs in named:
        rows.extend((int(d), subject, float(v))
                    for d, v in zip(obs.dates, obs.values))
    rows.sort(key=lambda r: r[0])
    tab = Table([ser.days_to_iso([r[0] for r in rows]), [r[1] for r in rows],
                 [r[2] for r in rows]], names=POLL_COLUMNS)
    tab.write(str(path), format='ascii.csv', formats={'share_pct': '%.2f'},
              overwrite=True)


#################
#
#
#               Statistics and datasets
#
#################

def describe(table, subject):
    """
    Summary statistics of one subject's daily interactions.

    Post counts are summarized over the days the subject posted on any
    platform; every other feature over the days with at least one post on
    its own platform.  Standard deviations are population values.

    Examples
    --------
    >>> t = InteractionTable(0, {('a', 'twitter', 'post'): [1, 3]})
    >>> describe(t, 'a')[(Platform.TWITTER, FeatureKind.POST)].std
    1.0
    """
    subject = table._check_subject(subject)
    posts = {p: table.counts(subject, p, FeatureKind.POST) for p in Platform}
    active = np.zeros(table.n_days, dtype=bool)
    for counts in posts.values():
        active |= counts > 0

    stats = {}
    for platform, feature in FEATURE_ORDER:
        if feature is FeatureKind.POST:
            mask = active
        else:
            mask = posts[platform] > 0
        values = table.counts(subject, platform, feature)[mask].astype(float)
        if values.size == 0:
            continue
        stats[(platform, feature)] = FeatureStats(
            int(values.size), float(values.min()), float(values.max()),
            float(values.mean()), float(values.std()))
    return SummaryStats(subject, stats)


def _per_post_columns(sums, names, platforms):
    extra, extra_names = [], []
    for platform in platforms:
        post = sums[feature_label(platform, FeatureKind.POST)]
        for feature in PLATFORM_FEATURES[platform][1:]:
            label = feature_label(platform, feature)
            ratio = np.zeros_like(post)
            np.divide(sums[label], post, out=ratio, where=post > 0)
            extra.append(ratio)
            extra_names.append(label + '_per_post')
    return extra, extra_names


def assemble_dataset(table, polls, subject, feature_set, window,
                     anchors=ser.TUMBLING, per_post=False):
    """
    Build the model dataset of one subject.

    Features are the trailing ``window``-day sums of every feature in
    ``feature_set`` in `FEATURE_ORDER`; the target is the daily-interpolated
    poll share at each anchor day.  Rows cover the overlap of the interaction
    range and the poll span; past the last poll the final value is held flat
    and the row is flagged in ``extended``.

    Parameters
    ----------
    table : InteractionTable
    polls : PollBook
    subject : str
    feature_set : FeatureSet or str
    window : int
    anchors : {'tumbling', 'rolling'}
    per_post : bool
        Append interaction-per-post ratios for every platform in the set.

    Returns
    -------
    dataset : ModelDataset

    Raises
    ------
    UnknownSubject, InsufficientOverlap
    """
    feature_set = FeatureSet(feature_set)
    window = int(window)
    if subject not in table:
        raise UnknownSubject("No interactions for subject {!r}".format(subject))
    subject = normalize_subject(subject)
    obs = polls.observations(subject)
    if len(obs) < 2:
        raise InsufficientOverlap("{!r} has fewer than two polls".format(subject))

    first = max(table.start, obs.first)
    last = table.end
    if last - first + 1 < window:
        raise InsufficientOverlap(
            "{!r}: {} overlapping days cannot hold a {}-day window".format(
                subject, max(last - first + 1, 0), window))

    sums, names = {}, []
    anchor_days = None
    for platform, feature in feature_set.features:
        label = feature_label(platform, feature)
        s = table.series(subject, platform, feature).between(first, last)
        anchor_days, sums[label] = ser.aggregate_window(s, window, anchors)
        names.append(label)
    columns = [sums[n] for n in names]
    if per_post:
        extra, extra_names = _per_post_columns(sums, names, feature_set.platforms)
        columns += extra
        names += extra_names

    target = ser.interpolate_daily(obs, end=max(obs.last, last))
    return ModelDataset(subject, feature_set, window, anchor_days,
                        np.column_stack(columns), target.at(anchor_days),
                        tuple(names), anchor_days > obs.last)


def safe_filename(subject):
    """File-system friendly rendering of a subject key."""
    return _SAFE_NAME.sub('_', normalize_subject(subject)) or 'subject'
