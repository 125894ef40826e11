"""
Undecided-voter redistribution and round-two vote-transfer scenarios.

A `ShareVector` holds predicted shares per subject plus the undecided share.
A `TransferRule` names, for each pool (an eliminated subject or the
undecided voters), what happens to its votes: `Exclude` removes them,
`AllTo` gives them to one finalist and `SplitEqual` divides them evenly.
All arithmetic is carried at full precision; `round_report` produces the
one-decimal figures for reports.
"""
import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_EVEN, ROUND_HALF_UP

from astropy.table import Table

from .ingest import UNDECIDED, normalize_subject

__all__ = ['UNDECIDED', 'ScenarioError', 'InvalidShares', 'AllUndecided',
           'UnknownSource', 'UnknownTarget', 'DuplicateSubjects',
           'EmptyInput', 'ShareVector', 'Exclude', 'AllTo', 'SplitEqual',
           'TransferRule', 'RoundTwoResult', 'FinalistSummary', 'Comparison',
           'round_report', 'redistribute_undecided', 'apply_scenario',
           'builtin_scenarios', 'summarize', 'compare_outcome',
           'read_shares', 'write_shares', 'load_scenarios', 'write_results',
           'write_summary']

log = logging.getLogger(__name__)

TOTAL_TOLERANCE = 0.05
SHARE_COLUMNS = ('subject', 'share_pct')
RESULT_COLUMNS = ('scenario', 'subject', 'share_pct')

_CLEAN = Decimal('1e-9')
_TENTH = Decimal('0.1')


class ScenarioError(ValueError):
    pass


class InvalidShares(ScenarioError):
    pass


class AllUndecided(ScenarioError):
    pass


class UnknownSource(ScenarioError):
    pass


class UnknownTarget(ScenarioError):
    pass


class DuplicateSubjects(ScenarioError):
    pass


class EmptyInput(ScenarioError):
    pass


def round_report(values):
    """
    Round shares to one decimal for reporting.

    Each value is rounded half-up.  When the rounded values then add up to
    more than the half-up rounded total, the excess tenths come off the
    values that were rounded up the most, ties to the larger value.
    A shortfall is left alone.

    Parameters
    ----------
    values : mapping or sequence of float

    Returns
    -------
    rounded : same kind as ``values``

    Examples
    --------
    >>> round_report([49.35, 50.65])
    [49.4, 50.6]
    >>> round_report({'a': 48.15})
    {'a': 48.2}
    >>> round_report([33.33, 33.33, 33.34])
    [33.3, 33.3, 33.3]
    """
    keys = list(values) if isinstance(values, dict) else None
    raw = [values[k] for k in keys] if keys is not None else list(values)
    clean = [Decimal(float(v)).quantize(_CLEAN, rounding=ROUND_HALF_EVEN) for v in raw]
    rounded = [v.quantize(_TENTH, rounding=ROUND_HALF_UP) for v in clean]
    target = sum(clean, Decimal(0)).quantize(_TENTH, rounding=ROUND_HALF_UP)
    excess = int(((sum(rounded, Decimal(0)) - target) / _TENTH).to_integral_value())
    if excess > 0:
        raised = [i for i in range(len(clean)) if rounded[i] > clean[i]]
        raised.sort(key=lambda i: (clean[i] - rounded[i], -clean[i], i))
        for i in raised[:excess]:
            rounded[i] -= _TENTH
    rounded = [float(v) for v in rounded]
    if keys is not None:
        return dict(zip(keys, rounded))
    return rounded


@dataclass(frozen=True)
class ShareVector:
    """Shares per subject (percent) and the undecided share."""
    shares: dict
    undecided: float = 0.0

    def __post_init__(self):
        shares = {}
        for subject, share in dict(self.shares).items():
            subject = normalize_subject(subject)
            if subject == UNDECIDED:
                raise InvalidShares("{} is not a subject".format(UNDECIDED))
            if subject in shares:
                raise DuplicateSubjects("{!r} listed twice".format(subject))
            shares[subject] = float(share)
        undecided = float(self.undecided)
        if any(v < 0.0 for v in shares.values()) or undecided < 0.0:
            raise InvalidShares("Shares must be non-negative")
        total = sum(shares.values()) + undecided
        if total > 100.0 + TOTAL_TOLERANCE:
            raise InvalidShares("Shares sum to {:.4f}, above 100".format(total))
        object.__setattr__(self, 'shares', shares)
        object.__setattr__(self, 'undecided', undecided)

    @property
    def subjects(self):
        return tuple(self.shares)

    @property
    def decided(self):
        return sum(self.shares.values())

    @property
    def total(self):
        return self.decided + self.undecided

    def share(self, source):
        """Share of a subject, or of the undecided voters for `UNDECIDED`."""
        if source == UNDECIDED:
            return self.undecided
        try:
            return self.shares[normalize_subject(source)]
        except KeyError:
            raise UnknownSource("No share for {!r}".format(source))


@dataclass(frozen=True)
class Exclude:
    """The pool's votes leave play."""


@dataclass(frozen=True)
class AllTo:
    target: str


@dataclass(frozen=True)
class SplitEqual:
    targets: tuple

    def __post_init__(self):
        targets = tuple(normalize_subject(t) for t in self.targets)
        if not targets:
            raise ScenarioError("SplitEqual needs at least one target")
        if len(set(targets)) != len(targets):
            raise DuplicateSubjects("SplitEqual targets must be distinct")
        object.__setattr__(self, 'targets', targets)


@dataclass(frozen=True)
class TransferRule:
    """Labelled list of ``(source, action)`` pools; a source appears once."""
    label: str
    pools: tuple

    def __post_init__(self):
        pools = tuple((s if s == UNDECIDED else normalize_subject(s), a)
                      for s, a in self.pools)
        sources = [s for s, _ in pools]
        if len(set(sources)) != len(sources):
            raise DuplicateSubjects("Rule {!r} lists a source twice".format(self.label))
        object.__setattr__(self, 'pools', pools)

    @property
    def sources(self):
        return tuple(s for s, _ in self.pools)


@dataclass(frozen=True)
class RoundTwoResult:
    label: str
    shares: dict
    excluded: float = 0.0

    def reported(self):
        """One-decimal shares as printed in reports."""
        return round_report(self.shares)


@dataclass(frozen=True)
class FinalistSummary:
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple = field(default=())
    mae: float = 0.0


def redistribute_undecided(vector):
    """
    Allocate the undecided share proportionally to the decided shares.

    >>> v = redistribute_undecided(ShareVector({'a': 40.0, 'b': 40.0}, 20.0))
    >>> v.shares, v.undecided
    ({'a': 50.0, 'b': 50.0}, 0.0)
    """
    decided = vector.decided
    if decided <= 0.0:
        raise AllUndecided("No decided share to scale")
    scale = 100.0 / decided
    if scale == 1.0:
        return ShareVector(dict(vector.shares), 0.0)
    return ShareVector({s: v * scale for s, v in vector.shares.items()}, 0.0)


def apply_scenario(base, rule, finalists=None):
    """
    Round-two shares of the finalists under ``rule``.

    Parameters
    ----------
    base : ShareVector
        First-round shares of the finalists and the pool subjects.
    rule : TransferRule
    finalists : sequence of str, optional
        Defaults to every subject of ``base`` that is not a rule source.

    Returns
    -------
    result : RoundTwoResult
        Undecided votes not named by the rule leave play with the excluded
        pools; ``excluded`` is the total mass removed.

    Raises
    ------
    UnknownSource, UnknownTarget
    """
    if finalists is None:
        finalists = [s for s in base.subjects if s not in rule.sources]
    finalists = [normalize_subject(f) for f in finalists]
    for f in finalists:
        if f not in base.shares:
            raise UnknownTarget("Finalist {!r} has no base share".format(f))
        if f in rule.sources:
            raise ScenarioError("Finalist {!r} cannot also be a pool".format(f))
    shares = {f: base.shares[f] for f in finalists}

    excluded = 0.0 if UNDECIDED in rule.sources else base.undecided
    for source, action in rule.pools:
        amount = base.share(source)
        if isinstance(action, Exclude):
            excluded += amount
            continue
        targets = (action.target,) if isinstance(action, AllTo) else action.targets
        targets = [normalize_subject(t) for t in targets]
        for target in targets:
            if target not in shares:
                raise UnknownTarget("{!r} is not a finalist".format(target))
        portion = amount / len(targets)
        for target in targets:
            shares[target] += portion
    return RoundTwoResult(rule.label, shares, excluded)


def builtin_scenarios(finalist_a, finalist_b, pool_subject):
    """
    The ten standard transfer rules ``'A'`` to ``'J'``.

    ``pool_subject`` is the eliminated candidate; the undecided voters are
    the second pool.
    """
    a, b, pool = (normalize_subject(s) for s in (finalist_a, finalist_b, pool_subject))
    if len({a, b, pool}) != 3:
        raise DuplicateSubjects("Finalists and pool subject must be distinct")
    split = SplitEqual((a, b))
    table = [
        ('A', Exclude(), Exclude()),
        ('B', AllTo(b), AllTo(b)),
        ('C', AllTo(b), AllTo(a)),
        ('D', AllTo(a), AllTo(b)),
        ('E', AllTo(a), AllTo(a)),
        ('F', split, AllTo(b)),
        ('G', split, AllTo(a)),
        ('H', AllTo(b), split),
        ('I', AllTo(a), split),
        ('J', split, split),
    ]
    return [TransferRule(label, ((pool, pool_action), (UNDECIDED, undecided_action)))
            for label, pool_action, undecided_action in table]


def summarize(results, labels=None):
    """
    Per-finalist minimum, maximum and unweighted mean over ``results``.

    ``labels`` restricts the summary to the results with those labels, for
    instance ``'BCDEFGHIJ'`` to leave out the rule that drops every pool.
    Values are full precision; report them through `round_report`.
    """
    results = list(results)
    if labels is not None:
        labels = [str(label) for label in labels]
        unknown = sorted(set(labels) - {r.label for r in results})
        if unknown:
            raise ScenarioError("No scenarios labelled {}".format(', '.join(unknown)))
        results = [r for r in results if r.label in labels]
    if not results:
        raise EmptyInput("Nothing to summarize")
    values = {}
    for result in results:
        for subject, share in result.shares.items():
            values.setdefault(subject, []).append(share)
    return {s: FinalistSummary(min(v), max(v), sum(v) / len(v))
            for s, v in values.items()}


def compare_outcome(predicted, actual):
    """
    Signed and absolute errors of predicted against actual shares.

    Parameters
    ----------
    predicted, actual : mapping of subject to share, or ShareVector

    Returns
    -------
    comparison : Comparison
        ``rows`` of ``(subject, predicted, actual, error, abs_error)`` and
        their mean absolute error.
    """
    if isinstance(predicted, ShareVector):
        predicted = predicted.shares
    if isinstance(actual, ShareVector):
        actual = actual.shares
    actual = {normalize_subject(s): float(v) for s, v in actual.items()}
    rows = []
    for subject, value in predicted.items():
        subject = normalize_subject(subject)
        if subject not in actual:
            raise UnknownSource("No actual result for {!r}".format(subject))
        err = float(value) - actual[subject]
        rows.append((subject, float(value), actual[subject], err, abs(err)))
    if not rows:
        raise EmptyInput("Nothing to compare")
    return Comparison(tuple(rows), sum(r[4] for r in rows) / len(rows))


#################
#
#
#               File formats
#
#################

def read_shares(path):
    """Read a ``subject,share_pct`` CSV; an ``__undecided__`` row is optional."""
    tab = Table.read(str(path), format='ascii.csv')
    if tuple(tab.colnames) != SHARE_COLUMNS:
        raise ScenarioError("{}: expected columns {}".format(path, ','.join(SHARE_COLUMNS)))
    shares, undecided = {}, 0.0
    for row in tab:
        subject = str(row['subject']).strip()
        if subject == UNDECIDED:
            undecided = float(row['share_pct'])
        elif normalize_subject(subject) in shares:
            raise DuplicateSubjects("{!r} listed twice in {}".format(subject, path))
        else:
            shares[normalize_subject(subject)] = float(row['share_pct'])
    return ShareVector(shares, undecided)


def write_shares(vector, path, decimals=None):
    """Write ``vector`` as ``subject,share_pct``; ``decimals`` rounds for reports."""
    shares = dict(vector.shares)
    if vector.undecided:
        shares[UNDECIDED] = vector.undecided
    if decimals is not None:
        shares = round_report(shares)
    fmt = '%.{}f'.format(decimals) if decimals is not None else '%.10g'
    tab = Table([list(shares), list(shares.values())], names=SHARE_COLUMNS,
                dtype=[str, float])
    tab.write(str(path), format='ascii.csv', formats={'share_pct': fmt},
              overwrite=True)


_ACTIONS = {'exclude', 'all_to', 'split_equal'}


def _required(spec, key, label):
    if not isinstance(spec, dict) or key not in spec:
        raise ScenarioError("Rule {}: missing {!r}".format(label, key))
    return spec[key]


def _action_from(spec, label):
    kind = _required(spec, 'action', label)
    if kind not in _ACTIONS:
        raise ScenarioError("Rule {}: unknown action {!r}; expected one of {}".format(
            label, kind, sorted(_ACTIONS)))
    if kind == 'exclude':
        return Exclude()
    if kind == 'all_to':
        return AllTo(normalize_subject(_required(spec, 'target', label)))
    return SplitEqual(tuple(_required(spec, 'targets', label)))


def load_scenarios(path, builtin=None):
    """
    Read a scenario JSON file.

    Keys: ``base`` (subject to share), ``undecided``, ``finalists`` (two
    subjects), ``pools`` (the eliminated subject first) and either
    ``builtin: true`` or ``rules``, a list of
    ``{"label": ..., "pools": [{"source": ..., "action": ...}]}`` where the
    action is ``exclude``, ``all_to`` (with ``target``) or ``split_equal``
    (with ``targets``).

    Returns
    -------
    base, finalists, rules : ShareVector, list of str, list of TransferRule
    """
    with open(path, encoding='utf-8') as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ScenarioError("{}: {}".format(path, err))
    if not isinstance(doc, dict):
        raise ScenarioError("{}: expected a JSON object".format(path))
    try:
        base = ShareVector(doc['base'], doc.get('undecided', 0.0))
        finalists = [normalize_subject(f) for f in doc['finalists']]
    except KeyError as err:
        raise ScenarioError("{}: missing key {}".format(path, err))
    if builtin is None:
        builtin = bool(doc.get('builtin', False))
    if builtin:
        pools = doc.get('pools') or [s for s in base.subjects if s not in finalists]
        if len(finalists) != 2 or not pools:
            raise ScenarioError("Built-in scenarios need two finalists and a pool subject")
        rules = builtin_scenarios(finalists[0], finalists[1], pools[0])
    else:
        rules = []
        for index, spec in enumerate(doc.get('rules', []), 1):
            label = str(_required(spec, 'label', '#{}'.format(index)))
            pools = tuple((_required(p, 'source', label), _action_from(p, label))
                          for p in _required(spec, 'pools', label))
            rules.append(TransferRule(label, pools))
        if not rules:
            raise ScenarioError("{} defines no rules".format(path))
    return base, finalists, rules


def write_results(results, path):
    """Write ``scenario,subject,share_pct`` rows with one-decimal shares."""
    labels, subjects, shares = [], [], []
    for result in results:
        for subject, share in result.reported().items():
            labels.append(result.label)
            subjects.append(subject)
            shares.append(share)
    tab = Table([labels, subjects, shares], names=RESULT_COLUMNS,
                dtype=[str, str, float])
    tab.write(str(path), format='ascii.csv', formats={'share_pct': '%.1f'},
              overwrite=True)


def write_summary(summary, path):
    """Write ``subject,min,max,mean`` rows, means rounded jointly."""
    subjects = list(summary)
    means = round_report({s: summary[s].mean for s in subjects})
    tab = Table([subjects,
                 [round_report([summary[s].min])[0] for s in subjects],
                 [round_report([summary[s].max])[0] for s in subjects],
                 [means[s] for s in subjects]],
                names=('subject', 'min', 'max', 'mean'),
                dtype=[str, float, float, float])
    tab.write(str(path), format='ascii.csv',
              formats={'min': '%.1f', 'max': '%.1f', 'mean': '%.1f'},
              overwrite=True)
