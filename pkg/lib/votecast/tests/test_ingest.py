import numpy as np
import pytest
from astropy.utils.data import get_pkg_data_filename
from numpy.testing import assert_allclose, assert_array_equal

from votecast import ingest
from votecast import series as ser
from votecast.ingest import FeatureKind, FeatureSet, Platform

from . import START, linear_inputs


def write_csv(path, header, rows):
    path.write_text('\n'.join([header] + rows) + '\n')
    return str(path)


@pytest.fixture
def small_table():
    return ingest.parse_interactions(get_pkg_data_filename('data/interactions_small.csv'))


def test_feature_order():
    assert len(ingest.FEATURE_ORDER) == 11
    assert [ingest.feature_label(*pf) for pf in FeatureSet.TWITTER.features] == [
        'twitter.post', 'twitter.like', 'twitter.retweet', 'twitter.reply']
    assert len(FeatureSet.ALL.features) == 11


@pytest.mark.parametrize('label', ['twitter.comment', 'instagram.reply',
                                   'facebook.retweet'])
def test_invalid_pairs(label):
    with pytest.raises(ingest.InvalidPlatformFeaturePair):
        ingest.parse_feature_label(label)


@pytest.mark.parametrize('name, key', [('  Ada  Lovelace ', 'Ada Lovelace'),
                                       ('alpha', 'alpha')])
def test_normalize_subject(name, key):
    assert ingest.normalize_subject(name) == key


def test_parse_interactions_densifies(small_table):
    t = small_table
    assert t.start == ser.day_from_iso('2020-01-01')
    assert t.n_days == 4
    assert t.subjects == ('alpha', 'beta')
    assert_array_equal(t.counts('alpha', 'twitter', 'like'), [100, 0, 40, 0])
    assert_array_equal(t.counts('alpha', 'twitter', 'post'), [2, 0, 1, 0])
    # valid but unobserved cells read as zero
    assert_array_equal(t.counts('beta', 'twitter', 'retweet'), [0, 0, 0, 0])


def test_unknown_subject(small_table):
    with pytest.raises(ingest.UnknownSubject):
        small_table.counts('gamma', 'twitter', 'post')


def test_bad_pair_names_line():
    path = get_pkg_data_filename('data/interactions_bad_pair.csv')
    with pytest.raises(ingest.InvalidPlatformFeaturePair) as err:
        ingest.parse_interactions(path)
    assert err.value.lineno == 3
    assert 'line 3' in str(err.value)
    assert 'twitter has no comment' in str(err.value)


@pytest.mark.parametrize('row, error', [
    ('2020-01-02,alpha,twitter,like,-1', ingest.NegativeCount),
    ('2020-01-01,alpha,twitter,post,5', ingest.DuplicateCell),
    ('2020-01-02,alpha,twitter,like', ingest.MalformedRow),
    ('2020-01-02,alpha,twitter,like,many', ingest.MalformedRow),
    ('2020-02-30,alpha,twitter,like,1', ingest.MalformedRow),
    ('2020-01-02,alpha,myspace,like,1', ingest.MalformedRow),
    ('2020-01-02,alpha,twitter,like,1_000', ingest.MalformedRow),
    ('2020-01-02,alpha,twitter,like,1e3', ingest.MalformedRow),
    ('2020-01-02,alpha,twitter,like,+4', ingest.MalformedRow),
])
def test_interaction_errors(tmp_path, row, error):
    path = write_csv(tmp_path / 'i.csv', ','.join(ingest.INTERACTION_COLUMNS),
                     ['2020-01-01,alpha,twitter,post,1', row])
    with pytest.raises(error) as err:
        ingest.parse_interactions(path)
    assert err.value.lineno == 3


def test_bad_header(tmp_path):
    path = write_csv(tmp_path / 'i.csv', 'day,who,where,what,n', [])
    with pytest.raises(ingest.MalformedRow) as err:
        ingest.parse_interactions(path)
    assert err.value.lineno == 1


def test_parse_polls():
    book = ingest.parse_polls(get_pkg_data_filename('data/polls_small.csv'))
    assert book.subjects == ('alpha', 'beta')
    assert_allclose(book.undecided.values, [10.0, 9.0])
    day, share = book.latest('alpha')
    assert day == ser.day_from_iso('2020-01-31')
    assert share == 43.0


@pytest.mark.parametrize('rows, error', [
    (['2020-01-01,alpha,101'], ingest.ShareOutOfRange),
    (['2020-01-01,alpha,-0.5'], ingest.ShareOutOfRange),
    (['2020-01-01,alpha,41.125'], ingest.MalformedRow),
    (['2020-01-01,alpha,4_1'], ingest.MalformedRow),
    (['2020-01-01,alpha,nan'], ingest.MalformedRow),
    (['2020-01-01,alpha,1e1'], ingest.MalformedRow),
    (['2020-01-01,alpha,41.'], ingest.MalformedRow),
    (['2020-01-02,alpha,40', '2020-01-01,alpha,41'], ingest.NonMonotoneDates),
    (['2020-01-01,alpha,60', '2020-01-01,beta,41'], ingest.SumExceeds100),
])
def test_poll_errors(tmp_path, rows, error):
    path = write_csv(tmp_path / 'p.csv', ','.join(ingest.POLL_COLUMNS), rows)
    with pytest.raises(error):
        ingest.parse_polls(path)


def test_poll_sum_tolerance(tmp_path):
    path = write_csv(tmp_path / 'p.csv', ','.join(ingest.POLL_COLUMNS),
                     ['2020-01-01,alpha,60.2', '2020-01-01,beta,40.2'])
    book = ingest.parse_polls(path)
    assert book.subjects == ('alpha', 'beta')


def test_write_and_parse_interactions(tmp_path, small_table):
    path = tmp_path / 'out.csv'
    ingest.write_interactions(small_table, path)
    again = ingest.parse_interactions(str(path))
    assert again.start == small_table.start
    for subject in small_table.subjects:
        for platform, feature in ingest.FEATURE_ORDER:
            assert_array_equal(again.counts(subject, platform, feature),
                               small_table.counts(subject, platform, feature))


def test_describe(small_table):
    stats = ingest.describe(small_table, 'alpha')
    # posts are summarized over days with a post on any platform
    post = stats[(Platform.TWITTER, FeatureKind.POST)]
    assert post.count == 2
    assert (post.min, post.max, post.mean) == (1.0, 2.0, 1.5)
    like = stats[(Platform.TWITTER, FeatureKind.LIKE)]
    assert (like.count, like.mean, like.std) == (2, 70.0, 30.0)
    share = stats[(Platform.FACEBOOK, FeatureKind.SHARE)]
    assert (share.count, share.mean) == (1, 5.0)
    rows = list(stats.rows())
    assert rows[0][:3] == ('alpha', 'twitter', 'post')


class TestAssembleDataset:
    def setup_class(self):
        self.table, self.polls = linear_inputs(days=120, cadence=10)

    def test_twitter_window_one(self):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha',
                                     FeatureSet.TWITTER, 1)
        assert len(ds) == 120
        assert ds.feature_names == ('twitter.post', 'twitter.like',
                                    'twitter.retweet', 'twitter.reply')
        assert_allclose(ds.features[:3, 1], [100, 110, 120])
        assert_allclose(ds.targets[:3], [40.0, 40.05, 40.1])
        # last poll on day 110; the rest is the flat-held final value
        assert np.count_nonzero(ds.extended) == 9
        assert_allclose(ds.targets[ds.extended], 40.0 + 0.05 * 110)

    @pytest.mark.parametrize('w, rows', [(1, 120), (2, 60), (7, 17), (28, 4),
                                         (120, 1)])
    def test_window_row_counts(self, w, rows):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha', 'all', w)
        assert len(ds) == rows
        assert ds.features.shape == (rows, 11)
        assert ds.anchors[0] == START + w - 1

    def test_window_sums(self):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha',
                                     FeatureSet.TWITTER, 7)
        assert_allclose(ds.features[0, :2], [7, sum(100 + 10 * t for t in range(7))])
        assert_allclose(ds.targets[0], 40.0 + 0.05 * 6)

    def test_rolling_anchors(self):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha',
                                     FeatureSet.TWITTER, 7, anchors=ser.ROLLING)
        assert len(ds) == 114
        assert_array_equal(np.diff(ds.anchors), 1)

    def test_per_post(self):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha',
                                     FeatureSet.TWITTER, 1, per_post=True)
        assert ds.feature_names[4:] == ('twitter.like_per_post',
                                        'twitter.retweet_per_post',
                                        'twitter.reply_per_post')
        assert_allclose(ds.features[:, 4], ds.features[:, 1])

    def test_window_longer_than_overlap(self):
        with pytest.raises(ingest.InsufficientOverlap):
            ingest.assemble_dataset(self.table, self.polls, 'alpha', 'twitter', 121)

    def test_unknown_subject(self):
        with pytest.raises(ingest.UnknownSubject):
            ingest.assemble_dataset(self.table, self.polls, 'gamma', 'twitter', 1)

    def test_needs_two_polls(self):
        polls = ingest.PollBook({'alpha': ser.SparseObservations([START], [40.0])})
        with pytest.raises(ingest.InsufficientOverlap):
            ingest.assemble_dataset(self.table, polls, 'alpha', 'twitter', 1)

    def test_write_read(self, tmp_path):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha', 'twitter', 7)
        path = tmp_path / 'ds.csv'
        ds.write(path)
        again = ingest.ModelDataset.read(path)
        assert again.subject == 'alpha'
        assert again.feature_set is FeatureSet.TWITTER
        assert again.window == 7
        assert again.feature_names == ds.feature_names
        assert_array_equal(again.anchors, ds.anchors)
        assert_array_equal(again.features, ds.features)
        assert_array_equal(again.targets, ds.targets)
        assert_array_equal(again.extended, ds.extended)

    def test_head(self):
        ds = ingest.assemble_dataset(self.table, self.polls, 'alpha', 'twitter', 1)
        head = ds.head(10)
        assert len(head) == 10
        assert_array_equal(head.targets, ds.targets[:10])


@pytest.mark.parametrize('subject, name', [('Ada Lovelace', 'Ada_Lovelace'),
                                           ('a/b', 'a_b')])
def test_safe_filename(subject, name):
    assert ingest.safe_filename(subject) == name


def test_poll_share_formats(tmp_path):
    path = write_csv(tmp_path / 'p.csv', ','.join(ingest.POLL_COLUMNS),
                     ['2020-01-01,alpha,41', '2020-01-01,beta,40.5',
                      '2020-01-02,alpha,41.25', '2020-01-02,beta,0'])
    book = ingest.parse_polls(path)
    assert_allclose(book.observations('alpha').values, [41.0, 41.25])
    assert_allclose(book.observations('beta').values, [40.5, 0.0])
