import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from votecast import regressors
from votecast.regressors import RegressorKind, RegressorSpec


def step_data(n=40):
    x = np.arange(n, dtype=float)[:, np.newaxis]
    y = np.where(x[:, 0] < n // 2, 1.0, 5.0)
    return x, y


def test_linear_exact_fit():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 3))
    y = 2.0 + X @ np.array([1.0, -0.5, 0.25])
    model = regressors.fit_linear(X, y)
    assert_allclose(model.coef, [1.0, -0.5, 0.25])
    assert model.intercept == pytest.approx(2.0)
    assert regressors.predict(model, [1.0, 1.0, 1.0]) == pytest.approx(2.75)


def test_linear_collinear_columns():
    x = np.arange(10.0)
    X = np.column_stack([x, x, np.ones(10)])
    model = regressors.fit_linear(X, 3.0 * x + 1.0)
    assert_allclose(model.predict(X), 3.0 * x + 1.0)


@pytest.mark.parametrize('X, y, error', [
    (np.zeros((0, 2)), [], regressors.EmptyDataset),
    ([[1.0], [np.nan]], [1.0, 2.0], regressors.NonFiniteInput),
    ([[1.0], [2.0]], [1.0, np.inf], regressors.NonFiniteInput),
    ([[1.0], [2.0]], [1.0, 2.0, 3.0], regressors.DimensionMismatch),
])
def test_bad_training_data(X, y, error):
    with pytest.raises(error):
        regressors.fit_linear(X, y)


def test_predict_dimension_mismatch():
    model = regressors.fit_linear([[1.0, 2.0], [2.0, 1.0], [3.0, 3.0]], [1.0, 2.0, 3.0])
    with pytest.raises(regressors.DimensionMismatch):
        regressors.predict(model, [1.0])


def test_tree_split_rule():
    X, y = step_data()
    tree = regressors.fit_tree(X, y, max_depth=1)
    assert tree.node_count == 3
    assert tree.feature[0] == 0
    assert tree.threshold[0] == 19.5
    assert_array_equal(tree.predict([[19.4], [19.5], [100.0]]), [1.0, 5.0, 5.0])


def test_tree_prefers_lowest_feature_on_ties():
    X, y = step_data()
    X = np.column_stack([X[:, 0], X[:, 0]])
    tree = regressors.fit_tree(X, y, max_depth=1)
    assert tree.feature[0] == 0


def test_tree_min_leaf():
    X = np.arange(6, dtype=float)[:, np.newaxis]
    y = np.array([0.0, 10.0, 10.0, 10.0, 10.0, 10.0])
    tree = regressors.fit_tree(X, y, max_depth=3, min_samples_leaf=2)
    # the lone low value cannot sit in a leaf of its own
    assert tree.threshold[0] == 1.5


def test_tree_constant_target_is_a_leaf():
    tree = regressors.fit_tree(np.arange(10.0)[:, np.newaxis], np.full(10, 7.0))
    assert tree.node_count == 1
    assert_array_equal(tree.predict([[3.0]]), [7.0])


def test_deep_tree_interpolates_training_data():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(50, 2))
    y = rng.normal(size=50)
    tree = regressors.fit_tree(X, y, max_depth=50)
    assert_allclose(tree.predict(X), y)


@pytest.mark.parametrize('fraction, n_features, k', [
    ('sqrt', 11, 3), ('sqrt', 4, 2), ('sqrt', 1, 1), (1.0, 11, 11), (0.5, 11, 5),
    (0.01, 4, 1),
])
def test_features_per_split(fraction, n_features, k):
    assert regressors._features_per_split(fraction, n_features) == k


@pytest.mark.parametrize('kwargs', [
    dict(tree_count=0), dict(max_depth=0), dict(min_samples_leaf=0),
    dict(learning_rate=0.0), dict(feature_fraction=1.5), dict(seed=-1),
])
def test_invalid_spec(kwargs):
    with pytest.raises(regressors.RegressorError):
        RegressorSpec(RegressorKind.RANDOM_FOREST, **kwargs)


def test_spec_defaults():
    forest = RegressorSpec.forest()
    assert (forest.tree_count, forest.max_depth, forest.min_samples_leaf) == (100, 8, 2)
    assert forest.feature_fraction == 'sqrt' and forest.bootstrap
    boosting = RegressorSpec.boosting()
    assert (boosting.max_depth, boosting.learning_rate) == (3, 0.1)
    assert not boosting.bootstrap
    assert RegressorSpec.linear().name == 'linear'


def test_forest_is_deterministic():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 4))
    y = X[:, 0] + 0.1 * rng.normal(size=60)
    spec = RegressorSpec.forest(tree_count=10, seed=42)
    a = regressors.fit(X, y, spec)
    b = regressors.fit(X, y, spec)
    assert_array_equal(a.predict(X), b.predict(X))
    c = regressors.fit(X, y, RegressorSpec.forest(tree_count=10, seed=43))
    assert not np.array_equal(a.predict(X), c.predict(X))


def test_forest_learns_step():
    X, y = step_data()
    spec = RegressorSpec.forest(tree_count=20, min_samples_leaf=1, seed=0)
    model = regressors.fit_forest(X, y, spec)
    assert isinstance(model, regressors.Forest)
    assert len(model.trees) == 20
    assert regressors.predict(model, [2.0]) == pytest.approx(1.0, abs=0.5)
    assert regressors.predict(model, [37.0]) == pytest.approx(5.0, abs=0.5)


def test_forest_without_bootstrap_matches_tree():
    X, y = step_data()
    spec = RegressorSpec.forest(tree_count=3, feature_fraction=1.0,
                                bootstrap=False, min_samples_leaf=1)
    model = regressors.fit_forest(X, y, spec)
    tree = regressors.fit_tree(X, y, max_depth=8)
    assert_array_equal(model.predict(X), tree.predict(X))


def test_boosting_stages_reduce_error():
    rng = np.random.default_rng(2)
    X = rng.uniform(-2, 2, size=(80, 2))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2
    model = regressors.fit_boosting(X, y, RegressorSpec.boosting(tree_count=50))
    errors = [np.mean((p - y) ** 2) for p in model.staged_predict(X)]
    assert len(errors) == 50
    assert errors[-1] < errors[0] < np.var(y)
    assert_allclose(model.predict(X), list(model.staged_predict(X))[-1])


def test_boosting_single_stage():
    X, y = step_data()
    spec = RegressorSpec.boosting(tree_count=1, max_depth=1, learning_rate=1.0)
    model = regressors.fit(X, y, spec)
    assert model.init == pytest.approx(3.0)
    assert_allclose(model.predict(X), y)


def test_tree_rng_streams():
    a = regressors.tree_rng(7, 0).integers(0, 1000, 5)
    b = regressors.tree_rng(7, 0).integers(0, 1000, 5)
    c = regressors.tree_rng(7, 1).integers(0, 1000, 5)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize('seed', range(10))
def test_single_tree_forest_matches_tree(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    spec = RegressorSpec.forest(tree_count=1, feature_fraction=1.0,
                                bootstrap=False, min_samples_leaf=1, seed=seed)
    forest = regressors.fit_forest(X, y, spec)
    tree = regressors.fit_tree(X, y, max_depth=spec.max_depth)
    assert_array_equal(forest.predict(X), tree.predict(X))


def exhaustive_tree_predict(X, y, x_new, max_depth, min_leaf):
    """Depth-first reference grower scoring every split one node at a time."""
    ys = y
    if max_depth == 0 or ys.size < 2 * min_leaf or np.all(ys == ys[0]):
        return np.full(len(x_new), ys.mean())
    node_sse = np.sum((ys - ys.mean()) ** 2)
    best = None
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        for lo, hi in zip(values[:-1], values[1:]):
            go_left = X[:, j] < 0.5 * (lo + hi)
            if min(go_left.sum(), (~go_left).sum()) < min_leaf:
                continue
            sse = (np.sum((ys[go_left] - ys[go_left].mean()) ** 2)
                   + np.sum((ys[~go_left] - ys[~go_left].mean()) ** 2))
            if best is None or sse < best[0]:
                best = (sse, j, 0.5 * (lo + hi))
    if best is None or best[0] >= node_sse:
        return np.full(len(x_new), ys.mean())
    _, j, thr = best
    go_left, new_left = X[:, j] < thr, x_new[:, j] < thr
    out = np.empty(len(x_new))
    out[new_left] = exhaustive_tree_predict(X[go_left], y[go_left], x_new[new_left],
                                            max_depth - 1, min_leaf)
    out[~new_left] = exhaustive_tree_predict(X[~go_left], y[~go_left], x_new[~new_left],
                                             max_depth - 1, min_leaf)
    return out


@pytest.mark.parametrize('seed, max_depth, min_leaf', [
    (0, 1, 1), (1, 3, 1), (2, 4, 2), (3, 6, 3), (4, 8, 1), (5, 5, 5),
])
def test_tree_matches_exhaustive_search(seed, max_depth, min_leaf):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    # a rounded column brings repeated values
    X[:, 1] = np.round(X[:, 1], 1)
    y = np.sin(2 * X[:, 0]) + X[:, 1] + 0.1 * rng.normal(size=60)
    x_new = rng.normal(size=(40, 3))
    tree = regressors.fit_tree(X, y, max_depth=max_depth, min_samples_leaf=min_leaf)
    assert_allclose(tree.predict(x_new),
                    exhaustive_tree_predict(X, y, x_new, max_depth, min_leaf))
    assert_allclose(tree.predict(X),
                    exhaustive_tree_predict(X, y, X, max_depth, min_leaf))


def test_tree_nodes_are_consistent():
    rng = np.random.default_rng(8)
    X = rng.uniform(size=(200, 4))
    y = X[:, 0] * 10 + rng.normal(size=200)
    tree = regressors.fit_tree(X, y, max_depth=6, min_samples_leaf=3)
    inner = np.flatnonzero(tree.feature >= 0)
    leaves = np.flatnonzero(tree.feature < 0)
    assert tree.node_count == 2 * inner.size + 1
    assert np.all(tree.left[inner] > inner) and np.all(tree.right[inner] > inner)
    assert sorted(np.concatenate([tree.left[inner], tree.right[inner], [0]])) == \
        list(range(tree.node_count))
    assert np.all(tree.left[leaves] == -1)
    # every leaf holds at least min_samples_leaf training rows
    node = np.zeros(200, dtype=int)
    for _ in range(6):
        inside = tree.feature[node] >= 0
        rows = np.flatnonzero(inside)
        go_right = X[rows, tree.feature[node[rows]]] >= tree.threshold[node[rows]]
        node[rows] = np.where(go_right, tree.right[node[rows]], tree.left[node[rows]])
    assert np.bincount(node)[leaves].min() >= 3


def test_forest_trees_in_processes_match_serial():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(80, 5))
    y = X[:, 0] - X[:, 2] + 0.1 * rng.normal(size=80)
    spec = RegressorSpec.forest(tree_count=6, seed=11)
    serial = regressors.fit_forest(X, y, spec)
    pooled = regressors.fit_forest(X, y, spec, processes=2)
    assert_array_equal(pooled.predict(X), serial.predict(X))
    for a, b in zip(serial.trees, pooled.trees):
        assert_array_equal(a.feature, b.feature)
        assert_array_equal(a.threshold, b.threshold)


def test_sqrt_features_vary_between_trees():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(100, 9))
    y = X.sum(axis=1)
    spec = RegressorSpec.forest(tree_count=8, bootstrap=False, seed=1)
    forest = regressors.fit_forest(X, y, spec)
    assert len({int(t.feature[0]) for t in forest.trees}) > 1
