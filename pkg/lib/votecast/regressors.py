"""
Supervised regressors behind one fit/predict interface.

Three model families are provided, all written on numpy alone:

* ordinary least squares with an intercept (`fit_linear`),
* variance-reduction regression trees (`fit_tree`) and their ensembles,
  the random forest (`fit_forest`) and gradient boosting (`fit_boosting`).

Trees are stored as flat node arrays.  A split sends rows with
``x[feature] < threshold`` to the left child and the rest to the right.
Candidate thresholds are midpoints of consecutive distinct sorted values;
ties between equally good splits go to the lowest feature index, then the
lowest threshold.

Trees grow one depth level at a time: each feature column is sorted once per
tree and the nodes of a level are scored together from cumulative sums.

Every random draw comes from a per-tree stream derived from
``(seed, tree index)``, so fits are deterministic and trees may be grown in
any order.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import mputil

__all__ = ['RegressorError', 'EmptyDataset', 'NonFiniteInput',
           'DimensionMismatch', 'RegressorKind', 'RegressorSpec',
           'LinearModel', 'RegressionTree', 'Forest', 'BoostedTrees',
           'fit_linear', 'fit_tree', 'fit_forest', 'fit_boosting', 'fit',
           'predict', 'tree_rng']

# relative tolerance used when comparing split scores
_SCORE_RTOL = 1e-12


class RegressorError(ValueError):
    pass


class EmptyDataset(RegressorError):
    pass


class NonFiniteInput(RegressorError):
    pass


class DimensionMismatch(RegressorError):
    pass


class RegressorKind(Enum):
    LINEAR = 'linear'
    RANDOM_FOREST = 'forest'
    GRADIENT_BOOSTING = 'boosting'


@dataclass(frozen=True)
class RegressorSpec:
    """
    Model family and hyperparameters.

    ``feature_fraction`` is either a fraction in ``(0, 1]`` of the features
    considered at each split or ``'sqrt'`` for ``floor(sqrt(n_features))``
    of them.  Use `forest`, `boosting` and `linear` for family defaults.
    """
    kind: RegressorKind
    tree_count: int = 100
    max_depth: int = 8
    min_samples_leaf: int = 2
    learning_rate: float = 0.1
    feature_fraction: object = 'sqrt'
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', RegressorKind(self.kind))
        if self.tree_count < 1:
            raise RegressorError("tree_count must be at least 1")
        if self.max_depth < 1:
            raise RegressorError("max_depth must be at least 1")
        if self.min_samples_leaf < 1:
            raise RegressorError("min_samples_leaf must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise RegressorError("learning_rate must lie in (0, 1]")
        if self.feature_fraction != 'sqrt':
            if not 0.0 < float(self.feature_fraction) <= 1.0:
                raise RegressorError("feature_fraction must be 'sqrt' or lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise RegressorError("seed must be a 64-bit unsigned integer")

    @classmethod
    def linear(cls):
        return cls(RegressorKind.LINEAR)

    @classmethod
    def forest(cls, tree_count=100, max_depth=8, min_samples_leaf=2,
               feature_fraction='sqrt', bootstrap=True, seed=0):
        return cls(RegressorKind.RANDOM_FOREST, tree_count=tree_count,
                   max_depth=max_depth, min_samples_leaf=min_samples_leaf,
                   feature_fraction=feature_fraction, bootstrap=bootstrap,
                   seed=seed)

    @classmethod
    def boosting(cls, tree_count=100, max_depth=3, min_samples_leaf=1,
                 learning_rate=0.1, feature_fraction=1.0, seed=0):
        return cls(RegressorKind.GRADIENT_BOOSTING, tree_count=tree_count,
                   max_depth=max_depth, min_samples_leaf=min_samples_leaf,
                   learning_rate=learning_rate,
                   feature_fraction=feature_fraction, bootstrap=False,
                   seed=seed)

    @property
    def name(self):
        return self.kind.value


def tree_rng(seed, index):
    """Independent generator for tree ``index`` of a model seeded with ``seed``."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _check_training(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2:
        raise DimensionMismatch("X must be a row matrix")
    if y.size == 0 or X.shape[0] == 0:
        raise EmptyDataset("Cannot fit a model on zero rows")
    if X.shape[0] != y.size:
        raise DimensionMismatch("X has {} rows but y has {} values".format(
            X.shape[0], y.size))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("Training data contains NaN or infinite values")
    return X, y


def _check_rows(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DimensionMismatch("Model expects {} features, got {}".format(
            n_features, X.shape[-1] if X.ndim else 0))
    return X


#################
#
#
#               Linear regression
#
#################

class LinearModel:
    """Fitted ``y = intercept + X @ coef``."""

    def __init__(self, coef, intercept):
        self.coef = np.asarray(coef, dtype=float)
        self.intercept = float(intercept)
        self.spec = RegressorSpec.linear()

    @property
    def n_features(self):
        return self.coef.size

    def predict(self, X):
        X = _check_rows(X, self.n_features)
        return self.intercept + X @ self.coef


def fit_linear(X, y):
    """
    Least-squares linear regression with an intercept.

    Rank-deficient designs get the minimum-norm solution.

    Examples
    --------
    >>> m = fit_linear([[0.0], [1.0], [2.0]], [0.0, 0.0, 3.0])
    >>> round(float(m.coef[0]), 12), round(m.intercept, 12)
    (1.5, -0.5)
    """
    X, y = _check_training(X, y)
    design = np.column_stack([np.ones(X.shape[0]), X])
    solution = np.linalg.lstsq(design, y, rcond=None)[0]
    return LinearModel(solution[1:], solution[0])


#################
#
#
#               Regression trees
#
#################

class RegressionTree:
    """
    Binary regression tree in array form.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise rows with
    ``x[feature[i]] < threshold[i]`` continue at ``left[i]`` and the others
    at ``right[i]``.  ``value[i]`` is the mean target of the node's rows.
    """

    def __init__(self, feature, threshold, left, right, value, n_features):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float)
        self.n_features = int(n_features)

    @property
    def node_count(self):
        return self.feature.size

    def predict(self, X):
        X = _check_rows(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.arange(X.shape[0])
        while active.size:
            feat = self.feature[node[active]]
            inner = feat >= 0
            active, feat = active[inner], feat[inner]
            if not active.size:
                break
            here = node[active]
            go_right = X[active, feat] >= self.threshold[here]
            node[active] = np.where(go_right, self.right[here], self.left[here])
        return self.value[node]


def _features_per_split(fraction, n_features):
    if fraction == 'sqrt':
        return max(1, int(math.sqrt(n_features)))
    return max(1, int(float(fraction) * n_features))


def _choose_features(rng, n_nodes, n_features, k):
    """Boolean ``(n_nodes, n_features)`` mask of the features each node may split on."""
    if k >= n_features:
        return np.ones((n_nodes, n_features), dtype=bool)
    pick = np.argsort(rng.random((n_nodes, n_features)), axis=1)[:, :k]
    chosen = np.zeros((n_nodes, n_features), dtype=bool)
    np.put_along_axis(chosen, pick, True, axis=1)
    return chosen


def _level_splits(X, resid, order, row_slot, counts, candidate, min_leaf):
    """
    Best split of every candidate (slot, feature) pair of one tree level.

    ``candidate`` is a boolean ``(n_slots, n_features)`` mask.  Returns the
    flat arrays ``(slots, features, sse, thresholds)`` of the pairs with an
    admissible split, ordered by feature and then slot.  Among equal scores
    of one pair the lowest threshold wins.
    """
    n_slots, n_features = candidate.shape
    rows = order.T
    slots = row_slot[rows]
    cols = np.broadcast_to(np.arange(n_features)[:, np.newaxis], rows.shape)
    keep = slots >= 0
    keep[keep] = candidate[slots[keep], cols[keep]]
    rows, slots, cols = rows[keep], slots[keep], cols[keep]
    group = cols * n_slots + slots
    # stable on small keys is a radix sort; rows stay sorted by x in a group
    key_type = np.uint16 if candidate.size <= np.iinfo(np.uint16).max else np.intp
    g = np.argsort(group.astype(key_type), kind='stable')
    rows, slots, cols, group = rows[g], slots[g], cols[g], group[g]
    xs = X[rows, cols]
    r = resid[rows]

    sizes = (candidate.T * counts).ravel()
    first = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    csum = np.concatenate([[0.0], np.cumsum(r)])
    csq = np.concatenate([[0.0], np.cumsum(r * r)])
    pos = np.arange(rows.size)
    start = first[group]
    stop = start + counts[slots]
    n_left = pos - start + 1
    n_right = stop - pos - 1
    valid = (n_left >= min_leaf) & (n_right >= min_leaf)
    valid[valid] = xs[pos[valid]] < xs[pos[valid] + 1]
    t = pos[valid]
    if t.size == 0:
        empty = np.empty(0)
        return t, t, empty, empty

    s0, s1 = start[valid], stop[valid]
    nl, nr = n_left[valid].astype(float), n_right[valid].astype(float)
    s_left = csum[t + 1] - csum[s0]
    s_right = csum[s1] - csum[t + 1]
    q_left = csq[t + 1] - csq[s0]
    q_right = csq[s1] - csq[t + 1]
    sse = (q_left - s_left * s_left / nl) + (q_right - s_right * s_right / nr)

    # first minimum of each pair, scanning thresholds upwards
    rank = np.lexsort((sse, group[t]))
    ranked = group[t][rank]
    win = rank[np.concatenate([[True], ranked[1:] != ranked[:-1]])]
    lo, hi = xs[t[win]], xs[t[win] + 1]
    thr = 0.5 * (lo + hi)
    thr = np.where((lo < thr) & (thr <= hi), thr, hi)
    return slots[t[win]], cols[t[win]], sse[win], thr


def _grow(X, y, max_depth, min_leaf, fraction, rng):
    n, n_features = X.shape
    k = _features_per_split(fraction, n_features)
    order = np.argsort(X, axis=0, kind='stable')
    node_of = np.zeros(n, dtype=np.intp)
    feature = np.full(1, -1, dtype=np.intp)
    threshold = np.zeros(1)
    left = np.full(1, -1, dtype=np.intp)
    right = np.full(1, -1, dtype=np.intp)
    value = np.full(1, np.mean(y))
    frontier = np.zeros(1, dtype=np.intp)

    for _ in range(max_depth):
        n_slots = frontier.size
        slot_of_node = np.full(feature.size, -1, dtype=np.intp)
        slot_of_node[frontier] = np.arange(n_slots)
        row_slot = slot_of_node[node_of]
        inside = np.flatnonzero(row_slot >= 0)
        slot_in = row_slot[inside]

        counts = np.bincount(slot_in, minlength=n_slots)
        resid = np.zeros(n)
        resid[inside] = y[inside] - value[frontier][slot_in]
        node_sse = np.bincount(slot_in, weights=resid[inside] ** 2, minlength=n_slots)
        tol = _SCORE_RTOL * np.maximum(
            1.0, np.bincount(slot_in, weights=y[inside] ** 2, minlength=n_slots))

        is_open = (counts >= 2 * min_leaf) & (node_sse > 0.0)
        if not is_open.any():
            break
        candidate = is_open[:, np.newaxis] & _choose_features(rng, n_slots, n_features, k)

        best = np.full(n_slots, np.inf)
        best_feature = np.full(n_slots, -1, dtype=np.intp)
        best_threshold = np.zeros(n_slots)
        slots, feats, sse, thr = _level_splits(X, resid, order, row_slot, counts,
                                               candidate, min_leaf)
        # features in ascending order; a later one must be strictly better
        for j in np.unique(feats):
            pick = np.flatnonzero(feats == j)
            pick = pick[sse[pick] < best[slots[pick]] - tol[slots[pick]]]
            best[slots[pick]] = sse[pick]
            best_feature[slots[pick]] = j
            best_threshold[slots[pick]] = thr[pick]

        split = np.flatnonzero(np.isfinite(best) & (best < node_sse - tol))
        if not split.size:
            break
        parents = frontier[split]
        children = np.full((n_slots, 2), -1, dtype=np.intp)
        children[split] = feature.size + np.arange(2 * split.size).reshape(-1, 2)
        feature[parents] = best_feature[split]
        threshold[parents] = best_threshold[split]
        left[parents] = children[split, 0]
        right[parents] = children[split, 1]

        moving = inside[np.isin(slot_in, split)]
        ms = row_slot[moving]
        go_right = X[moving, best_feature[ms]] >= best_threshold[ms]
        node_of[moving] = children[ms, go_right.astype(np.intp)]

        frontier = np.arange(feature.size, feature.size + 2 * split.size, dtype=np.intp)
        total = frontier[-1] + 1
        sums = np.bincount(node_of[moving], weights=y[moving], minlength=total)
        sizes = np.bincount(node_of[moving], minlength=total)
        value = np.concatenate([value, sums[frontier] / sizes[frontier]])
        feature = np.concatenate([feature, np.full(frontier.size, -1, dtype=np.intp)])
        threshold = np.concatenate([threshold, np.zeros(frontier.size)])
        left = np.concatenate([left, np.full(frontier.size, -1, dtype=np.intp)])
        right = np.concatenate([right, np.full(frontier.size, -1, dtype=np.intp)])

    return RegressionTree(feature, threshold, left, right, value, n_features)


def fit_tree(X, y, max_depth=8, min_samples_leaf=1, rng=None,
             feature_fraction=1.0):
    """
    Grow one regression tree by greedy squared-error reduction.

    Parameters
    ----------
    X : array_like, shape (n, m)
    y : array_like, shape (n,)
    max_depth : int
    min_samples_leaf : int
    rng : numpy.random.Generator, optional
        Only drawn from when ``feature_fraction`` selects fewer than ``m``
        features per split.
    feature_fraction : float or 'sqrt'

    Returns
    -------
    tree : RegressionTree

    Examples
    --------
    >>> x = [[1], [2], [3], [4], [5], [6], [7], [8]]
    >>> t = fit_tree(x, [0, 0, 0, 0, 10, 10, 10, 10], max_depth=1)
    >>> float(t.threshold[0]), t.predict([[4.5]]).tolist()
    (4.5, [10.0])
    """
    X, y = _check_training(X, y)
    if max_depth < 1 or min_samples_leaf < 1:
        raise RegressorError("max_depth and min_samples_leaf must be at least 1")
    if rng is None:
        rng = np.random.default_rng(0)
    return _grow(X, y, int(max_depth), int(min_samples_leaf), feature_fraction, rng)


#################
#
#
#               Ensembles
#
#################

class Forest:
    """Average of independently grown trees."""

    def __init__(self, spec, trees):
        self.spec = spec
        self.trees = list(trees)
        self.n_features = self.trees[0].n_features

    def predict(self, X):
        X = _check_rows(X, self.n_features)
        return np.mean([t.predict(X) for t in self.trees], axis=0)


class BoostedTrees:
    """``init + learning_rate * sum(tree(x))`` over the fitted stages."""

    def __init__(self, spec, init, trees):
        self.spec = spec
        self.init = float(init)
        self.trees = list(trees)
        self.n_features = self.trees[0].n_features

    def staged_predict(self, X):
        """Yield the prediction after every stage."""
        X = _check_rows(X, self.n_features)
        pred = np.full(X.shape[0], self.init)
        for tree in self.trees:
            pred = pred + self.spec.learning_rate * tree.predict(X)
            yield pred

    def predict(self, X):
        pred = None
        for pred in self.staged_predict(X):
            pass
        return pred


def _forest_tree(task):
    """Grow tree ``index`` of a forest; module level so it can run in a worker."""
    X, y, spec, index = task
    rng = tree_rng(spec.seed, index)
    if spec.bootstrap:
        rows = rng.integers(0, y.size, size=y.size)
        X, y = X[rows], y[rows]
    return _grow(X, y, spec.max_depth, spec.min_samples_leaf,
                 spec.feature_fraction, rng)


def fit_forest(X, y, spec, processes=1):
    """
    Random forest: ``spec.tree_count`` trees, each on a bootstrap resample of
    the rows when ``spec.bootstrap`` is set, with features re-drawn per split.

    Trees are grown in up to ``processes`` worker processes (0 or None for
    one per CPU); the result does not depend on the pool size.
    """
    X, y = _check_training(X, y)
    tasks = [(X, y, spec, index) for index in range(spec.tree_count)]
    pool_size = mputil.default_pool_size(len(tasks), processes)
    return Forest(spec, mputil.map_pool(_forest_tree, tasks, pool_size))


def fit_boosting(X, y, spec):
    """
    Gradient boosting on squared loss.

    Stage 0 predicts ``mean(y)``; every further stage fits a tree to the
    current residuals and adds ``learning_rate`` times its prediction.
    """
    X, y = _check_training(X, y)
    init = float(np.mean(y))
    pred = np.full(y.size, init)
    trees = []
    for index in range(spec.tree_count):
        tree = _grow(X, y - pred, spec.max_depth, spec.min_samples_leaf,
                     spec.feature_fraction, tree_rng(spec.seed, index))
        pred = pred + spec.learning_rate * tree.predict(X)
        trees.append(tree)
    return BoostedTrees(spec, init, trees)


def fit(X, y, spec, processes=1):
    """
    Fit the model family named by ``spec``.

    ``processes`` only applies to forests, whose trees are independent.
    """
    if spec.kind is RegressorKind.LINEAR:
        return fit_linear(X, y)
    if spec.kind is RegressorKind.RANDOM_FOREST:
        return fit_forest(X, y, spec, processes)
    return fit_boosting(X, y, spec)


def predict(model, x):
    """
    Prediction of a fitted model for the single feature vector ``x``.

    >>> predict(LinearModel([3.0], 1.0), [2.0])
    7.0
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.n_features:
        raise DimensionMismatch("Model expects {} features, got {}".format(
            model.n_features, x.size))
    return float(model.predict(x[np.newaxis, :])[0])
