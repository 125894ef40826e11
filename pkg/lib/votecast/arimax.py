"""
ARIMAX(p, d, q) models with exogenous regressors.

The series ``y`` is differenced ``d`` times, ``w = difference(y, d)``, and the
exogenous rows are differenced alongside it.  On the differenced scale::

    w[t] = c + beta . x[t] + sum_j phi[j] w[t-j] + e[t] + sum_k theta[k] e[t-k]

Estimation minimizes the conditional sum of squares (CSS) of the innovations
``e`` with pre-sample innovations fixed at zero, using the Nelder-Mead simplex
of `scipy.optimize.minimize`.  With ``method='profile'`` (the default) the
simplex runs over ``theta`` only and ``(c, beta, phi)`` are solved by least
squares at every vertex; ``method='joint'`` runs it over the whole
coefficient vector.  The MA polynomial is made invertible afterwards by
reflecting its roots out of the unit circle.

Forecasts iterate the conditional mean with future innovations at zero and
integrate back to levels.
"""
import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize, signal

__all__ = ['ArimaxError', 'SeriesTooShort', 'InconsistentInitials',
           'TooFewObservations', 'NonFiniteInput', 'ExogenousWidthMismatch',
           'HighDifferencingWarning', 'DegenerateVarianceWarning',
           'ArimaxOrder', 'ArimaxFit', 'difference', 'integrate',
           'initials_from', 'conditional_residuals', 'fit_arimax', 'extend',
           'forecast']

log = logging.getLogger(__name__)

METHODS = ('profile', 'joint')
CSS_TOLERANCE = 1e-10
EVALS_PER_PARAMETER = 500


class ArimaxError(ValueError):
    pass


class SeriesTooShort(ArimaxError):
    pass


class InconsistentInitials(ArimaxError):
    pass


class TooFewObservations(ArimaxError):
    pass


class NonFiniteInput(ArimaxError):
    pass


class ExogenousWidthMismatch(ArimaxError):
    pass


class HighDifferencingWarning(UserWarning):
    pass


class DegenerateVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ArimaxOrder:
    """Orders of the AR (``p``), differencing (``d``) and MA (``q``) parts."""
    p: int = 0
    d: int = 5
    q: int = 1
    method: str = 'profile'

    def __post_init__(self):
        for name in ('p', 'd', 'q'):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ArimaxError("{} must be a non-negative integer".format(name))
            object.__setattr__(self, name, int(value))
        if self.method not in METHODS:
            raise ArimaxError("method must be one of {}".format(METHODS))
        if self.d > 2:
            warnings.warn("Differencing order d={} is unusually high".format(self.d),
                          HighDifferencingWarning, stacklevel=3)

    @property
    def name(self):
        return 'arimax'

    def __str__(self):
        return '({},{},{})'.format(self.p, self.d, self.q)


@dataclass(frozen=True, eq=False)
class ArimaxFit:
    order: ArimaxOrder
    phi: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    intercept: float
    sigma2: float
    css: float
    last_values: np.ndarray
    last_residuals: np.ndarray
    last_exog: np.ndarray
    n_obs: int
    degenerate: bool = False

    @property
    def n_exog(self):
        return self.beta.size


def difference(y, d):
    """
    ``d``-fold first differences of ``y``.

    >>> difference([1, 2, 4, 8], 2).tolist()
    [1, 2]
    """
    y = np.asarray(y)
    if d < 0:
        raise ArimaxError("d must be non-negative")
    if y.shape[0] <= d:
        raise SeriesTooShort("Differencing {} values {} times leaves nothing".format(
            y.shape[0], d))
    return np.diff(y, n=d, axis=0) if d else y.copy()


def initials_from(head, d):
    """
    Integration initials from the last ``d`` levels of a series.

    Entry ``k`` is the last value of the ``k``-th difference of ``head``.
    """
    head = np.asarray(head)
    if head.shape[0] != d:
        raise InconsistentInitials("Need exactly {} levels, got {}".format(
            d, head.shape[0]))
    return np.array([np.diff(head, n=k)[-1] for k in range(d)])


def integrate(diffs, initials, d=None):
    """
    Undo ``d``-fold differencing.

    Parameters
    ----------
    diffs : array_like
        Values of the ``d``-th difference following the initials.
    initials : array_like
        Last value of the 0th .. (d-1)-th differences before ``diffs``,
        as returned by `initials_from`.
    d : int, optional
        Defaults to ``len(initials)``.

    Examples
    --------
    >>> integrate([1, 1], [5]).tolist()
    [6, 7]
    """
    initials = np.asarray(initials)
    if d is None:
        d = initials.shape[0]
    if initials.shape[0] != d:
        raise InconsistentInitials("{} initials given for d={}".format(
            initials.shape[0], d))
    x = np.asarray(diffs)
    for k in range(d - 1, -1, -1):
        x = initials[k] + np.cumsum(x, axis=0)
    return x


def _ma_filter(theta, values):
    """Solve ``e[t] + sum_k theta[k] e[t-k] = values[t]`` with zero pre-sample."""
    if theta.size == 0:
        return np.array(values, dtype=float)
    return signal.lfilter([1.0], np.r_[1.0, theta], values, axis=0)


class _Problem:
    """Differenced data of one fit and its CSS objectives."""

    def __init__(self, w, Xd, order):
        self.order = order
        p = order.p
        self.target = w[p:]
        columns = [np.ones(w.size - p)]
        if Xd is not None:
            columns.extend(Xd[p:].T)
        columns.extend(w[p - j:w.size - j] for j in range(1, p + 1))
        self.design = np.column_stack(columns)
        self.n_exog = 0 if Xd is None else Xd.shape[1]

    def split(self, linear):
        k = self.n_exog
        return linear[0], linear[1:1 + k], linear[1 + k:]

    def residuals(self, linear, theta):
        return _ma_filter(theta, self.target - self.design @ linear)

    def profile(self, theta):
        """Least-squares ``(c, beta, phi)`` for fixed ``theta`` and their CSS."""
        with np.errstate(over='ignore', invalid='ignore'):
            ft = _ma_filter(theta, self.target)
            fd = _ma_filter(theta, self.design)
            if not (np.all(np.isfinite(ft)) and np.all(np.isfinite(fd))):
                return None, np.inf
            linear = np.linalg.lstsq(fd, ft, rcond=None)[0]
            resid = ft - fd @ linear
        return linear, float(resid @ resid)

    def joint_css(self, params):
        width = self.design.shape[1]
        with np.errstate(over='ignore', invalid='ignore'):
            e = self.residuals(params[:width], params[width:])
            css = float(e @ e)
        return css if np.isfinite(css) else np.inf


def _minimize(func, x0, steps):
    simplex = np.vstack([x0] + [x0 + np.eye(x0.size)[i] * steps[i]
                                for i in range(x0.size)])
    return optimize.minimize(func, x0, method='Nelder-Mead',
                             options={'initial_simplex': simplex,
                                      'fatol': CSS_TOLERANCE, 'xatol': 1e-8,
                                      'maxfev': EVALS_PER_PARAMETER * x0.size})


def _invertible(theta):
    """Reflect MA roots inside the unit circle to ``1 / conj(root)``."""
    if theta.size == 0 or not np.any(theta):
        return theta
    roots = P.polyroots(np.r_[1.0, theta])
    inside = np.abs(roots) < 1.0
    if not np.any(inside):
        return theta
    roots[inside] = 1.0 / np.conj(roots[inside])
    coef = P.polyfromroots(roots)
    coef = np.real(coef / coef[0])
    return coef[1:]


def conditional_residuals(fit, y, X=None):
    """In-sample innovations of ``fit`` applied to ``(y, X)``."""
    w, Xd = _prepare(y, X, fit.order)
    problem = _Problem(w, Xd, fit.order)
    linear = np.r_[fit.intercept, fit.beta, fit.phi]
    return problem.residuals(linear, fit.theta)


def _prepare(y, X, order):
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("y contains NaN or infinite values")
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, np.newaxis]
        if X.shape[0] != y.size:
            raise ArimaxError("X has {} rows but y has {} values".format(
                X.shape[0], y.size))
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("X contains NaN or infinite values")
        if X.shape[1] == 0:
            X = None
    w = difference(y, order.d)
    Xd = None if X is None else difference(X, order.d)
    return w, Xd


def fit_arimax(y, X=None, order=None):
    """
    Estimate an ARIMAX model by conditional sum of squares.

    Parameters
    ----------
    y : array_like
        Endogenous series.
    X : array_like, shape (len(y), k), optional
        Exogenous rows aligned with ``y``.
    order : ArimaxOrder
        Defaults to ``ArimaxOrder()``.

    Returns
    -------
    fit : ArimaxFit

    Raises
    ------
    TooFewObservations
        Unless ``p + q + k + 1 < len(y) - d``.
    NonFiniteInput

    Examples
    --------
    >>> f = fit_arimax(np.arange(1.0, 21.0), order=ArimaxOrder(0, 1, 0))
    >>> round(f.intercept, 9), f.degenerate
    (1.0, True)
    """
    if order is None:
        order = ArimaxOrder()
    p, d, q = order.p, order.d, order.q
    y_arr = np.asarray(y, dtype=float).ravel()
    k = 0 if X is None else np.atleast_2d(np.asarray(X, dtype=float).T).shape[0]
    if p + q + k + 1 >= y_arr.size - d:
        raise TooFewObservations(
            "ARIMAX{} with {} regressors needs more than {} observations, got {}".format(
                order, k, p + q + k + 1 + d, y_arr.size))
    w, Xd = _prepare(y_arr, X, order)
    problem = _Problem(w, Xd, order)

    zero_theta = np.zeros(q)
    start_linear, start_css = problem.profile(zero_theta)
    if order.method == 'profile':
        linear, theta, css = start_linear, zero_theta, start_css
        if q:
            res = _minimize(lambda th: problem.profile(th)[1], zero_theta,
                            np.full(q, 0.1))
            if res.fun < start_css:
                theta = res.x
                linear, css = problem.profile(theta)
    else:
        width = problem.design.shape[1]
        x0 = np.zeros(width + q)
        # (c, beta) from least squares of w on X; phi and theta start at zero
        k1 = 1 + problem.n_exog
        x0[:k1] = np.linalg.lstsq(problem.design[:, :k1], problem.target,
                                  rcond=None)[0]
        start_css = problem.joint_css(x0)
        steps = np.where(x0 != 0.0, 0.1 * np.abs(x0), 0.1)
        res = _minimize(problem.joint_css, x0, steps)
        best = res.x if res.fun <= start_css else x0
        linear, theta = best[:width], best[width:]
        css = problem.joint_css(best)
        start_linear, start_css = x0[:width], start_css
        zero_theta = x0[width:]

    reflected = _invertible(theta)
    if reflected is not theta:
        linear_r, css_r = problem.profile(reflected)
        if css_r <= start_css:
            linear, theta, css = linear_r, reflected, css_r
        else:
            log.debug("Reflected MA solution is worse than the start; using the start")
            linear, theta, css = start_linear, zero_theta, start_css

    m = problem.target.size
    scale = max(1.0, float(problem.target @ problem.target))
    degenerate = css <= 1e-20 * scale
    if degenerate:
        css = 0.0
        warnings.warn("Innovation variance is zero: the differenced series is "
                      "fitted exactly", DegenerateVarianceWarning, stacklevel=2)

    resid = problem.residuals(linear, theta)
    last_resid = np.zeros(q)
    if q:
        tail = resid[-q:]
        last_resid[q - tail.size:] = tail
    c, beta, phi = problem.split(linear)
    last_exog = (np.zeros((0, problem.n_exog)) if Xd is None
                 else np.asarray(X, dtype=float).reshape(y_arr.size, -1)[y_arr.size - d:])
    log.debug("ARIMAX%s fitted on %d observations: css=%.6g", order, y_arr.size, css)
    return ArimaxFit(order=order, phi=np.asarray(phi, dtype=float),
                     theta=np.asarray(theta, dtype=float),
                     beta=np.asarray(beta, dtype=float), intercept=float(c),
                     sigma2=css / m, css=css,
                     last_values=y_arr[y_arr.size - (d + p):].copy(),
                     last_residuals=last_resid, last_exog=last_exog,
                     n_obs=y_arr.size, degenerate=bool(degenerate))


def extend(fit, y, X=None):
    """
    ``fit`` with its coefficients kept and its forecast state (last levels,
    residuals and exogenous rows) taken from the longer history ``(y, X)``.
    """
    order = fit.order
    y_arr = np.asarray(y, dtype=float).ravel()
    if y_arr.size <= order.d + order.p:
        raise SeriesTooShort("History too short for ARIMAX{}".format(order))
    resid = conditional_residuals(fit, y_arr, X)
    last_resid = np.zeros(order.q)
    if order.q:
        tail = resid[-order.q:]
        last_resid[order.q - tail.size:] = tail
    last_exog = fit.last_exog
    if fit.n_exog:
        X_arr = np.asarray(X, dtype=float).reshape(y_arr.size, -1)
        last_exog = X_arr[y_arr.size - order.d:]
    return replace(fit, last_values=y_arr[y_arr.size - (order.d + order.p):].copy(),
                   last_residuals=last_resid, last_exog=last_exog,
                   n_obs=y_arr.size)


def forecast(fit, h, X_future=None):
    """
    ``h``-step conditional-mean forecasts on the level scale.

    Parameters
    ----------
    fit : ArimaxFit
    h : int
    X_future : array_like, shape (h, k), optional
        Required exactly when the fit used exogenous regressors.  A flat
        array of ``h * k`` values is read row by row.

    Returns
    -------
    levels : numpy.ndarray, shape (h,)

    Raises
    ------
    ExogenousWidthMismatch
    """
    h = int(h)
    if h < 1:
        raise ArimaxError("h must be at least 1")
    order = fit.order
    k = fit.n_exog
    if k == 0:
        if X_future is not None and np.asarray(X_future).size:
            raise ExogenousWidthMismatch("Model was fitted without exogenous regressors")
        xd = np.zeros((h, 0))
    else:
        if X_future is None:
            raise ExogenousWidthMismatch("Model needs {} future regressors".format(k))
        X_future = np.asarray(X_future, dtype=float)
        if X_future.ndim == 1 and X_future.size == h * k:
            X_future = X_future.reshape(h, k)
        if X_future.shape != (h, k):
            raise ExogenousWidthMismatch(
                "Expected future regressors of shape ({}, {}), got {}".format(
                    h, k, X_future.shape))
        xd = difference(np.vstack([fit.last_exog, X_future]), order.d)

    d, p = order.d, order.p
    w_hist = list(difference(fit.last_values, d)) if p else []
    e_hist = list(fit.last_residuals)
    out = np.empty(h)
    for i in range(h):
        value = fit.intercept + float(xd[i] @ fit.beta)
        for j in range(1, p + 1):
            value += fit.phi[j - 1] * w_hist[-j]
        for j in range(1, order.q + 1):
            value += fit.theta[j - 1] * e_hist[-j]
        out[i] = value
        w_hist.append(value)
        e_hist.append(0.0)
    if d == 0:
        return out
    return integrate(out, initials_from(fit.last_values[fit.last_values.size - d:], d))
