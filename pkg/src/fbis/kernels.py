"""Kernels and Nadaraya-Watson smoothers.

All smoothers evaluate the local-constant (Nadaraya-Watson) estimate

    g(e) = sum_k K_h(x_k - e) y_k / sum_k K_h(x_k - e)

with the self-weight included when ``e`` is a design point, so the implied
smoother matrix ``S`` has rows summing to one and ``trace(S)`` is the usual
effective degrees of freedom of the fit.

Kernel normalising constants and the ``1/h`` factor cancel in the ratio, so
weights are computed from the unnormalised kernel shape (``exp(-u**2/2)`` or
``1 - u**2``); ``Kernel.__call__`` returns the normalised density.

An infinite bandwidth is the dedicated :data:`INF` tag, never a large float.
A coordinate with bandwidth ``INF`` contributes a constant factor to every
product weight and drops out of the fit; when every coordinate is ``INF`` the
fit is the sample mean.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, EmptyData, NonFinite

__all__ = [
    "INF",
    "Kernel",
    "SmootherSummary",
    "WEIGHT_FLOOR",
    "as_bandwidth",
    "column_smooth",
    "is_infinite",
    "kernel_eval",
    "nw_fit",
    "nw_fit_product",
    "product_summary",
    "scaled_trace",
    "smoother_matrix",
    "smoother_summary",
    "smoother_trace_product",
]

WEIGHT_FLOOR = 1e-300
_SQRT_2PI = np.sqrt(2.0 * np.pi)

# element budget for one block of pairwise weights (~32 MB of float64)
_BLOCK_ELEMENTS = 1 << 22


class Kernel(str, Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    def __call__(self, u):
        """Normalised kernel density at ``u``."""
        u = np.asarray(u, dtype=float)
        if self is Kernel.GAUSSIAN:
            return np.exp(-0.5 * u * u) / _SQRT_2PI
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)

    @property
    def k0(self):
        return 1.0 / _SQRT_2PI if self is Kernel.GAUSSIAN else 0.75

    @property
    def compact(self):
        return self is Kernel.EPANECHNIKOV

    def shape(self, u):
        """Unnormalised weights ``K(u) / K(0)``, written into ``u`` in place."""
        np.square(u, out=u)
        if self is Kernel.GAUSSIAN:
            u *= -0.5
            np.exp(u, out=u)
        else:
            np.subtract(1.0, u, out=u)
            np.maximum(u, 0.0, out=u)
        return u


class _Infinite:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinite, ())


INF = _Infinite()


def is_infinite(h):
    return h is INF


def as_bandwidth(h):
    """Validate a bandwidth: ``INF`` or a finite positive float."""
    if h is INF:
        return h
    h = float(h)
    if not np.isfinite(h) or h <= 0:
        raise ValueError(f"bandwidth must be positive and finite or INF, got {h!r}")
    return h


def kernel_eval(u, kernel=Kernel.GAUSSIAN):
    return float(Kernel(kernel)(float(u)))


@dataclass(frozen=True)
class SmootherSummary:
    fitted: np.ndarray
    trace: float
    degenerate_rows: int = 0


def _as_vector(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or infinite values")
    return a


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DataError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or infinite values")
    return a


def _check_xy(X, y):
    if y.shape[0] == 0 or X.shape[0] == 0:
        raise EmptyData("no observations")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"x has {X.shape[0]} rows but y has {y.shape[0]}")


def _bandwidths(h, d):
    if h is INF or np.isscalar(h):
        h = [h] * d
    h = [as_bandwidth(v) for v in h]
    if len(h) != d:
        raise DataError(f"expected {d} bandwidths, got {len(h)}")
    return h


def _smooth(X, y, h, E, kernel, diagonal):
    """Product-kernel NW fit of ``y`` on ``X`` evaluated at rows of ``E``.

    Returns ``(fitted, diag, degenerate)``; ``diag`` holds the smoother
    diagonal ``S(i, i)`` when ``diagonal`` is set (``E`` is then ``X``).
    """
    kernel = Kernel(kernel)
    n = X.shape[0]
    m = E.shape[0]
    ybar = y.mean() if y is not None else 0.0
    finite = [j for j, hj in enumerate(h) if hj is not INF]
    if not finite:
        fitted = np.full(m, ybar)
        diag = np.full(m, 1.0 / n) if diagonal else None
        return fitted, diag, 0

    scale = np.array([h[j] for j in finite])
    Xs = X[:, finite] / scale
    Es = E[:, finite] / scale
    fitted = np.empty(m)
    diag = np.empty(m) if diagonal else None
    degenerate = 0
    rows = max(1, _BLOCK_ELEMENTS // (n * len(finite)))
    for start in range(0, m, rows):
        stop = min(m, start + rows)
        if kernel is Kernel.GAUSSIAN:
            # exp(-sum u^2 / 2) == product of per-coordinate weights
            sq = np.zeros((stop - start, n))
            for f in range(len(finite)):
                u = Es[start:stop, f, None] - Xs[None, :, f]
                sq += u * u
            W = np.exp(-0.5 * sq)
        else:
            W = None
            for f in range(len(finite)):
                u = Es[start:stop, f, None] - Xs[None, :, f]
                w = kernel.shape(u)
                W = w if W is None else W * w
        den = W.sum(axis=1)
        bad = ~(den >= WEIGHT_FLOOR)
        safe = np.where(bad, 1.0, den)
        if y is not None:
            fitted[start:stop] = np.where(bad, ybar, (W @ y) / safe)
        if diagonal:
            idx = np.arange(stop - start)
            diag[start:stop] = np.where(bad, 1.0 / n, W[idx, start + idx] / safe)
        degenerate += int(bad.sum())
    return fitted, diag, degenerate


def _trace(diag, h):
    # an all-INF fit is the mean; its trace is exactly 1, not a sum of 1/n
    return 1.0 if all(v is INF for v in h) else float(diag.sum())


def nw_fit(x, y, h, eval_points=None, kernel=Kernel.GAUSSIAN):
    """Univariate Nadaraya-Watson fit.

    Parameters
    ----------
    x, y : array_like, shape (n,)
        Design points and responses.
    h : float or INF
        Bandwidth.
    eval_points : array_like, shape (m,), optional
        Where to evaluate the fit; defaults to the design points ``x``.
    kernel : Kernel

    Returns
    -------
    ndarray, shape (m,)
        Fitted values.  Points whose kernel weights sum to less than
        :data:`WEIGHT_FLOOR` get the sample mean of ``y``.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    _check_xy(x, y)
    e = x if eval_points is None else _as_vector(eval_points, "eval_points")
    fitted, _, _ = _smooth(x[:, None], y, [as_bandwidth(h)], e[:, None], kernel, False)
    return fitted


def smoother_summary(x, y, h, kernel=Kernel.GAUSSIAN):
    """Fitted values at the design points together with ``trace(S)``."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    _check_xy(x, y)
    h = [as_bandwidth(h)]
    fitted, diag, bad = _smooth(x[:, None], y, h, x[:, None], kernel, True)
    return SmootherSummary(fitted, _trace(diag, h), bad)


def smoother_matrix(x, h, kernel=Kernel.GAUSSIAN):
    """Dense smoother matrix ``S`` for a univariate or product-kernel fit.

    ``x`` may be a vector or an ``(n, d)`` matrix; ``h`` a bandwidth or a
    sequence of ``d`` bandwidths.  Intended for small ``n``.
    """
    X = _as_matrix(x, "x")
    n = X.shape[0]
    if n == 0:
        raise EmptyData("no observations")
    return np.column_stack(
        [_smooth(X, col, _bandwidths(h, X.shape[1]), X, kernel, False)[0] for col in np.eye(n)]
    )


def nw_fit_product(X, y, h, eval_points=None, kernel=Kernel.GAUSSIAN):
    """Multivariate NW fit with product kernel ``prod_j K_{h_j}``."""
    X = _as_matrix(X, "X")
    y = _as_vector(y, "y")
    _check_xy(X, y)
    E = X if eval_points is None else _as_matrix(eval_points, "eval_points")
    if E.shape[1] != X.shape[1]:
        raise DataError(f"eval_points have {E.shape[1]} columns, X has {X.shape[1]}")
    fitted, _, _ = _smooth(X, y, _bandwidths(h, X.shape[1]), E, kernel, False)
    return fitted


def product_summary(X, y, h, kernel=Kernel.GAUSSIAN):
    X = _as_matrix(X, "X")
    y = _as_vector(y, "y")
    _check_xy(X, y)
    h = _bandwidths(h, X.shape[1])
    fitted, diag, bad = _smooth(X, y, h, X, kernel, True)
    return SmootherSummary(fitted, _trace(diag, h), bad)


def smoother_trace_product(X, h, kernel=Kernel.GAUSSIAN):
    X = _as_matrix(X, "X")
    if X.shape[0] == 0:
        raise EmptyData("no observations")
    h = _bandwidths(h, X.shape[1])
    _, diag, _ = _smooth(X, None, h, X, kernel, True)
    return _trace(diag, h)


def scaled_trace(x, h, kernel=Kernel.GAUSSIAN):
    """``h * trace(S)``; approaches ``K(0)`` as n grows and h shrinks."""
    x = _as_vector(x, "x")
    if x.size == 0:
        raise EmptyData("no observations")
    h = as_bandwidth(h)
    if h is INF:
        raise ValueError("scaled trace needs a finite bandwidth")
    _, diag, _ = _smooth(x[:, None], None, [h], x[:, None], kernel, True)
    return h * float(diag.sum())


def column_smooth(X, y, h, kernel=Kernel.GAUSSIAN, base=None):
    """Smooth ``y`` on every column of ``X`` separately, at the design points.

    This is the batched hot path for screening.  Each column ``j`` gets the
    weights ``base * K((x_kj - x_ij) / h)``; ``base`` is an optional fixed
    ``(n, n)`` weight matrix contributed by another coordinate (the bivariate
    conditional fits use it), with ``base[i, i]`` the self-weight.

    Returns
    -------
    fitted : ndarray, shape (n, p)
    trace : ndarray, shape (p,)
    degenerate : ndarray of int, shape (p,)
    """
    kernel = Kernel(kernel)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    ybar = y.mean()
    fitted = np.empty((n, p))
    trace = np.empty(p)
    degenerate = np.zeros(p, dtype=int)
    if h is INF:
        if base is None:
            fitted[:] = ybar
            trace[:] = 1.0
            return fitted, trace, degenerate
        den = base.sum(axis=1)
        bad = ~(den >= WEIGHT_FLOOR)
        safe = np.where(bad, 1.0, den)
        f = np.where(bad, ybar, (base @ y) / safe)
        t = np.where(bad, 1.0 / n, np.diag(base) / safe).sum()
        fitted[:] = f[:, None]
        trace[:] = t
        degenerate[:] = bad.sum()
        return fitted, trace, degenerate

    Xs = X / h
    self_weight = np.ones(n) if base is None else np.diag(base).copy()
    block = max(1, _BLOCK_ELEMENTS // (n * n))
    for start in range(0, p, block):
        stop = min(p, start + block)
        cols = Xs[:, start:stop].T
        W = cols[:, :, None] - cols[:, None, :]
        kernel.shape(W)
        if base is not None:
            W *= base
        den = W.sum(axis=2)
        bad = ~(den >= WEIGHT_FLOOR)
        safe = np.where(bad, 1.0, den)
        fitted[:, start:stop] = np.where(bad, ybar, (W @ y) / safe).T
        trace[start:stop] = np.where(bad, 1.0 / n, self_weight / safe).sum(axis=1)
        degenerate[start:stop] = bad.sum(axis=1)
    return fitted, trace, degenerate
