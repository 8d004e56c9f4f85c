"""Favored-bandwidth independence screening.

Each predictor is smoothed marginally at two bandwidths, the small rate-optimal
``h* = (log p / n) ** (1/5)`` and ``INF`` (the sample mean).  Three decision
rules are built on these two fits:

* the hard rule keeps ``j`` when the penalised criterion at ``h*`` beats the
  one at ``INF`` (:func:`fbis_hard_select`);
* the tau-free importance measure ranks variables (:func:`importance_measure`);
* a permutation null sets the importance threshold
  (:func:`permutation_threshold`, :func:`fbis_screen`).

The penalty of the hard rule uses ``trace(S) - 1`` while the importance
measure divides by ``trace(S)``; both follow their published definitions and
are intentionally not reconciled.

Variable indices are 0-based column positions throughout the Python API.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._util import dataclass_eq

from .errors import (
    DataError,
    DegenerateFit,
    DegenerateResponse,
    EmptyData,
    InvalidDimension,
    NonFinite,
)
from .kernels import INF, Kernel, as_bandwidth, column_smooth, smoother_summary

__all__ = [
    "Dataset",
    "Rate",
    "ScreeningConfig",
    "ScreeningReport",
    "fbis_hard_select",
    "fbis_rank",
    "fbis_screen",
    "h_star",
    "ic",
    "ic_infinity",
    "importance_measure",
    "importance_measures",
    "lower_quantile",
    "penalty_scale",
    "permutation_threshold",
    "rescale_unit",
    "sis_rank",
]


@dataclass
class Dataset:
    """Response ``y`` (n,) and predictors ``X`` (n, p).

    ``truth`` optionally holds the 0-based indices of the important
    variables, for benchmarking.
    """

    y: np.ndarray
    X: np.ndarray
    names: list = None
    truth: tuple = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        if self.y.ndim != 1 or self.X.ndim != 2:
            raise DataError("y must be a vector and X a matrix")
        n, p = self.X.shape
        if self.y.size == 0 or n == 0:
            raise EmptyData("no observations")
        if self.y.size != n:
            raise DataError(f"y has {self.y.size} entries but X has {n} rows")
        if n < 2 or p < 1:
            raise InvalidDimension(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise NonFinite("dataset contains NaN or infinite values")
        if np.ptp(self.y) == 0:
            raise DegenerateResponse("response is constant")
        if self.names is not None:
            self.names = [str(s) for s in self.names]
            if len(self.names) != p:
                raise DataError(f"{len(self.names)} names for {p} columns")
        if self.truth is not None:
            self.truth = tuple(sorted(int(j) for j in self.truth))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def rescale_unit(X, lo=None, hi=None):
    """Min-max map the columns of ``X`` to [0, 1].

    ``lo``/``hi`` default to the column extremes of ``X`` (pass the training
    extremes to map new data consistently).  Constant columns map to 0.

    Returns ``(scaled, constant_mask)``.
    """
    X = np.asarray(X, dtype=float)
    lo = X.min(axis=0) if lo is None else np.asarray(lo, dtype=float)
    hi = X.max(axis=0) if hi is None else np.asarray(hi, dtype=float)
    span = hi - lo
    constant = span <= 0
    scaled = (X - lo) / np.where(constant, 1.0, span)
    if np.any(constant):
        scaled[..., constant] = 0.0
    return scaled, constant


class Rate(str, Enum):
    """Which log factor enters ``h*`` and the penalties."""

    P = "p"
    LOGN = "logn"


@dataclass
class ScreeningConfig:
    """Settings for FBIS.

    ``q`` is a quantile in [0, 1) of the permuted importance measures, or
    ``"max"`` for their maximum.  ``rescale`` min-max maps each predictor to
    [0, 1] before smoothing.
    """

    tau: float = 1.0
    q: object = "max"
    n_permutations: int = 1
    seed: int = 0
    rate: Rate = Rate.P
    kernel: Kernel = Kernel.EPANECHNIKOV
    rescale: bool = True

    def __post_init__(self):
        self.rate = Rate(self.rate)
        self.kernel = Kernel(self.kernel)
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if isinstance(self.q, str):
            if self.q.lower() != "max":
                raise ValueError(f"q must be a number in [0, 1) or 'max', got {self.q!r}")
            self.q = "max"
        elif not 0 <= self.q < 1:
            raise ValueError(f"q must lie in [0, 1), got {self.q}")
        if int(self.n_permutations) < 1:
            raise ValueError("n_permutations must be at least 1")
        self.n_permutations = int(self.n_permutations)
        self.seed = int(self.seed)


def _log_factor(n, p, rate):
    value = np.log(p) if Rate(rate) is Rate.P else np.log(n)
    if not value > 0:
        raise InvalidDimension(f"log factor must be positive (n={n}, p={p}, rate={Rate(rate).value})")
    return value


def h_star(n, p, rate=Rate.P):
    """Candidate bandwidth ``(L / n) ** (1/5)`` with ``L = log p`` or ``log n``."""
    if n < 2 or p < 1:
        raise InvalidDimension(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    return float((_log_factor(n, p, rate) / n) ** 0.2)


def penalty_scale(n, p, h, rate=Rate.P):
    """``(L / n) ** (1/2) * h ** (1/2)``, the per-degree-of-freedom penalty unit."""
    return float(np.sqrt(_log_factor(n, p, rate) / n) * np.sqrt(h))


def ic_infinity(y):
    """Criterion at the infinite bandwidth: log of the mean squared deviation."""
    y = np.asarray(y, dtype=float)
    mse = np.mean((y - y.mean()) ** 2)
    if not mse > 0:
        raise DegenerateResponse("response is constant")
    return float(np.log(mse))


def ic(x, y, h, cfg=None, p=None):
    """Penalised information criterion of one predictor at bandwidth ``h``.

    ``p`` is the total number of predictors (it enters the penalty through
    ``log p``); it defaults to 1 only when ``cfg.rate`` is ``Rate.LOGN``.
    """
    cfg = cfg or ScreeningConfig()
    h = as_bandwidth(h)
    if h is INF:
        return ic_infinity(y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if p is None:
        p = 1
    s = smoother_summary(x, y, h, cfg.kernel)
    mse = np.mean((y - s.fitted) ** 2)
    if not mse > 0:
        raise DegenerateResponse("zero residual sum of squares; criterion undefined")
    return float(np.log(mse) + cfg.tau * (s.trace - 1.0) * penalty_scale(len(y), p, h, cfg.rate))


def importance_measure(x, y, h_star, p, cfg=None):
    """Importance of one predictor: log-RSS drop from ``INF`` to ``h_star``
    divided by ``trace(S) * penalty_scale``."""
    cfg = cfg or ScreeningConfig()
    x = np.asarray(x, dtype=float)[:, None]
    im, _ = importance_measures(x, y, h_star, p, cfg)
    return float(im[0])


def importance_measures(X, y, h, p, cfg=None):
    """Vectorised :func:`importance_measure` over the columns of ``X``.

    Constant columns get exactly 0.  Returns ``(im, trace)``.
    """
    cfg = cfg or ScreeningConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    base = ic_infinity(y)
    fitted, trace, _ = column_smooth(X, y, h, cfg.kernel)
    mse = np.mean((y[:, None] - fitted) ** 2, axis=0)
    bad = ~(mse > 0)
    if np.any(bad):
        raise DegenerateFit("zero marginal residual sum of squares", variables=np.flatnonzero(bad))
    im = (base - np.log(mse)) / (trace * penalty_scale(n, p, h, cfg.rate))
    im[np.ptp(X, axis=0) == 0] = 0.0
    return im, trace


def _prepare(data, cfg):
    X = data.X
    constant = np.ptp(X, axis=0) == 0
    if cfg.rescale:
        X, constant = rescale_unit(X)
    return X, constant


def fbis_hard_select(data, cfg=None):
    """Indices whose criterion at ``h*`` is strictly below the one at ``INF``."""
    cfg = cfg or ScreeningConfig()
    X, _ = _prepare(data, cfg)
    _, ic_h, _, _ = _hard_rule(X, data.y, cfg)
    return np.flatnonzero(ic_h < ic_infinity(data.y))


def _hard_rule(X, y, cfg):
    n, p = X.shape
    h = h_star(n, p, cfg.rate)
    fitted, trace, _ = column_smooth(X, y, h, cfg.kernel)
    mse = np.mean((y[:, None] - fitted) ** 2, axis=0)
    bad = ~(mse > 0)
    if np.any(bad):
        raise DegenerateResponse(
            "zero residual sum of squares; criterion undefined", variables=np.flatnonzero(bad)
        )
    ic_h = np.log(mse) + cfg.tau * (trace - 1.0) * penalty_scale(n, p, h, cfg.rate)
    return h, ic_h, fitted, trace


def lower_quantile(values, q):
    """Lower empirical quantile: element ``ceil(q * m)`` of the sorted values
    (0-based, clamped to the last), or the maximum when ``q == "max"``."""
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        raise EmptyData("no values to take a quantile of")
    if q == "max":
        return float(values[-1])
    k = min(int(np.ceil(q * values.size)), values.size - 1)
    return float(values[k])


def _replicate_rng(seed, r):
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, r])


def permutation_threshold(data, cfg=None, X=None):
    """Importance threshold from row-permuted (null) data.

    Each replicate ``r`` draws a permutation from its own stream seeded by
    ``(cfg.seed, r)`` and scores every predictor on the decoupled pairs
    ``(X[pi[i], j], y[i])``.

    Returns ``(omega, permuted_ims)`` with ``permuted_ims`` of length
    ``p * n_permutations`` (replicate-major).
    """
    cfg = cfg or ScreeningConfig()
    if X is None:
        X, _ = _prepare(data, cfg)
    n, p = X.shape
    h = h_star(n, p, cfg.rate)
    out = []
    for r in range(cfg.n_permutations):
        perm = _replicate_rng(cfg.seed, r).permutation(n)
        # scoring (X[perm], y) equals scoring (X, y[inverse(perm)]); the NW
        # fit only depends on the set of (x, y) pairs
        y_null = np.empty_like(data.y)
        y_null[perm] = data.y
        im, _ = importance_measures(X, y_null, h, p, cfg)
        out.append(im)
    permuted = np.concatenate(out)
    return lower_quantile(permuted, cfg.q), permuted


def _rank(values):
    # descending, ties by ascending index
    return np.lexsort((np.arange(len(values)), -np.asarray(values)))


@dataclass(eq=False)
class ScreeningReport:
    h_star: float
    ic_inf: float
    ic_hstar: np.ndarray
    im: np.ndarray
    favored: np.ndarray
    omega: float
    selected: np.ndarray
    permutation_ims: np.ndarray
    constant: np.ndarray = field(default=None)

    @property
    def ranking(self):
        """All indices ordered by importance, descending."""
        return _rank(self.im)

    def top_k(self, k):
        return self.ranking[:k]

    @property
    def hard_selected(self):
        """The hard-rule set: variables whose favored bandwidth is ``h*``."""
        return np.flatnonzero(self.favored)

    __eq__ = dataclass_eq


def fbis_screen(data, cfg=None):
    """Full FBIS pass: criteria, importance measures and permutation selection."""
    cfg = cfg or ScreeningConfig()
    X, constant = _prepare(data, cfg)
    n, p = X.shape
    y = data.y
    h, ic_h, fitted, trace = _hard_rule(X, y, cfg)
    ic_inf = ic_infinity(y)
    mse = np.mean((y[:, None] - fitted) ** 2, axis=0)
    im = (ic_inf - np.log(mse)) / (trace * penalty_scale(n, p, h, cfg.rate))
    im[constant] = 0.0
    omega, permuted = permutation_threshold(data, cfg, X=X)
    keep = np.flatnonzero(im >= omega)
    selected = keep[_rank(im[keep])]
    return ScreeningReport(
        h_star=h,
        ic_inf=ic_inf,
        ic_hstar=ic_h,
        im=im,
        favored=ic_h < ic_inf,
        omega=omega,
        selected=selected,
        permutation_ims=permuted,
        constant=constant,
    )


def fbis_rank(data, cfg=None):
    """Importance-measure ranking only (no permutation null)."""
    cfg = cfg or ScreeningConfig()
    X, _ = _prepare(data, cfg)
    n, p = X.shape
    im, _ = importance_measures(X, data.y, h_star(n, p, cfg.rate), p, cfg)
    return _rank(im)


def sis_rank(data):
    """Linear sure independence screening: order by |Pearson correlation|."""
    X = data.X - data.X.mean(axis=0)
    y = data.y - data.y.mean()
    sx = np.sqrt((X * X).sum(axis=0))
    num = X.T @ y
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(sx > 0, num / (sx * np.sqrt(y @ y)), 0.0)
    return _rank(np.abs(corr))
