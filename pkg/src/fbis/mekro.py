"""Measurement-error kernel regression operator (MEKRO).

Minimises the in-sample residual sum of squares of a product-kernel
Nadaraya-Watson fit over per-variable inverse bandwidths ``lam_j = 1 / h_j``,

    minimise  sum_i (y_i - g(X_i; 1 / lam))^2
    subject to lam_j >= 0,  sum_j lam_j <= xi,

where ``lam_j = 0`` means ``h_j = INF`` (variable j is dropped).  The budget
``xi`` is chosen along a grid by BIC with the smoother trace as degrees of
freedom.

The optimiser is projected gradient descent with Armijo backtracking and a
few restarts.  The objective is not convex, so the restarts matter.  With the
Gaussian kernel the gradient is analytic.  The Epanechnikov kernel falls back
to central finite differences.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import dataclass_eq

from .errors import DataError, InvalidDimension, NonFinite, UnsupportedKernel
from .kernels import INF, Kernel, nw_fit_product

__all__ = [
    "MekroConfig",
    "MekroModel",
    "default_xi_grid",
    "mekro_bic",
    "mekro_bic_path",
    "mekro_fit",
    "mekro_gradient",
    "mekro_objective",
    "mekro_predict",
    "project_feasible",
]

_FD_STEP = 1e-5


def default_xi_grid(d, count=16):
    """``count`` log-spaced budgets from ``0.5 d`` to ``8 d``."""
    return np.geomspace(0.5 * d, 8.0 * d, count)


@dataclass
class MekroConfig:
    """Optimiser and tuning settings.

    ``xi_grid=None`` means :func:`default_xi_grid` for the number of
    candidate variables at hand.  ``max_df_fraction`` bounds the effective
    degrees of freedom a path model may use and still compete on BIC: a fit
    with ``trace > max_df_fraction * n`` is close to interpolating, its RSS
    collapses toward 0 and ``n log(RSS / n)`` stops measuring fit.
    """

    xi_grid: object = None
    max_iterations: int = 500
    tol: float = 1e-8
    step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    restarts: int = 3
    lambda_min: float = 1e-6
    seed: int = 0
    warm_start: bool = True
    kernel: Kernel = Kernel.GAUSSIAN
    max_df_fraction: float = 0.5

    def __post_init__(self):
        self.kernel = Kernel(self.kernel)
        if self.xi_grid is not None:
            grid = np.asarray(self.xi_grid, dtype=float)
            if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
                raise ValueError("xi_grid must be strictly ascending and positive")
            self.xi_grid = grid
        if not (self.tol > 0 and self.step > 0 and 0 < self.shrink < 1 and self.armijo > 0):
            raise ValueError("tolerances and step settings must be positive (shrink in (0, 1))")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be at least 1")
        if not 0 < self.max_df_fraction <= 1:
            raise ValueError("max_df_fraction must lie in (0, 1]")

    def grid_for(self, d):
        return default_xi_grid(d) if self.xi_grid is None else self.xi_grid


@dataclass(eq=False)
class MekroModel:
    lam: np.ndarray
    xi: float
    objective: float
    fitted: np.ndarray
    trace: float
    bic: float
    selected: np.ndarray
    converged: bool = True
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def bandwidths(self):
        return [INF if v == 0 else 1.0 / v for v in self.lam]

    __eq__ = dataclass_eq


class _Problem:
    """Cached pairwise squared differences for one design ``X`` (n, d)."""

    def __init__(self, X, y, kernel):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"inconsistent shapes X{X.shape}, y{y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise NonFinite("MEKRO inputs contain NaN or infinite values")
        self.X = X
        self.y = y
        self.n, self.d = X.shape
        self.kernel = Kernel(kernel)
        diff = X.T[:, :, None] - X.T[:, None, :]
        self.D2 = diff * diff
        self.tss = float(np.sum((y - y.mean()) ** 2))
        # the optimiser works on rss / tss, so step sizes do not depend on
        # the scale of y
        self.scale = self.tss if self.tss > 0 else 1.0

    def _check(self, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.d,):
            raise DataError(f"lambda has shape {lam.shape}, expected ({self.d},)")
        if not np.all(np.isfinite(lam)):
            raise NonFinite("lambda contains NaN or infinite values")
        if np.any(lam < 0):
            raise ValueError("lambda must be non-negative")
        return lam

    def weights(self, lam):
        active = np.flatnonzero(lam > 0)
        if active.size == 0:
            return np.ones((self.n, self.n))
        if self.kernel is Kernel.GAUSSIAN:
            E = np.tensordot(lam[active] ** 2, self.D2[active], axes=1)
            return np.exp(-0.5 * E)
        W = np.ones((self.n, self.n))
        for j in active:
            W *= np.maximum(1.0 - lam[j] ** 2 * self.D2[j], 0.0)
        return W

    def evaluate(self, lam, grad=False):
        """Return ``(rss, fitted, trace[, gradient])``."""
        W = self.weights(lam)
        S = W.sum(axis=1)
        fitted = (W @ self.y) / S
        r = self.y - fitted
        rss = float(r @ r)
        trace = float(np.sum(np.diag(W) / S))
        if not grad:
            return rss, fitted, trace
        if self.kernel is not Kernel.GAUSSIAN:
            return rss, fitted, trace, self.fd_gradient(lam)
        # d rss / d lam_j = 2 lam_j sum_ik D2_jik W_ik (y_k - fitted_i) r_i / S_i
        M = W * (self.y[None, :] - fitted[:, None])
        M *= (r / S)[:, None]
        g = 2.0 * lam * np.tensordot(self.D2, M, axes=([1, 2], [0, 1]))
        return rss, fitted, trace, g

    def scaled(self, lam):
        rss, _, _, g = self.evaluate(lam, grad=True)
        return rss / self.scale, g / self.scale

    def fd_gradient(self, lam, step=_FD_STEP):
        g = np.empty(self.d)
        for j in range(self.d):
            up = lam.copy()
            up[j] += step
            if lam[j] >= step:
                dn = lam.copy()
                dn[j] -= step
                g[j] = (self.evaluate(up)[0] - self.evaluate(dn)[0]) / (2 * step)
            else:
                # one-sided at the boundary
                g[j] = (self.evaluate(up)[0] - self.evaluate(lam)[0]) / step
        return g


def mekro_objective(lam, X, y, kernel=Kernel.GAUSSIAN):
    """Residual sum of squares of the product-kernel NW fit at ``h = 1 / lam``."""
    prob = _Problem(X, y, kernel)
    return prob.evaluate(prob._check(lam))[0]


def mekro_gradient(lam, X, y, kernel=Kernel.GAUSSIAN):
    """Analytic gradient of :func:`mekro_objective` (Gaussian kernel only).

    Raises
    ------
    UnsupportedKernel
        For kernels without a smooth derivative in ``lam``.
    """
    if Kernel(kernel) is not Kernel.GAUSSIAN:
        raise UnsupportedKernel(f"no analytic gradient for the {Kernel(kernel).value} kernel")
    prob = _Problem(X, y, kernel)
    return prob.evaluate(prob._check(lam), grad=True)[3]


def project_feasible(lam, xi):
    """Euclidean projection onto ``{lam >= 0, sum(lam) <= xi}``."""
    if not xi > 0:
        raise ValueError(f"xi must be positive, got {xi}")
    v = np.asarray(lam, dtype=float)
    clamped = np.maximum(v, 0.0)
    if clamped.sum() <= xi:
        return clamped
    # projection onto the face sum == xi (sorted-threshold algorithm)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - xi
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _descend(prob, lam0, xi, cfg):
    """One projected-gradient run; returns ``(lam, rss, converged, iters, history)``."""
    lam = project_feasible(lam0, xi)
    f, g = prob.scaled(lam)
    history = [f * prob.scale]
    t = cfg.step
    for it in range(1, cfg.max_iterations + 1):
        while True:
            cand = project_feasible(lam - t * g, xi)
            step = cand - lam
            if np.linalg.norm(step) <= 1e-12 * (1.0 + np.linalg.norm(lam)):
                return lam, f * prob.scale, True, it, history
            f_new = prob.evaluate(cand)[0] / prob.scale
            if f_new <= f + cfg.armijo * float(g @ step):
                break
            t *= cfg.shrink
            if t < 1e-20:
                return lam, f * prob.scale, True, it, history
        change = f - f_new
        lam = cand
        f, g = prob.scaled(lam)
        history.append(f * prob.scale)
        if change <= cfg.tol * max(abs(f), 1e-300):
            return lam, f * prob.scale, True, it, history
        t = t / cfg.shrink
    return lam, f * prob.scale, False, cfg.max_iterations, history


def _inits(d, xi, cfg, warm, rng):
    if warm is None:
        w = rng.uniform(0.5, 1.5, size=d)
        warm = w / w.sum() * (xi / 2.0)
    uniform = np.full(d, xi / (2.0 * d))
    top = np.zeros(d)
    top[0] = xi / 2.0
    return [np.asarray(warm, dtype=float), uniform, top][: cfg.restarts]


def mekro_bic(n, objective, trace):
    """``n log(RSS / n) + log(n) * trace``."""
    return float(n * np.log(objective / n) + np.log(n) * trace)


def _model(prob, lam, xi, cfg, converged, iters, history):
    rss, fitted, trace = prob.evaluate(lam)
    return MekroModel(
        lam=lam,
        xi=float(xi),
        objective=rss,
        fitted=fitted,
        trace=trace,
        bic=mekro_bic(prob.n, rss, trace) if rss > 0 else -np.inf,
        selected=np.flatnonzero(lam > cfg.lambda_min),
        converged=converged,
        iterations=iters,
        history=history,
    )


def _fit(prob, xi, cfg, warm=None):
    rng = np.random.default_rng([int(cfg.seed) & 0xFFFFFFFFFFFFFFFF, prob.d])
    best = None
    for init in _inits(prob.d, xi, cfg, warm, rng):
        run = _descend(prob, init, xi, cfg)
        if best is None or run[1] < best[1]:
            best = run
    lam, f, converged, iters, history = best
    if f > prob.tss:
        lam, converged, iters, history = np.zeros(prob.d), True, 0, [prob.tss]
    return _model(prob, lam, xi, cfg, converged, iters, history)


def mekro_fit(X, y, xi, cfg=None, init=None):
    """Fit MEKRO at a single budget ``xi``.

    Columns of ``X`` should be ordered by decreasing marginal importance: one
    restart concentrates the budget on column 0.  ``init`` supplies a warm
    start (replacing the random restart).  Non-convergence is reported through
    ``model.converged``, not raised.
    """
    cfg = cfg or MekroConfig()
    if not xi > 0:
        raise ValueError(f"xi must be positive, got {xi}")
    prob = _Problem(X, y, cfg.kernel)
    if prob.n < 3:
        raise InvalidDimension(f"MEKRO needs at least 3 observations, got {prob.n}")
    return _fit(prob, xi, cfg, None if init is None else prob._check(init))


def mekro_bic_path(X, y, cfg=None):
    """Fit every budget in the grid and return ``(best, path)``.

    Each fit is warm-started from the previous solution unless
    ``cfg.warm_start`` is off.  ``best`` minimises BIC over the fits whose
    trace is at most ``cfg.max_df_fraction * n``, ties going to the smaller
    budget.  If no fit qualifies, the one with the smallest trace wins.
    """
    cfg = cfg or MekroConfig()
    prob = _Problem(X, y, cfg.kernel)
    if prob.n < 3:
        raise InvalidDimension(f"MEKRO needs at least 3 observations, got {prob.n}")
    path = []
    warm = None
    for xi in cfg.grid_for(prob.d):
        model = _fit(prob, xi, cfg, warm)
        path.append(model)
        if cfg.warm_start:
            warm = model.lam
    cap = cfg.max_df_fraction * prob.n
    eligible = [k for k, m in enumerate(path) if m.trace <= cap]
    if eligible:
        best = min(eligible, key=lambda k: (path[k].bic, k))
    else:
        best = min(range(len(path)), key=lambda k: (path[k].trace, k))
    return path[best], path


def mekro_predict(lam, X_train, y_train, X_new, kernel=Kernel.GAUSSIAN):
    """Product-kernel NW prediction at ``X_new`` with bandwidths ``1 / lam``."""
    lam = np.asarray(lam, dtype=float)
    h = [INF if v <= 0 else 1.0 / v for v in lam]
    return nw_fit_product(X_train, y_train, h, eval_points=X_new, kernel=kernel)
