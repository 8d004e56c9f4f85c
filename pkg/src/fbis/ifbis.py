"""Iterative FBIS.

1. Screen marginally (:func:`~fbis.screening.fbis_screen`) to get ``A_1``.
2. Refine ``A_1`` with the BIC-tuned MEKRO path to get ``M_1``.
3. Use the MEKRO fitted values, rescaled to [0, 1], as a one-dimensional
   surrogate ``Z`` for the selected variables.
4. Score every ``j`` outside ``M_l`` by a conditional importance measure from
   two bivariate fits on ``(Z, X_j)``, bandwidths ``(h*, INF)`` versus
   ``(h*, h*)``, and keep those above a permutation threshold (at most
   ``k_max``): ``A_{l+1}``.
5. Refit MEKRO on ``M_l | A_{l+1}`` to get ``M_{l+1}``.
6. Repeat 3-5 until the set stops changing or reaches ``s0`` variables.

Stop reasons, checked in this order each round: ``size_cap`` (``|M_l| >= s0``),
``iteration_cap``, ``empty_addition`` (no variable left to score), and
``converged`` (``M_{l+1} == M_l``, including the case where nothing passes the
conditional threshold).  An empty ``M_1`` stops immediately as
``converged``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._util import dataclass_eq

from .errors import DegenerateSurrogate
from .kernels import INF, Kernel, column_smooth
from .mekro import MekroConfig, mekro_bic_path, mekro_predict
from .screening import (
    ScreeningConfig,
    _rank,
    _replicate_rng,
    fbis_screen,
    h_star,
    ic_infinity,
    lower_quantile,
    penalty_scale,
    rescale_unit,
)

__all__ = [
    "IfbisConfig",
    "IfbisIteration",
    "IfbisTrace",
    "StopReason",
    "conditional_importance",
    "conditional_importances",
    "ifbis_predict",
    "ifbis_run",
    "surrogate",
]

_DEN_EPS = 1e-12


class StopReason(str, Enum):
    CONVERGED = "converged"
    SIZE_CAP = "size_cap"
    ITERATION_CAP = "iteration_cap"
    EMPTY_ADDITION = "empty_addition"


@dataclass
class IfbisConfig:
    """IFBIS settings.

    ``rule`` is ``"permutation"`` (threshold at the permuted maximum, or the
    quantile ``screening.q``) or ``"top_k"`` (keep the ``top_k`` best
    conditional scores).  ``s0=None`` means ``floor(n / log n)``.
    """

    screening: ScreeningConfig = field(default_factory=ScreeningConfig)
    mekro: MekroConfig = field(default_factory=MekroConfig)
    s0: int = None
    k_max: int = 10
    max_iterations: int = 10
    rule: str = "permutation"
    top_k: int = 10

    def __post_init__(self):
        if self.rule not in ("permutation", "top_k"):
            raise ValueError(f"rule must be 'permutation' or 'top_k', got {self.rule!r}")
        if self.s0 is not None and self.s0 < 1:
            raise ValueError("s0 must be at least 1")
        if self.k_max < 1 or self.top_k < 1 or self.max_iterations < 1:
            raise ValueError("k_max, top_k and max_iterations must be at least 1")

    def model_size_cap(self, n):
        return self.s0 if self.s0 is not None else max(1, int(np.floor(n / np.log(n))))


@dataclass(eq=False)
class IfbisIteration:
    """One round: candidates ``A_l`` and MEKRO survivors ``M_l``.

    ``variables`` lists the columns MEKRO was run on, in the order of
    ``model.lam``.
    """

    candidates: list
    selected: list
    variables: list
    model: object
    conditional_ims: dict = field(default_factory=dict)
    threshold: float = None

    __eq__ = dataclass_eq


@dataclass(eq=False)
class IfbisTrace:
    iterations: list
    final_set: list
    stop_reason: StopReason
    h_star: float
    screening: object = None
    lo: np.ndarray = None
    hi: np.ndarray = None
    kernel: Kernel = Kernel.GAUSSIAN

    @property
    def final_model(self):
        return self.iterations[-1].model if self.iterations else None

    __eq__ = dataclass_eq


def surrogate(fitted):
    """Min-max rescale MEKRO fitted values (a model or an array) to [0, 1]."""
    fitted = np.asarray(getattr(fitted, "fitted", fitted), dtype=float)
    lo, hi = fitted.min(), fitted.max()
    if not hi > lo:
        raise DegenerateSurrogate("fitted values are constant; surrogate carries no information")
    return (fitted - lo) / (hi - lo)


def conditional_importances(z, X, y, h, p, cfg=None):
    """Conditional importance of every column of ``X`` given surrogate ``z``.

    Compares the bivariate NW fits at bandwidths ``(h, INF)`` and ``(h, h)``
    on ``(z, x_j)``; the first is the univariate fit on ``z``.  Columns whose
    extra degrees of freedom ``trace(S_hh) - trace(S_hINF)`` do not exceed
    1e-12 get 0 and are flagged.

    Returns ``(ims, degenerate_mask)``.
    """
    cfg = cfg or ScreeningConfig()
    z = np.asarray(z, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    ic_infinity(y)
    n = len(y)
    base = (z[:, None] - z[None, :]) / h
    cfg.kernel.shape(base)
    f_z, tr_z, _ = column_smooth(z[:, None], y, INF, cfg.kernel, base=base)
    fitted, trace, _ = column_smooth(X, y, h, cfg.kernel, base=base)
    rss_z = np.mean((y - f_z[:, 0]) ** 2)
    rss = np.mean((y[:, None] - fitted) ** 2, axis=0)
    den = (trace - tr_z[0]) * penalty_scale(n, p, h, cfg.rate)
    degenerate = ~(trace - tr_z[0] > _DEN_EPS) | ~(rss > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ims = (np.log(rss_z) - np.log(rss)) / den
    ims[degenerate] = 0.0
    return ims, degenerate


def conditional_importance(z, x, y, h_star, p, cfg=None):
    ims, _ = conditional_importances(z, np.asarray(x, dtype=float)[:, None], y, h_star, p, cfg)
    return float(ims[0])


def _conditional_step(z, X, y, h, p, outside, cfg, limit, round_index):
    ims, _ = conditional_importances(z, X[:, outside], y, h, p, cfg.screening)
    scores = dict(zip(outside.tolist(), ims.tolist()))
    if cfg.rule == "top_k":
        order = _rank(ims)[: min(cfg.top_k, limit)]
        return outside[order].tolist(), scores, None
    null = []
    for r in range(cfg.screening.n_permutations):
        # a separate stream per round and replicate
        rng = _replicate_rng(cfg.screening.seed, 1000 * round_index + r)
        perm = rng.permutation(X.shape[0])
        null.append(conditional_importances(z, X[perm][:, outside], y, h, p, cfg.screening)[0])
    omega = lower_quantile(np.concatenate(null), cfg.screening.q)
    passing = np.flatnonzero(ims >= omega)
    order = passing[_rank(ims[passing])][: min(cfg.k_max, limit)]
    return outside[order].tolist(), scores, omega


def _refine(X, y, variables, cfg):
    best, _ = mekro_bic_path(X[:, variables], y, cfg.mekro)
    selected = sorted(variables[k] for k in best.selected)
    return best, selected


def ifbis_run(data, cfg=None):
    """Run IFBIS on a :class:`~fbis.screening.Dataset`."""
    cfg = cfg or IfbisConfig()
    y = data.y
    if cfg.screening.rescale:
        X, _ = rescale_unit(data.X)
        lo, hi = data.X.min(axis=0), data.X.max(axis=0)
    else:
        X, lo, hi = data.X, None, None
    n, p = X.shape
    h = h_star(n, p, cfg.screening.rate)
    s0 = cfg.model_size_cap(n)

    report = fbis_screen(data, cfg.screening)
    candidates = report.selected.tolist()
    iterations = []
    if not candidates:
        return IfbisTrace(iterations, [], StopReason.CONVERGED, h, report, lo, hi, cfg.mekro.kernel)
    model, selected = _refine(X, y, candidates, cfg)
    iterations.append(IfbisIteration(candidates, selected, candidates, model))

    while True:
        current = iterations[-1]
        if not current.selected:
            reason = StopReason.CONVERGED
            break
        if len(current.selected) >= s0:
            reason = StopReason.SIZE_CAP
            break
        if len(iterations) >= cfg.max_iterations:
            reason = StopReason.ITERATION_CAP
            break
        outside = np.setdiff1d(np.arange(p), current.selected)
        if outside.size == 0:
            reason = StopReason.EMPTY_ADDITION
            break
        limit = s0 - len(current.selected)
        try:
            z = surrogate(current.model)
            added, scores, omega = _conditional_step(z, X, y, h, p, outside, cfg, limit, len(iterations))
        except DegenerateSurrogate:
            # null MEKRO fit: fall back to the marginal ranking
            ranked = [j for j in report.selected.tolist() if j not in current.selected]
            added, scores, omega = ranked[: min(cfg.k_max, limit)], {}, None
        # survivors first, largest inverse bandwidth leading, so the MEKRO
        # restart that concentrates on column 0 starts from the strongest one
        lam = dict(zip(current.variables, current.model.lam))
        survivors = sorted(current.selected, key=lambda j: (-lam[j], j))
        variables = survivors + added
        model, selected = _refine(X, y, variables, cfg)
        iterations.append(IfbisIteration(added, selected, variables, model, scores, omega))
        if selected == current.selected:
            reason = StopReason.CONVERGED
            break

    return IfbisTrace(
        iterations, iterations[-1].selected, reason, h, report, lo, hi, cfg.mekro.kernel
    )


def ifbis_predict(trace, data, X_new):
    """Predict at ``X_new`` (raw scale) from the final MEKRO fit of a run."""
    last = trace.final_model
    if last is None:
        return np.full(np.asarray(X_new).shape[0], data.y.mean())
    variables = trace.iterations[-1].variables
    X_train = data.X[:, variables]
    X_new = np.asarray(X_new, dtype=float)[:, variables]
    if trace.lo is not None:
        X_train, _ = rescale_unit(X_train, trace.lo[variables], trace.hi[variables])
        X_new, _ = rescale_unit(X_new, trace.lo[variables], trace.hi[variables])
    return mekro_predict(last.lam, X_train, data.y, X_new, trace.kernel)
