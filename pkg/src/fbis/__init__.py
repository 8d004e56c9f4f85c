"""Favored-bandwidth independence screening for ultrahigh-dimensional
nonparametric regression.

Marginal screening (:func:`fbis_screen`) compares two Nadaraya-Watson fits
per predictor, at a small rate-optimal bandwidth and at an infinite one.
:func:`ifbis_run` iterates it with a budget-constrained multivariate kernel
regression (:func:`mekro_bic_path`) to recover predictors that only act
jointly.  Variable indices are 0-based in the Python API.
"""

__version__ = "0.1.0"

from .errors import (
    DataError,
    DegenerateFit,
    DegenerateResponse,
    DegenerateSurrogate,
    FBISError,
    NumericalError,
    UsageError,
)
from .kernels import (
    INF,
    Kernel,
    kernel_eval,
    nw_fit,
    nw_fit_product,
    smoother_matrix,
    smoother_summary,
    smoother_trace_product,
)
from .screening import (
    Dataset,
    Rate,
    ScreeningConfig,
    ScreeningReport,
    fbis_hard_select,
    fbis_rank,
    fbis_screen,
    h_star,
    importance_measure,
    permutation_threshold,
    sis_rank,
)
from .mekro import MekroConfig, MekroModel, mekro_bic_path, mekro_fit, mekro_predict, project_feasible
from .ifbis import IfbisConfig, IfbisTrace, StopReason, conditional_importance, ifbis_predict, ifbis_run
from .datagen import SimSpec, gen_correlated_uniforms, gen_example
from .bench import BenchResult, evaluate_selection, mspe, run_table1, run_table2
