"""CSV ingestion and JSON report serialization.

Serialized reports use **1-based** variable indices (column ``k`` of the
predictor block, in file order after the response column is removed) so they
line up with what a user sees in a spreadsheet.  The Python API itself is
0-based; the converters here are the only place the two meet.

Every JSON document has the envelope::

    {"version": "fbis-report/1", "config": {...}, "result": {...}, "timings": {...}}
"""

import csv
import json

import numpy as np

from .errors import MissingColumn, NonNumericCell, ParseError, TooFewRows
from .ifbis import IfbisConfig, IfbisIteration, IfbisTrace, StopReason
from .kernels import Kernel
from .mekro import MekroConfig, MekroModel
from .screening import Dataset, Rate, ScreeningConfig, ScreeningReport

__all__ = [
    "SCHEMA_VERSION",
    "dataset_to_csv",
    "envelope",
    "ifbis_config_from_dict",
    "ifbis_config_to_dict",
    "load_json",
    "mekro_config_from_dict",
    "mekro_config_to_dict",
    "mekro_model_from_dict",
    "mekro_model_to_dict",
    "read_dataset",
    "screening_config_from_dict",
    "screening_config_to_dict",
    "screening_report_from_dict",
    "screening_report_to_dict",
    "trace_from_dict",
    "trace_to_dict",
]

SCHEMA_VERSION = "fbis-report/1"


# --- CSV ---------------------------------------------------------------


def _resolve_response(header, response):
    if isinstance(response, (int, np.integer)):
        if not 0 <= response < len(header):
            raise MissingColumn(f"response column index {response} not in 0..{len(header) - 1}")
        return int(response)
    if response in header:
        return header.index(response)
    # a numeric selector that is not also a column name
    try:
        return _resolve_response(header, int(response))
    except ValueError:
        raise MissingColumn(f"response column {response!r} not found") from None


def read_dataset(path, response):
    """Load a CSV file with a header row into a :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    response : str or int
        Column name, or 0-based column position.

    Notes
    -----
    Error locations are 1-based: ``row`` counts data rows (the header is
    row 0) and ``column`` counts fields from the left.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise TooFewRows(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    target = _resolve_response(header, response)
    body = rows[1:]
    if len(body) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, found {len(body)}")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: row {i} has {len(row)} fields, header has {len(header)}",
                row=i,
                column=min(len(row), len(header)) + 1,
            )
        for j, cell in enumerate(row):
            try:
                values[i - 1, j] = float(cell)
            except ValueError:
                raise NonNumericCell(
                    f"{path}: non-numeric cell {cell!r} at row {i}, column {j + 1}",
                    row=i,
                    column=j + 1,
                ) from None
    keep = [j for j in range(len(header)) if j != target]
    return Dataset(y=values[:, target], X=values[:, keep], names=[header[j] for j in keep])


def dataset_to_csv(data, response="y"):
    """Render a dataset as CSV text (response first, 17 significant digits)."""
    names = data.names or [f"X{j + 1}" for j in range(data.p)]
    lines = [",".join([response] + list(names))]
    for yi, row in zip(data.y, data.X):
        lines.append(",".join(f"{v:.17g}" for v in (yi, *row)))
    return "\n".join(lines) + "\n"


# --- JSON helpers ------------------------------------------------------


def _floats(a):
    return None if a is None else [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _one_based(indices):
    return [int(j) + 1 for j in indices]


def _zero_based(indices):
    return np.asarray([int(j) - 1 for j in indices], dtype=np.intp)


def _array(values, dtype=float):
    return None if values is None else np.asarray(values, dtype=dtype)


def envelope(config, result, timings=None):
    return {"version": SCHEMA_VERSION, "config": config, "result": result, "timings": timings or {}}


def load_json(text):
    doc = json.loads(text)
    if doc.get("version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported report version {doc.get('version')!r}")
    return doc


# --- configs -----------------------------------------------------------


def screening_config_to_dict(cfg):
    return {
        "tau": cfg.tau,
        "q": cfg.q,
        "n_permutations": cfg.n_permutations,
        "seed": cfg.seed,
        "rate": cfg.rate.value,
        "kernel": cfg.kernel.value,
        "rescale": cfg.rescale,
    }


def screening_config_from_dict(d):
    return ScreeningConfig(
        tau=d["tau"],
        q=d["q"],
        n_permutations=d["n_permutations"],
        seed=d["seed"],
        rate=Rate(d["rate"]),
        kernel=Kernel(d["kernel"]),
        rescale=d["rescale"],
    )


def mekro_config_to_dict(cfg):
    return {
        "xi_grid": _floats(cfg.xi_grid),
        "max_iterations": cfg.max_iterations,
        "tol": cfg.tol,
        "step": cfg.step,
        "shrink": cfg.shrink,
        "armijo": cfg.armijo,
        "restarts": cfg.restarts,
        "lambda_min": cfg.lambda_min,
        "seed": cfg.seed,
        "warm_start": cfg.warm_start,
        "kernel": cfg.kernel.value,
        "max_df_fraction": cfg.max_df_fraction,
    }


def mekro_config_from_dict(d):
    d = dict(d)
    d["kernel"] = Kernel(d["kernel"])
    return MekroConfig(**d)


def ifbis_config_to_dict(cfg):
    return {
        "screening": screening_config_to_dict(cfg.screening),
        "mekro": mekro_config_to_dict(cfg.mekro),
        "s0": cfg.s0,
        "k_max": cfg.k_max,
        "max_iterations": cfg.max_iterations,
        "rule": cfg.rule,
        "top_k": cfg.top_k,
    }


def ifbis_config_from_dict(d):
    return IfbisConfig(
        screening=screening_config_from_dict(d["screening"]),
        mekro=mekro_config_from_dict(d["mekro"]),
        s0=d["s0"],
        k_max=d["k_max"],
        max_iterations=d["max_iterations"],
        rule=d["rule"],
        top_k=d["top_k"],
    )


# --- reports -----------------------------------------------------------


def screening_report_to_dict(report, names=None):
    """Serialize a :class:`ScreeningReport`.

    ``selected``, ``ranking`` and ``hard_selected`` hold 1-based indices; the
    per-variable arrays are in column order.
    """
    d = {
        "h_star": float(report.h_star),
        "ic_inf": float(report.ic_inf),
        "omega": float(report.omega),
        "selected": _one_based(report.selected),
        "ranking": _one_based(report.ranking),
        "hard_selected": _one_based(report.hard_selected),
        "im": _floats(report.im),
        "ic_hstar": _floats(report.ic_hstar),
        "favored": [bool(v) for v in report.favored],
        "permutation_ims": _floats(report.permutation_ims),
        "constant": None if report.constant is None else [bool(v) for v in report.constant],
    }
    if names is not None:
        d["selected_names"] = [names[j] for j in report.selected]
    return d


def screening_report_from_dict(d):
    return ScreeningReport(
        h_star=d["h_star"],
        ic_inf=d["ic_inf"],
        ic_hstar=_array(d["ic_hstar"]),
        im=_array(d["im"]),
        favored=_array(d["favored"], bool),
        omega=d["omega"],
        selected=_zero_based(d["selected"]),
        permutation_ims=_array(d["permutation_ims"]),
        constant=_array(d["constant"], bool),
    )


def mekro_model_to_dict(model):
    """Serialize a :class:`MekroModel`; ``support`` holds 1-based positions
    within the variable list the model was fitted on."""
    return {
        "lambda": _floats(model.lam),
        "xi": float(model.xi),
        "objective": float(model.objective),
        "trace": float(model.trace),
        "bic": float(model.bic),
        "support": _one_based(model.selected),
        "converged": bool(model.converged),
        "iterations": int(model.iterations),
        "fitted": _floats(model.fitted),
        "history": _floats(model.history),
    }


def mekro_model_from_dict(d):
    return MekroModel(
        lam=_array(d["lambda"]),
        xi=d["xi"],
        objective=d["objective"],
        fitted=_array(d["fitted"]),
        trace=d["trace"],
        bic=d["bic"],
        selected=_zero_based(d["support"]),
        converged=d["converged"],
        iterations=d["iterations"],
        history=list(d["history"]),
    )


def _iteration_to_dict(it):
    return {
        "candidates": _one_based(it.candidates),
        "selected": _one_based(it.selected),
        "variables": _one_based(it.variables),
        "threshold": None if it.threshold is None else float(it.threshold),
        "conditional_ims": {str(j + 1): float(v) for j, v in it.conditional_ims.items()},
        "model": mekro_model_to_dict(it.model),
    }


def _iteration_from_dict(d):
    return IfbisIteration(
        candidates=[j - 1 for j in d["candidates"]],
        selected=[j - 1 for j in d["selected"]],
        variables=[j - 1 for j in d["variables"]],
        model=mekro_model_from_dict(d["model"]),
        conditional_ims={int(k) - 1: v for k, v in d["conditional_ims"].items()},
        threshold=d["threshold"],
    )


def trace_to_dict(trace, names=None):
    """Serialize an :class:`IfbisTrace` (1-based indices throughout)."""
    d = {
        "final_set": _one_based(trace.final_set),
        "stop_reason": trace.stop_reason.value,
        "h_star": float(trace.h_star),
        "kernel": trace.kernel.value,
        "iterations": [_iteration_to_dict(it) for it in trace.iterations],
        "screening": None if trace.screening is None else screening_report_to_dict(trace.screening),
        "lo": _floats(trace.lo),
        "hi": _floats(trace.hi),
    }
    if names is not None:
        d["final_names"] = [names[j] for j in trace.final_set]
    return d


def trace_from_dict(d):
    return IfbisTrace(
        iterations=[_iteration_from_dict(it) for it in d["iterations"]],
        final_set=[j - 1 for j in d["final_set"]],
        stop_reason=StopReason(d["stop_reason"]),
        h_star=d["h_star"],
        screening=None if d["screening"] is None else screening_report_from_dict(d["screening"]),
        lo=_array(d["lo"]),
        hi=_array(d["hi"]),
        kernel=Kernel(d["kernel"]),
    )
