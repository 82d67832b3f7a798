"""Run persistence: the JSON report, impulse and spectrum CSV traces, and
Matrix Market output.

Every floating-point value is serialized with 17 significant digits, which
round-trips IEEE doubles exactly; report.json therefore reloads to an equal
structure. CSV files carry a header row, comma separators, and LF endings.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .optimality import OptimalityReport
from .reduction import ReductionRun
from .system import ErrorTrace

__all__ = [
    "MethodResult",
    "format_float",
    "report_document",
    "write_report",
    "write_matrix_market",
]


def format_float(x):
    """17-significant-digit decimal text for one finite float."""
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite value {x!r}")
    return f"{x:.16e}"


def _dumps(value, indent=0):
    pad = "  " * indent
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = []
        for key, item in value.items():
            if not isinstance(key, str):
                raise ValidationError(f"JSON keys must be strings, got {key!r}")
            items.append(
                f"{pad}  {json.dumps(key)}: {_dumps(item, indent + 1)}"
            )
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not len(value):
            return "[]"
        items = [f"{pad}  {_dumps(item, indent + 1)}" for item in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise ValidationError(f"cannot serialize {type(value).__name__} to JSON")


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return Path(path)


@dataclass(frozen=True)
class MethodResult:
    """Everything one method contributes to the report files."""

    run: ReductionRun
    optimality: OptimalityReport
    trace: ErrorTrace
    wall_time: float


def _complex_pairs(values):
    values = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in values]


def _method_block(result):
    run, rep = result.run, result.optimality
    metrics = {
        "e_c": rep.metrics.e_c,
        "e_b": rep.metrics.e_b,
        "e_lambda": rep.metrics.e_lambda,
    }
    deviations = None
    if rep.deviations is not None:
        deviations = {
            "e_c": float(np.linalg.norm(rep.deviations.e_c)),
            "e_b": float(np.linalg.norm(rep.deviations.e_b)),
            "e_lambda": float(np.linalg.norm(rep.deviations.e_lambda)),
        }
    return {
        "converged": bool(run.converged),
        "degraded": bool(run.degraded),
        "n_iterations": run.n_iterations,
        "wall_time_seconds": float(result.wall_time),
        "final_eigenvalues": _complex_pairs(run.final_reduced.eigenvalues),
        "iterations": [
            {
                "eigenvalues": _complex_pairs(rec.eigenvalues),
                "convergence": float(rec.convergence),
                "is_hurwitz": bool(rec.is_hurwitz),
            }
            for rec in run.iterations
        ],
        "metrics": metrics,
        "deviation_norms": deviations,
        "max_impulse_error": result.trace.max_absolute(),
    }


def report_document(config, results):
    """The report.json structure for an ordered {method name: MethodResult}
    mapping."""
    return {
        "config": config.to_dict(),
        "methods": {name: _method_block(res) for name, res in results.items()},
    }


def _float_or_empty(x):
    return "" if np.isnan(x) else format_float(x)


def write_report(config, results, out_dir=None):
    """Persist one run: report.json plus per-method impulse and spectrum CSVs.

    Returns {file kind: Path}. NaN relative-error samples become empty CSV
    cells; everything else is 17-significant-digit decimal.
    """
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": _write_text(
            out / "report.json", _dumps(report_document(config, results)) + "\n"
        )
    }
    for name, result in results.items():
        rows = ["t,eps_abs,eps_rel"]
        trace = result.trace
        for t, ea, er in zip(trace.times, trace.absolute, trace.relative):
            rows.append(
                f"{format_float(t)},{format_float(ea)},{_float_or_empty(er)}"
            )
        paths[f"impulse_{name}"] = _write_text(
            out / f"impulse_{name}.csv", "\n".join(rows) + "\n"
        )
        rows = ["re,im"]
        for re_, im_ in _complex_pairs(result.run.final_reduced.eigenvalues):
            rows.append(f"{format_float(re_)},{format_float(im_)}")
        paths[f"eigs_{name}"] = _write_text(
            out / f"eigs_{name}.csv", "\n".join(rows) + "\n"
        )
    return paths


def write_matrix_market(path, M, comment=None):
    """Dense array-format Matrix Market file with 17-digit entries.

    Column-major entry order, one value per line; round-trips through
    the package loader bit-exactly.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValidationError(f"matrix must be 2-dimensional, got ndim={M.ndim}")
    if np.iscomplexobj(M):
        if np.any(M.imag != 0):
            raise ValidationError("matrix has complex entries; only real supported")
        M = M.real
    lines = ["%%MatrixMarket matrix array real general"]
    if comment:
        for piece in str(comment).splitlines():
            lines.append(f"% {piece}")
    rows, cols = M.shape
    lines.append(f"{rows} {cols}")
    for j in range(cols):
        for i in range(rows):
            lines.append(format_float(M[i, j]))
    return _write_text(path, "\n".join(lines) + "\n")
