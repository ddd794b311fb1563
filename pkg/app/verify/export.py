"""Report export: deterministic JSON, CSV tables and a Markdown summary.

JSON output is byte-reproducible: keys keep a fixed order, floats are
written with 17 significant digits, and non-finite floats become the
strings "inf", "-inf" and "nan".
"""
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app.models.report import EstimateReport, RefinementStudy

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"

_env = Environment(
    loader=FileSystemLoader(TEMPLATE_DIR),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)
_env.filters["num"] = lambda x: format_float(x) if isinstance(x, float) else str(x)


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format_float(x) if math.isfinite(x) else json.dumps(format_float(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Path):
        return json.dumps(str(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON text for dicts, lists and scalars."""
    return _encode(obj, indent, 0) + "\n"


def _sorted(d: dict) -> dict:
    return {k: d[k] for k in sorted(d)}


def report_record(report: EstimateReport) -> dict:
    return {
        "check": report.check,
        "params": _sorted(report.params),
        "lhs": report.lhs,
        "rhs_core": report.rhs_core,
        "constant": report.constant,
        "pass": report.passed,
        "h": report.h,
        "terms": _sorted(report.terms),
        "violations": list(report.violations),
    }


def study_record(study: RefinementStudy) -> dict:
    return {
        "check": study.check,
        "criterion": study.criterion,
        "tolerance": study.tolerance,
        "pass": study.passed,
        "violations": list(study.violations),
        "levels": [
            {"h": level.h, "shape": list(level.shape), "report": report_record(level.report)}
            for level in study.levels
        ],
        "constants": study.constants,
        "ratios": study.ratios,
    }


def write_json(obj: Any, path: Path) -> Path:
    path.write_text(dumps(obj), encoding="utf-8")
    logger.debug(f"wrote {path}")
    return path


def reports_frame(reports: list[EstimateReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "check": r.check,
                "lhs": r.lhs,
                "rhs_core": r.rhs_core,
                "constant": r.constant,
                "pass": r.passed,
                "h": r.h,
                "params": dumps(_sorted(r.params), indent=0).replace("\n", ""),
            }
            for r in reports
        ],
        columns=["check", "lhs", "rhs_core", "constant", "pass", "h", "params"],
    )


def studies_frame(studies: list[RefinementStudy]) -> pd.DataFrame:
    rows = [
        {
            "check": s.check,
            "level": index,
            "h": level.h,
            "lhs": level.report.lhs,
            "rhs_core": level.report.rhs_core,
            "constant": level.report.constant,
            "pass": level.report.passed,
        }
        for s in studies
        for index, level in enumerate(s.levels)
    ]
    return pd.DataFrame(rows, columns=["check", "level", "h", "lhs", "rhs_core", "constant", "pass"])


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"wrote {path}")
    return path


def write_plot_data(study: RefinementStudy, directory: Path) -> Path:
    """(h, constant) columns of one study as ``plot_<check>.csv``."""
    frame = pd.DataFrame({"h": [level.h for level in study.levels], "constant": study.constants})
    return write_csv(frame, directory / f"plot_{study.check}.csv")


def render_summary(title: str, reports: list[EstimateReport] = (), studies: list[RefinementStudy] = (),
                   facts: dict | None = None) -> str:
    return _env.get_template("summary.md.j2").render(
        title=title, reports=list(reports), studies=list(studies), facts=facts or {}
    )


def write_summary(path: Path, title: str, **kwargs) -> Path:
    path.write_text(render_summary(title, **kwargs), encoding="utf-8")
    return path
