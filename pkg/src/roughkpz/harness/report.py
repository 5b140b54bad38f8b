"""Study reports, verdict rules and deterministic serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

ROW_COLUMNS = ["study", "eps", "quantity", "replicas", "estimate", "se", "target", "rule",
               "threshold", "passed"]
TREND_COLUMNS = ["study", "quantity", "kind", "eps_first", "eps_last", "value_first",
                 "value_last", "passed"]


def fmt_float(x: float) -> str:
    """Shortest text for ``x`` carrying 17 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


# -- verdict rules ------------------------------------------------------------

def evaluate_rule(rule: str, estimate: float, target: float | None, se: float,
                  threshold) -> bool | None:
    """Pass/fail of one row; ``None`` for informational rows.

    Rules
    -----
    ``se``         ``|estimate - target| <= threshold * se``
    ``se_or_abs``  ``|estimate - target| <= max(threshold[0] * se, threshold[1])``
    ``abs``        ``|estimate - target| <= threshold``
    ``rel``        ``|estimate / target - 1| <= threshold``
    ``report``     no verdict
    """
    if rule == "report":
        return None
    dev = abs(estimate - target)
    if rule == "se":
        return bool(dev <= threshold * se)
    if rule == "se_or_abs":
        return bool(dev <= max(threshold[0] * se, threshold[1]))
    if rule == "abs":
        return bool(dev <= threshold)
    if rule == "rel":
        return bool(abs(estimate / target - 1.0) <= threshold)
    raise ValueError(f"unknown rule {rule!r}")


def evaluate_trend(kind: str, first: float, last: float) -> bool:
    """``decrease``: ``last < first``. ``dev_decrease`` compares magnitudes."""
    if kind == "decrease":
        return bool(last < first)
    if kind == "dev_decrease":
        return bool(abs(last) < abs(first))
    raise ValueError(f"unknown trend kind {kind!r}")


@dataclass
class Row:
    """One estimator with its standard error and target at one ``eps``."""

    eps: float
    quantity: str
    replicas: int
    estimate: float
    se: float
    target: float | None
    rule: str = "report"
    threshold: Any = None
    passed: bool | None = None

    def __post_init__(self):
        self.passed = evaluate_rule(self.rule, self.estimate, self.target, self.se, self.threshold)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "quantity": self.quantity, "replicas": self.replicas,
                "estimate": self.estimate, "se": self.se, "target": self.target,
                "rule": self.rule, "threshold": self.threshold, "passed": self.passed}


@dataclass
class Trend:
    """Comparison of one quantity between the first and last grid points.

    ``value_first`` and ``value_last`` are estimate minus target for
    ``dev_decrease`` and the bare estimate for ``decrease``.
    """

    quantity: str
    kind: str
    eps_first: float
    eps_last: float
    value_first: float
    value_last: float
    passed: bool | None = None

    def __post_init__(self):
        self.passed = evaluate_trend(self.kind, self.value_first, self.value_last)

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "kind": self.kind, "eps_first": self.eps_first,
                "eps_last": self.eps_last, "value_first": self.value_first,
                "value_last": self.value_last, "passed": self.passed}


@dataclass
class StudyReport:
    """Outcome of one Monte Carlo study.

    ``runtime`` is kept in memory and written to a separate timing file so
    that ``report.json`` depends only on seed and configuration.
    """

    study: str
    gamma: float
    eps_grid: list[float]
    rows: list[Row] = field(default_factory=list)
    trends: list[Trend] = field(default_factory=list)
    seed_lineage: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        verdicts = [r.passed for r in self.rows if r.passed is not None]
        verdicts += [t.passed for t in self.trends]
        return all(verdicts)

    def row(self, quantity: str, eps: float | None = None) -> Row:
        for r in self.rows:
            if r.quantity == quantity and (eps is None or r.eps == eps):
                return r
        raise KeyError((quantity, eps))

    def rows_for(self, quantity: str) -> list[Row]:
        return [r for r in self.rows if r.quantity == quantity]

    def trend(self, quantity: str) -> Trend:
        for t in self.trends:
            if t.quantity == quantity:
                return t
        raise KeyError(quantity)

    def recompute(self) -> bool:
        """Re-derive every verdict from stored values; True if all agree."""
        ok = all(evaluate_rule(r.rule, r.estimate, r.target, r.se, r.threshold) == r.passed
                 for r in self.rows)
        return ok and all(evaluate_trend(t.kind, t.value_first, t.value_last) == t.passed
                          for t in self.trends)

    def to_dict(self) -> dict:
        return {"study": self.study, "gamma": self.gamma, "eps_grid": list(self.eps_grid),
                "passed": self.passed, "rows": [r.to_dict() for r in self.rows],
                "trends": [t.to_dict() for t in self.trends],
                "seed_lineage": list(self.seed_lineage), "config": self.config}

    @classmethod
    def from_dict(cls, d: dict) -> "StudyReport":
        rows = []
        for r in d["rows"]:
            thr = r["threshold"]
            rows.append(Row(r["eps"], r["quantity"], r["replicas"], r["estimate"], r["se"],
                            r["target"], r["rule"], tuple(thr) if isinstance(thr, list) else thr))
        trends = [Trend(t["quantity"], t["kind"], t["eps_first"], t["eps_last"],
                        t["value_first"], t["value_last"]) for t in d["trends"]]
        return cls(d["study"], d["gamma"], list(d["eps_grid"]), rows, trends,
                   list(d["seed_lineage"]), d["config"])


# -- serialization ----------------------------------------------------------

def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if hasattr(obj, "item") and not isinstance(obj, (list, tuple, dict, str)):
        return _encode(obj.item(), indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and stable key order."""
    return _encode(obj, indent, 0) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def csv_text(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def report_csv(report: StudyReport) -> str:
    return csv_text(ROW_COLUMNS, ([report.study, r.eps, r.quantity, r.replicas, r.estimate, r.se,
                                   r.target, r.rule, r.threshold, r.passed] for r in report.rows))


def trends_csv(report: StudyReport) -> str:
    return csv_text(TREND_COLUMNS, ([report.study, t.quantity, t.kind, t.eps_first, t.eps_last,
                                     t.value_first, t.value_last, t.passed] for t in report.trends))


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_report(report: StudyReport, out_dir: str | os.PathLike,
                formats: Iterable[str] = ("csv", "json")) -> list[Path]:
    """Write ``report.json``, ``<study>.csv``, ``<study>_trends.csv`` and ``timing.json``.

    Everything except ``timing.json`` is a pure function of the report content.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    formats = set(formats)
    unknown = formats - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}")
    written = []
    if "json" in formats:
        p = out / "report.json"
        _write(p, dumps(report.to_dict()))
        written.append(p)
    if "csv" in formats:
        p = out / f"{report.study}.csv"
        _write(p, report_csv(report))
        written.append(p)
        p = out / f"{report.study}_trends.csv"
        _write(p, trends_csv(report))
        written.append(p)
    p = out / "timing.json"
    _write(p, dumps({"study": report.study, "runtime_seconds": report.runtime}))
    written.append(p)
    return written


def load_report(path: str | os.PathLike) -> StudyReport:
    with open(path, encoding="utf-8") as fh:
        return StudyReport.from_dict(json.load(fh))
