"""Small result containers shared by the verification and benchmarking code."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np


def _jsonable(x: Any):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class DiagnosticReport:
    """Outcome of one numerical check.

    ``passed`` records whether the stated comparison held within ``tolerance``.
    """

    name: str
    measured: list
    predicted: list
    ratio: float
    passed: bool
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: ratio={self.ratio:.6g} tol={self.tolerance:.3g}"


@dataclass
class SweepResult:
    """A parameter sweep with measured and predicted values.

    ``slope`` and ``predicted_slope`` are log-log fits of measured and
    predicted values against the parameter; ``drift`` is ``max(ratio)/min(ratio)``.
    """

    name: str
    params: list
    measured: list
    predicted: list
    ratios: list
    slope: float = float("nan")
    predicted_slope: float = float("nan")
    drift: float = float("nan")
    passed: bool = False
    tolerance: float = float("nan")
    details: dict = field(default_factory=dict)

    @property
    def slope_error(self) -> float:
        return self.slope - self.predicted_slope

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slope_error"] = self.slope_error
        return _jsonable(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self, param_name: str = "lambda") -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([param_name, "measured", "predicted", "ratio"])
        for row in zip(self.params, self.measured, self.predicted, self.ratios):
            w.writerow([repr(float(v)) if not isinstance(v, str) else v for v in row])
        return buf.getvalue()


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ratio_drift(ratios: Sequence[float]) -> float:
    r = np.asarray(ratios, dtype=float)
    if r.size == 0 or np.any(r <= 0):
        return float("inf")
    return float(r.max() / r.min())
