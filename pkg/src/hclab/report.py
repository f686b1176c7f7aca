"""Structured results of verification runs."""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator

import numpy as np


def to_jsonable(x: Any) -> Any:
    """Convert numbers, fractions and arrays into JSON-friendly values."""
    if isinstance(x, Fraction):
        return {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [to_jsonable(v) for v in items]
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    return str(x)


@dataclass
class CheckReport:
    """Outcome of one inequality or identity check.

    ``margin`` is oriented so that a non-negative value means the claim holds;
    ``passed`` is ``margin >= -tolerance``.
    """

    check_id: str
    lhs: Any
    rhs: Any
    margin: float
    passed: bool
    tolerance: float = 0.0
    witness: Any = None
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "check_id": self.check_id,
            "passed": self.passed,
            "lhs": to_jsonable(self.lhs),
            "rhs": to_jsonable(self.rhs),
            "margin": to_jsonable(self.margin),
            "tolerance": self.tolerance,
            "witness": to_jsonable(self.witness),
            "details": to_jsonable(self.details),
        }
        if timing:
            out["runtime"] = self.runtime
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.check_id}: lhs={_fmt(self.lhs)} rhs={_fmt(self.rhs)} margin={_fmt(self.margin)}"


def _fmt(x: Any) -> str:
    if isinstance(x, Fraction):
        return f"{x} (~{float(x):.6g})"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def inequality(
    check_id: str, lhs: Any, rhs: Any, tol: float = 1e-10, witness: Any = None, **details: Any
) -> CheckReport:
    """Report for ``lhs <= rhs`` (exact when both sides are rationals)."""
    margin = rhs - lhs
    ok = margin >= 0 if tol == 0 else float(margin) >= -tol
    return CheckReport(check_id, lhs, rhs, margin, bool(ok), tol, None if ok else witness, 0.0, details)


def equality(
    check_id: str, lhs: Any, rhs: Any, tol: float = 1e-10, witness: Any = None, **details: Any
) -> CheckReport:
    """Report for ``lhs == rhs`` up to ``tol`` (margin is minus the gap)."""
    margin = -abs(lhs - rhs)
    ok = margin == 0 if tol == 0 else float(margin) >= -tol
    return CheckReport(check_id, lhs, rhs, margin, bool(ok), tol, None if ok else witness, 0.0, details)


def combine(check_id: str, parts: list[CheckReport], **details: Any) -> CheckReport:
    """Conjunction of sub-reports; the worst (smallest float) margin is reported."""
    worst = min(parts, key=lambda r: float(r.margin)) if parts else None
    ok = all(r.passed for r in parts)
    failing = [r.check_id for r in parts if not r.passed]
    d = {"parts": [r.to_dict() for r in parts], **details}
    if worst is None:
        return CheckReport(check_id, None, None, 0.0, True, 0.0, None, 0.0, d)
    return CheckReport(
        check_id,
        worst.lhs,
        worst.rhs,
        worst.margin,
        ok,
        worst.tolerance,
        failing or None,
        sum(r.runtime for r in parts),
        d,
    )


@contextmanager
def timed() -> Iterator[list[float]]:
    """Yield a one-element list that receives the elapsed seconds on exit."""
    box = [0.0]
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = time.perf_counter() - t0


@dataclass
class ConstantFit:
    """Smallest (or largest) constant for which an inequality holds on a grid."""

    inequality_id: str
    constant_name: str
    value: float
    direction: str  # "min" when any larger constant also works, "max" otherwise
    grid: list[dict]
    certified: bool
    worst_instance: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "constant_name": self.constant_name,
            "value": to_jsonable(self.value),
            "direction": self.direction,
            "certified": self.certified,
            "worst_instance": to_jsonable(self.worst_instance),
            "grid_size": len(self.grid),
            "grid": to_jsonable(self.grid),
            "details": to_jsonable(self.details),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
