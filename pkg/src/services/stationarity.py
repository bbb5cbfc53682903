"""Sufficient stationarity condition for the log-volatility recursion.

sum_k ||G0_k|| / (1 - |lambda_k|) + sum_k (||G1_k|| + ||G2_k||) / (1 - gamma_k) < 1

for an induced matrix norm; the condition is sufficient only, so a value of
one or more does not establish non-stationarity.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from src.errors import UnknownName
from src.filters.volfilter import as_general
from src.model.params import AnyParams

logger = logging.getLogger(__name__)

NORMS = {"one": 1, "inf": np.inf, "two": 2}


@dataclass(frozen=True)
class StationarityReport:
    norm: str
    sum: float
    satisfied: bool
    by_norm: Dict[str, float] = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return 1.0 - self.sum

    @property
    def message(self) -> str:
        if self.satisfied:
            return f"stationarity condition holds ({self.norm}-norm sum {self.sum:.4f})"
        return "condition not verified (sufficient only)"

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "sum": self.sum,
            "satisfied": self.satisfied,
            "by_norm": dict(self.by_norm),
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StationarityReport":
        return cls(
            norm=data["norm"],
            sum=float(data["sum"]),
            satisfied=bool(data["satisfied"]),
            by_norm={k: float(v) for k, v in data.get("by_norm", {}).items()},
        )


def norm_sum(params: AnyParams, norm: str) -> float:
    if norm not in NORMS:
        raise UnknownName(f"unknown norm '{norm}' (one, inf, two or min)")
    p = as_general(params)
    order = NORMS[norm]
    total = 0.0
    for k in range(p.order.r):
        total += np.linalg.norm(p.G0[k], order) / (1.0 - abs(p.lam[k]))
    for k in range(p.order.s):
        total += (np.linalg.norm(p.G1[k], order) + np.linalg.norm(p.G2[k], order)) / (
            1.0 - p.gamma[k]
        )
    return float(total)


def check_stationarity(params: AnyParams, norm: str = "min") -> StationarityReport:
    """Evaluate the condition under one norm, or the smallest of the three."""
    by_norm = {name: norm_sum(params, name) for name in NORMS}
    if norm == "min":
        chosen = min(by_norm, key=by_norm.get)
    elif norm in NORMS:
        chosen = norm
    else:
        raise UnknownName(f"unknown norm '{norm}' (one, inf, two or min)")
    value = by_norm[chosen]
    report = StationarityReport(norm=chosen, sum=value, satisfied=value < 1.0, by_norm=by_norm)
    if not report.satisfied:
        logger.debug(f"⚠️ {report.message}: min norm sum {value:.4f}")
    return report
