"""Certified value brackets kept in log space, plus stable summation helpers.

Weighted pressure quantities are sums of exp(s(eps) * orbit sum) terms that
overflow doubles quickly, so every optimum is carried as a log value.  For
count-valued quantities the witness makes the integer recoverable exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

METHOD_EXACT = "exact"
METHOD_GREEDY = "greedy"
METHOD_ORACLE = "oracle"
_METHODS = (METHOD_EXACT, METHOD_GREEDY, METHOD_ORACLE)

_BRACKET_SLACK = 1e-9


def log_sum_exp(values) -> float:
    """log(sum(exp(v))) with max-shift stability; -inf for an empty sum."""
    vals = [float(v) for v in values]
    if not vals:
        return float("-inf")
    m = max(vals)
    if m == float("-inf"):
        return float("-inf")
    return m + math.log(sum(math.exp(v - m) for v in vals))


def set_log_value(log_weights, members) -> float:
    """Log-weight of a point set, accumulated in sorted index order.

    Every code path that reports the value of a witness set goes through
    this helper so that equal witnesses produce bit-identical floats.
    """
    return log_sum_exp(log_weights[i] for i in sorted(members))


@dataclass(frozen=True)
class CertifiedValue:
    """An optimum enclosed by log-space bounds with a method tag."""

    log_lower: float
    log_upper: float
    method: str
    witness: tuple | None = None
    note: str = ""

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.log_lower > self.log_upper + _BRACKET_SLACK:
            raise ValueError(f"lower bound {self.log_lower} exceeds upper {self.log_upper}")

    @classmethod
    def exact(cls, log_value: float, witness=None, note: str = "") -> "CertifiedValue":
        return cls(log_value, log_value, METHOD_EXACT, witness, note)

    @classmethod
    def bracket(cls, log_lower: float, log_upper: float, witness=None, note: str = "") -> "CertifiedValue":
        return cls(log_lower, log_upper, METHOD_GREEDY, witness, note)

    @classmethod
    def oracle(cls, log_value: float, witness=None, note: str = "") -> "CertifiedValue":
        return cls(log_value, log_value, METHOD_ORACLE, witness, note)

    @property
    def is_exact(self) -> bool:
        return self.method == METHOD_EXACT

    @property
    def log_value(self) -> float:
        if self.log_lower == self.log_upper:
            return self.log_lower
        return 0.5 * (self.log_lower + self.log_upper)

    @property
    def lower(self) -> float:
        return math.exp(self.log_lower)

    @property
    def upper(self) -> float:
        return math.exp(self.log_upper)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def as_count(self) -> int:
        """The integer behind a count-valued quantity, checked to 1e-6."""
        v = math.exp(self.log_value)
        n = round(v)
        if abs(v - n) > 1e-6 * max(1.0, v):
            raise ValueError(f"value {v} is not integral")
        return int(n)
