"""Scale functions: evaluation, dilation-ratio defects, and class diagnostics.

A scale function is a positive function on (0,1) whose dilation ratio
s(lambda*x)/s(x) tends to 1 at the origin.  Class membership is a limit
statement, so the library only ever *witnesses* behavior on finite grids;
the symbolic kinds additionally carry analytically known verdicts that the
test suite uses as oracles.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import DomainError, InvalidArgumentError

CLASS_S = "S"
CLASS_S_STAR = "S-star"
CLASS_S_DOUBLE_STAR = "S-double-star"
ALL_CLASSES = frozenset({CLASS_S, CLASS_S_STAR, CLASS_S_DOUBLE_STAR})

# argument used in place of eps >= 1 when a pressure quantity is evaluated
# at a scale beyond the (0,1) domain
_CLAMP_HI = 1.0 - 2.0**-40

# numeric verdict thresholds; see classify()
_S_DEFECT_TOL = 0.25
_DSTAR_TOL = 0.01
_MONOTONE_GRID = 128


@dataclass(frozen=True)
class ScaleFunction:
    """An evaluable scale descriptor with declared class membership."""

    kind: str
    a: float | None = None
    points: tuple[tuple[float, float], ...] | None = None
    declared_classes: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in ("constant_one", "neg_log", "power", "table"):
            raise InvalidArgumentError(f"unknown scale kind {self.kind!r}")
        if self.kind == "power":
            if self.a is None or self.a <= 0:
                raise InvalidArgumentError("power scale needs exponent a > 0")
        if self.kind == "table":
            if not self.points or len(self.points) < 2:
                raise InvalidArgumentError("table scale needs at least two points")
            pts = tuple(sorted((float(e), float(v)) for e, v in self.points))
            if any(not (0.0 < e < 1.0) or v <= 0.0 for e, v in pts):
                raise InvalidArgumentError("table points must have eps in (0,1) and value > 0")
            if len({e for e, _ in pts}) != len(pts):
                raise InvalidArgumentError("table eps values must be distinct")
            object.__setattr__(self, "points", pts)
        bad = self.declared_classes - ALL_CLASSES
        if bad:
            raise InvalidArgumentError(f"unknown declared classes {sorted(bad)}")
        if CLASS_S_STAR in self.declared_classes:
            # non-increasing in eps: evaluate on an ascending grid
            grid = sorted(
                math.exp(math.log(1e-9) * i / (_MONOTONE_GRID - 1)) for i in range(_MONOTONE_GRID)
            )
            vals = [self.eval(min(max(e, 1e-12), _CLAMP_HI)) for e in grid]
            if any(b > a + 1e-12 for a, b in zip(vals, vals[1:])):
                raise InvalidArgumentError("declared S-star but not non-increasing on the check grid")

    # -- factories -----------------------------------------------------------

    @classmethod
    def constant_one(cls) -> "ScaleFunction":
        return cls("constant_one", declared_classes=ALL_CLASSES)

    @classmethod
    def neg_log(cls) -> "ScaleFunction":
        return cls("neg_log", declared_classes=ALL_CLASSES)

    @classmethod
    def power(cls, a: float) -> "ScaleFunction":
        # deliberately a NON-example of the scale property (homogeneous)
        return cls("power", a=float(a))

    @classmethod
    def table(cls, points, declared_classes=frozenset()) -> "ScaleFunction":
        return cls("table", points=tuple((float(e), float(v)) for e, v in points),
                   declared_classes=frozenset(declared_classes))

    # -- evaluation ----------------------------------------------------------

    def eval(self, eps: float) -> float:
        """s(eps) for eps strictly inside (0,1)."""
        if not (0.0 < eps < 1.0):
            raise DomainError(f"scale argument {eps} outside (0,1)")
        if self.kind == "constant_one":
            return 1.0
        if self.kind == "neg_log":
            return -math.log(eps)
        if self.kind == "power":
            return eps ** (-self.a)
        return self._table_eval(eps)

    def scale_at(self, eps: float) -> float:
        """s(eps) with eps >= 1 clamped just below 1.

        Pressure quantities are defined for every eps > 0 while the scale
        domain is (0,1); the clamp keeps the weight factor well defined.
        """
        if eps <= 0.0:
            raise DomainError(f"scale argument {eps} must be positive")
        return self.eval(min(eps, _CLAMP_HI))

    def _table_eval(self, eps: float) -> float:
        # monotone piecewise-linear interpolation in log-log coordinates,
        # constant extrapolation beyond the recorded range
        xs = [math.log(e) for e, _ in self.points]
        ys = [math.log(v) for _, v in self.points]
        x = math.log(eps)
        if x <= xs[0]:
            return math.exp(ys[0])
        if x >= xs[-1]:
            return math.exp(ys[-1])
        j = bisect_left(xs, x)
        t = (x - xs[j - 1]) / (xs[j] - xs[j - 1])
        return math.exp(ys[j - 1] + t * (ys[j] - ys[j - 1]))

    def analytic_classes(self) -> frozenset[str] | None:
        """Known class membership for symbolic kinds; None when undecidable."""
        if self.kind in ("constant_one", "neg_log"):
            return ALL_CLASSES
        if self.kind == "power":
            return frozenset()
        return None


def scale_property_defect(s: ScaleFunction, lam: float, eps_grid) -> tuple[float, ...]:
    """|s(lam*eps)/s(eps) - 1| along a strictly decreasing grid.

    The trailing entry is the reported defect.
    """
    if lam <= 0:
        raise InvalidArgumentError("lambda must be positive")
    grid = [float(e) for e in eps_grid]
    if not grid:
        raise InvalidArgumentError("empty grid")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("grid must be strictly decreasing")
    out = []
    for eps in grid:
        if not (0.0 < eps < 1.0) or not (0.0 < lam * eps < 1.0):
            raise DomainError(f"grid point {eps} with lambda {lam} leaves (0,1)")
        out.append(abs(s.eval(lam * eps) / s.eval(eps) - 1.0))
    return tuple(out)


@dataclass(frozen=True)
class ScaleClassReport:
    kind: str
    lam: float
    grid: tuple[float, ...]
    defect_profile: tuple[float, ...]
    trailing_defect: float
    monotone_ok: bool
    dstar_profile: tuple[float, ...]
    trailing_dstar: float
    in_s: bool
    in_s_star: bool
    in_s_double_star: bool
    analytic: bool
    declared: frozenset[str]
    matches_declared: bool

    @property
    def verdict_classes(self) -> frozenset[str]:
        out = set()
        if self.in_s:
            out.add(CLASS_S)
        if self.in_s_star:
            out.add(CLASS_S_STAR)
        if self.in_s_double_star:
            out.add(CLASS_S_DOUBLE_STAR)
        return frozenset(out)


def classify(s: ScaleFunction, eps_grid, lam: float = 2.0) -> ScaleClassReport:
    """Numeric class diagnostics on a decreasing grid reaching at least 1e-6.

    Grid points whose dilation lam*eps leaves (0,1) are skipped for the
    defect profile (diagnostic only).  Symbolic kinds report their
    analytically known verdicts, so refining the grid never flips them.
    """
    grid = tuple(float(e) for e in eps_grid)
    if len(grid) < 10:
        raise InvalidArgumentError("classification grid needs at least 10 points")
    if min(grid) > 1e-6:
        raise InvalidArgumentError("classification grid must reach 1e-6")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("grid must be strictly decreasing")

    usable = tuple(e for e in grid if 0.0 < lam * e < 1.0)
    defects = scale_property_defect(s, lam, usable) if usable else ()
    trailing_defect = defects[-1] if defects else float("inf")
    half = defects[len(defects) // 2 :]
    trend_ok = all(b <= a + 1e-12 for a, b in zip(half, half[1:]))
    in_s_num = bool(defects) and trailing_defect <= _S_DEFECT_TOL and trend_ok

    mono_grid = sorted(
        {min(math.exp(math.log(1e-9) * i / (_MONOTONE_GRID - 1)), _CLAMP_HI) for i in range(_MONOTONE_GRID)}
        | set(grid)
    )
    vals = [s.eval(e) for e in mono_grid]
    monotone_ok = all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    dstar = tuple(e * math.log(e) / s.eval(e) for e in grid)
    trailing_dstar = abs(dstar[-1])
    dhalf = [abs(v) for v in dstar[len(dstar) // 2 :]]
    dstar_ok = trailing_dstar <= _DSTAR_TOL and all(
        b <= a + 1e-12 for a, b in zip(dhalf, dhalf[1:])
    )

    analytic = s.analytic_classes()
    if analytic is not None:
        in_s = CLASS_S in analytic
        in_s_star = CLASS_S_STAR in analytic
        in_s_double_star = CLASS_S_DOUBLE_STAR in analytic
    else:
        in_s = in_s_num
        in_s_star = in_s and monotone_ok
        in_s_double_star = in_s_star and dstar_ok

    verdicts = set()
    if in_s:
        verdicts.add(CLASS_S)
    if in_s_star:
        verdicts.add(CLASS_S_STAR)
    if in_s_double_star:
        verdicts.add(CLASS_S_DOUBLE_STAR)

    return ScaleClassReport(
        kind=s.kind,
        lam=lam,
        grid=grid,
        defect_profile=defects,
        trailing_defect=trailing_defect,
        monotone_ok=monotone_ok,
        dstar_profile=dstar,
        trailing_dstar=trailing_dstar,
        in_s=in_s,
        in_s_star=in_s_star,
        in_s_double_star=in_s_double_star,
        analytic=analytic is not None,
        declared=s.declared_classes,
        matches_declared=frozenset(verdicts) == s.declared_classes,
    )


def scale_from_config(spec: dict) -> ScaleFunction:
    """Build a scale function from its config stanza."""
    kind = spec.get("kind")
    if kind in ("constant_one", "const", "one"):
        return ScaleFunction.constant_one()
    if kind == "neg_log":
        return ScaleFunction.neg_log()
    if kind == "power":
        return ScaleFunction.power(spec["a"])
    if kind == "table":
        return ScaleFunction.table(spec["points"])
    raise InvalidArgumentError(f"unknown scale kind {kind!r}")
