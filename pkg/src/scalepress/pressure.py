"""Weighted separated/spanning/cover optima at fixed (eps, F) and their
assembly into finite-grid scale-pressure estimates.

Threshold conventions follow the defining inequalities exactly: spanning
uses strict domination d_F(x,y) < eps, separation requires d_F(x,y) > eps,
so pairs at distance exactly eps belong to neither relation.  On verified
ultrametric systems the threshold graphs split into disjoint cliques and
all four optima reduce to per-class extremes, which keeps the large
symbolic systems exact and fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certified import CertifiedValue, log_sum_exp, set_log_value
from .errors import InvalidArgumentError, SizeLimitError
from .group import FinitePatch, FolnerSequence
from .optim import (
    DEFAULT_CAPS,
    SolveCaps,
    clique_cover_log_upper,
    cover_ratio_log_lower,
    greedy_cover,
    greedy_independent,
    max_weight_independent_set,
    maximal_cliques,
    min_weight_cover,
)
from .scale import ScaleFunction
from .system import DynMetric, FiniteGSystem, Potential, birkhoff_vector, dyn_metric

QUANTITIES = ("Q", "P", "p", "q", "sep", "spa")


def _mask_from_bool(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


class CellCache:
    """Caches dynamical metrics and threshold masks keyed by (system, F, eps)."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        self._dyn: dict = {}
        self._masks: dict = {}

    def dyn_metric(self, sys: FiniteGSystem, F: FinitePatch) -> DynMetric:
        key = (sys.system_id, F.elements)
        if self.enabled and key in self._dyn:
            self.hits += 1
            return self._dyn[key]
        self.misses += 1
        dm = dyn_metric(sys, F)
        if self.enabled:
            self._dyn[key] = dm
        return dm

    def masks(self, sys: FiniteGSystem, F: FinitePatch, eps: float):
        key = (sys.system_id, F.elements, float(eps))
        if self.enabled and key in self._masks:
            self.hits += 1
            return self._masks[key]
        self.misses += 1
        m = self.dyn_metric(sys, F).matrix
        conflict = [_mask_from_bool(m[i] <= eps) for i in range(m.shape[0])]
        balls = [_mask_from_bool(m[i] < eps) for i in range(m.shape[0])]
        out = (conflict, balls)
        if self.enabled:
            self._masks[key] = out
        return out


_SHARED_CACHE = CellCache()


def clear_shared_cache():
    _SHARED_CACHE._dyn.clear()
    _SHARED_CACHE._masks.clear()
    _SHARED_CACHE.hits = _SHARED_CACHE.misses = 0


def _log_weights(sys: FiniteGSystem, phi: Potential, F: FinitePatch, s: ScaleFunction, eps: float) -> np.ndarray:
    return s.scale_at(eps) * birkhoff_vector(sys, phi, F)


def _threshold_classes(matrix: np.ndarray, eps: float, strict: bool) -> list[tuple[int, ...]] | None:
    """Equivalence classes of the threshold relation, or None if not transitive."""
    mask = matrix < eps if strict else matrix <= eps
    reps = mask.argmax(axis=1)
    if not np.array_equal(reps[reps], reps):
        return None
    sizes = np.bincount(reps, minlength=matrix.shape[0])
    if int(mask.sum()) != int(sizes[reps].sum()):
        # relation is not a disjoint union of cliques
        return None
    classes: dict[int, list[int]] = {}
    for i, r in enumerate(reps.tolist()):
        classes.setdefault(r, []).append(i)
    return [tuple(v) for _, v in sorted(classes.items())]


def _resolve_mode(mode: str, n: int, ultrametric: bool, caps: SolveCaps) -> str:
    if mode not in ("exact", "greedy", "auto"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if mode == "auto":
        return "exact" if (ultrametric or n <= caps.exact_points) else "greedy"
    return mode


def _check_exact_cap(mode: str, n: int, ultrametric: bool, caps: SolveCaps):
    if mode == "exact" and not ultrametric and n > caps.exact_points:
        raise SizeLimitError(
            f"exact solve over {n} points exceeds cap {caps.exact_points}; use greedy mode"
        )


def separated_value(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    phi: Potential,
    s: ScaleFunction,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
    candidates: tuple[int, ...] | None = None,
) -> CertifiedValue:
    """Largest weighted mass of a set with pairwise d_F > eps.

    Equivalent to a maximum-weight independent set in the conflict graph
    with edges d_F <= eps.  ``candidates`` optionally restricts the ground
    set (used by support-restricted diagnostics).
    """
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    cache = cache or _SHARED_CACHE
    lw = _log_weights(sys, phi, F, s, eps)
    n = sys.n_points
    pool = tuple(range(n)) if candidates is None else tuple(sorted(set(candidates)))
    if sys.ultrametric and candidates is None:
        classes = _threshold_classes(cache.dyn_metric(sys, F).matrix, eps, strict=False)
        if classes is not None:
            witness = tuple(sorted(min((i for i in cls), key=lambda i: (-lw[i], i)) for cls in classes))
            return CertifiedValue.exact(set_log_value(lw, witness), witness)
    mode = _resolve_mode(mode, len(pool), False, caps)
    _check_exact_cap(mode, len(pool), False, caps)
    conflict, _ = cache.masks(sys, F, eps)
    if candidates is not None:
        keep = 0
        for i in pool:
            keep |= 1 << i
        conflict = [conflict[i] & keep for i in range(n)]
    sub_idx = list(pool)
    local_conflict = []
    pos = {i: j for j, i in enumerate(sub_idx)}
    for i in sub_idx:
        m = 0
        rem = conflict[i]
        while rem:
            low = rem & -rem
            b = low.bit_length() - 1
            rem ^= low
            if b in pos:
                m |= 1 << pos[b]
        local_conflict.append(m | (1 << pos[i]))
    local_lw = [float(lw[i]) for i in sub_idx]
    if mode == "greedy":
        g = greedy_independent(len(sub_idx), local_conflict, local_lw)
        witness = tuple(sorted(sub_idx[j] for j in g))
        upper = clique_cover_log_upper(len(sub_idx), local_conflict, local_lw)
        return CertifiedValue.bracket(set_log_value(lw, witness), upper, witness)
    out = max_weight_independent_set(len(sub_idx), local_conflict, local_lw, caps)
    witness = tuple(sorted(sub_idx[j] for j in out.witness))
    value = set_log_value(lw, witness)
    if not out.optimal:
        upper = clique_cover_log_upper(len(sub_idx), local_conflict, local_lw)
        return CertifiedValue.bracket(value, max(value, upper), witness, out.note)
    return CertifiedValue.exact(value, witness)


def spanning_value(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    phi: Potential,
    s: ScaleFunction,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
    candidates: tuple[int, ...] | None = None,
) -> CertifiedValue:
    """Smallest weighted mass of a set whose strict-eps balls cover everything.

    A minimum-weight dominating set under the relation d_F(x,y) < eps;
    every point dominates itself since d_F(x,x) = 0.
    """
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    cache = cache or _SHARED_CACHE
    lw = _log_weights(sys, phi, F, s, eps)
    n = sys.n_points
    if sys.ultrametric and candidates is None:
        classes = _threshold_classes(cache.dyn_metric(sys, F).matrix, eps, strict=True)
        if classes is not None:
            witness = tuple(sorted(min((i for i in cls), key=lambda i: (lw[i], i)) for cls in classes))
            return CertifiedValue.exact(set_log_value(lw, witness), witness)
    pool = tuple(range(n)) if candidates is None else tuple(sorted(set(candidates)))
    mode = _resolve_mode(mode, n, False, caps)
    _check_exact_cap(mode, n, False, caps)
    _, balls = cache.masks(sys, F, eps)
    universe = (1 << n) - 1
    sets_masks = [balls[i] for i in pool]
    local_lw = [float(lw[i]) for i in pool]
    if mode == "greedy":
        g = greedy_cover(universe, sets_masks, local_lw)
        witness = tuple(sorted(pool[j] for j in g))
        lowerb = cover_ratio_log_lower(universe, sets_masks, local_lw)
        val = set_log_value(lw, witness)
        return CertifiedValue.bracket(min(lowerb, val), val, witness)
    out = min_weight_cover(universe, sets_masks, local_lw, caps)
    witness = tuple(sorted(pool[j] for j in out.witness))
    value = set_log_value(lw, witness)
    if not out.optimal:
        lowerb = cover_ratio_log_lower(universe, sets_masks, local_lw)
        return CertifiedValue.bracket(min(lowerb, value), value, witness, out.note)
    return CertifiedValue.exact(value, witness)


def sep_count(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
) -> CertifiedValue:
    """Maximal cardinality of an (F,eps)-separated set."""
    zero = Potential.constant(sys.n_points, 0.0)
    return separated_value(sys, F, eps, zero, ScaleFunction.constant_one(), mode, caps, cache)


def spa_count(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
) -> CertifiedValue:
    """Minimal cardinality of an (F,eps)-spanning set."""
    zero = Potential.constant(sys.n_points, 0.0)
    return spanning_value(sys, F, eps, zero, ScaleFunction.constant_one(), mode, caps, cache)


def cover_candidates(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    cache: CellCache | None = None,
    clique_cap: int = 100_000,
) -> list[int]:
    """Candidate cover cells: strict eps/2 balls plus maximal diameter-<eps sets.

    On ultrametric systems these include the threshold classes, which are
    optimal for both the sup-weighted and inf-weighted cover quantities.
    """
    cache = cache or _SHARED_CACHE
    m = cache.dyn_metric(sys, F).matrix
    n = m.shape[0]
    cells = {_mask_from_bool(m[i] < eps / 2.0) for i in range(n)}
    adj = [_mask_from_bool(m[i] < eps) & ~(1 << i) for i in range(n)]
    cells.update(maximal_cliques(n, adj, cap=clique_cap))
    cells.discard(0)
    return sorted(cells, key=lambda c: (-c.bit_count(), c))


def cover_values(
    sys: FiniteGSystem,
    F: FinitePatch,
    eps: float,
    phi: Potential,
    s: ScaleFunction,
    which: str,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
) -> CertifiedValue:
    """Optimal weighted cover with mesh(d_F) < eps.

    ``which='p'`` charges each cell its sup weight, ``which='q'`` its inf
    weight.  The candidate family (eps/2 balls plus maximal diameter-<eps
    sets) is exact for q in general and for p on ultrametric systems; other
    inputs get a ``cover_candidates: restricted`` note.
    """
    if which not in ("p", "q"):
        raise InvalidArgumentError("which must be 'p' or 'q'")
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    cache = cache or _SHARED_CACHE
    lw = _log_weights(sys, phi, F, s, eps)
    n = sys.n_points
    note = "" if (sys.ultrametric or which == "q") else "cover_candidates: restricted"
    if sys.ultrametric:
        classes = _threshold_classes(cache.dyn_metric(sys, F).matrix, eps, strict=True)
        if classes is not None:
            if which == "p":
                members = [min(cls, key=lambda i: (-lw[i], i)) for cls in classes]
            else:
                members = [min(cls, key=lambda i: (lw[i], i)) for cls in classes]
            value = set_log_value(lw, members)
            witness = tuple(tuple(cls) for cls in classes)
            return CertifiedValue.exact(value, witness)
    mode = _resolve_mode(mode, n, False, caps)
    _check_exact_cap(mode, n, False, caps)
    cells = cover_candidates(sys, F, eps, cache)
    cell_members = [tuple(sorted(_iter_bits(c))) for c in cells]
    if which == "p":
        cell_lw = [max(float(lw[i]) for i in mem) for mem in cell_members]
    else:
        cell_lw = [min(float(lw[i]) for i in mem) for mem in cell_members]
    universe = (1 << n) - 1
    if mode == "greedy":
        g = greedy_cover(universe, cells, cell_lw)
        value = log_sum_exp(cell_lw[j] for j in sorted(g))
        lowerb = cover_ratio_log_lower(universe, cells, cell_lw)
        witness = tuple(cell_members[j] for j in sorted(g))
        return CertifiedValue.bracket(min(lowerb, value), value, witness, note)
    out = min_weight_cover(universe, cells, cell_lw, caps)
    value = log_sum_exp(cell_lw[j] for j in sorted(out.witness))
    witness = tuple(cell_members[j] for j in sorted(out.witness))
    if not out.optimal:
        lowerb = cover_ratio_log_lower(universe, cells, cell_lw)
        joined = "; ".join(x for x in (note, out.note) if x)
        return CertifiedValue.bracket(min(lowerb, value), value, witness, joined)
    return CertifiedValue.exact(value, witness, note)


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# -- profiles ------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileRow:
    quantity: str
    n: int
    patch_size: int
    eps: float
    value: CertifiedValue
    per_site: float
    scaled: float


@dataclass(frozen=True)
class PressureProfile:
    system_id: str
    s_kind: str
    phi_label: str
    rows: tuple[ProfileRow, ...]
    eps_grid: tuple[float, ...]
    n_grid: tuple[int, ...]

    def rows_for(self, quantity: str, eps: float | None = None) -> tuple[ProfileRow, ...]:
        out = [r for r in self.rows if r.quantity == quantity and (eps is None or r.eps == eps)]
        return tuple(sorted(out, key=lambda r: (r.eps, r.n)))

    @property
    def quantities(self) -> tuple[str, ...]:
        seen = []
        for r in self.rows:
            if r.quantity not in seen:
                seen.append(r.quantity)
        return tuple(seen)


_QUANTITY_FUNCS = {
    "Q": lambda sys, F, eps, phi, s, mode, caps, cache: spanning_value(sys, F, eps, phi, s, mode, caps, cache),
    "P": lambda sys, F, eps, phi, s, mode, caps, cache: separated_value(sys, F, eps, phi, s, mode, caps, cache),
    "p": lambda sys, F, eps, phi, s, mode, caps, cache: cover_values(sys, F, eps, phi, s, "p", mode, caps, cache),
    "q": lambda sys, F, eps, phi, s, mode, caps, cache: cover_values(sys, F, eps, phi, s, "q", mode, caps, cache),
    "sep": lambda sys, F, eps, phi, s, mode, caps, cache: sep_count(sys, F, eps, mode, caps, cache),
    "spa": lambda sys, F, eps, phi, s, mode, caps, cache: spa_count(sys, F, eps, mode, caps, cache),
}


def pressure_profile(
    sys: FiniteGSystem,
    folner: FolnerSequence,
    eps_grid,
    phi: Potential,
    s: ScaleFunction,
    quantities=QUANTITIES,
    mode: str = "auto",
    caps: SolveCaps = DEFAULT_CAPS,
    cache: CellCache | None = None,
    n_values=None,
) -> PressureProfile:
    """Table of certified cell values with per-site and scaled normalizations.

    per_site = log(value)/|F_n| and scaled = per_site/s(eps); the derived
    limit surrogates are finite-grid estimates, never asserted as limits.
    """
    eps_grid = tuple(float(e) for e in eps_grid)
    if not eps_grid or any(e <= 0 for e in eps_grid):
        raise InvalidArgumentError("eps grid must be nonempty and positive")
    unknown = [q for q in quantities if q not in _QUANTITY_FUNCS]
    if unknown:
        raise InvalidArgumentError(f"unknown quantities {unknown}")
    cache = cache or _SHARED_CACHE
    indices = range(1, len(folner) + 1) if n_values is None else n_values
    rows = []
    for n in indices:
        F = folner[n - 1]
        for eps in eps_grid:
            for qname in quantities:
                try:
                    cv = _QUANTITY_FUNCS[qname](sys, F, eps, phi, s, mode, caps, cache)
                except (SizeLimitError, InvalidArgumentError) as exc:
                    raise type(exc)(f"cell (quantity={qname}, n={n}, eps={eps}): {exc}") from exc
                per_site = cv.log_value / F.cardinality
                scaled = per_site / s.scale_at(eps)
                rows.append(ProfileRow(qname, n, F.cardinality, eps, cv, per_site, scaled))
    return PressureProfile(
        system_id=sys.system_id,
        s_kind=s.kind,
        phi_label=phi.label,
        rows=tuple(rows),
        eps_grid=eps_grid,
        n_grid=tuple(indices),
    )


def eps_level_surrogate(profile: PressureProfile, quantity: str, eps: float) -> float:
    """Trailing-half-in-n maximum of per-site values at fixed eps."""
    rows = profile.rows_for(quantity, eps)
    if not rows:
        raise InvalidArgumentError(f"profile has no rows for {quantity} at eps={eps}")
    tail = rows[len(rows) // 2 :]
    return max(r.per_site for r in tail)


def double_surrogate(profile: PressureProfile, quantity: str, s: ScaleFunction) -> float:
    """Max over the three smallest grid eps of level/s(eps)."""
    eps_sorted = sorted(set(profile.eps_grid))[:3]
    return max(eps_level_surrogate(profile, quantity, e) / s.scale_at(e) for e in eps_sorted)


@dataclass(frozen=True)
class ScalePressureEstimate:
    """Finite-grid scale-pressure surrogate with cross-checks and diagnostics."""

    sp: float
    cross: dict
    eps_levels: dict
    n_diffs: dict
    eps_diffs: dict
    label: str = "finite-grid estimate"


def scale_pressure_estimate(profile: PressureProfile, s: ScaleFunction) -> ScalePressureEstimate:
    """Assemble the scale-pressure surrogate from the spanning quantity.

    Cross-checks report the same double surrogate computed from the
    separated and cover quantities; convergence diagnostics list the
    successive per-site differences in n and the scaled differences in eps.
    """
    if not profile.rows_for("Q"):
        raise InvalidArgumentError("profile does not contain the spanning quantity Q")
    cross = {}
    eps_levels = {}
    n_diffs = {}
    eps_diffs = {}
    for qname in profile.quantities:
        eps_levels[qname] = {
            e: eps_level_surrogate(profile, qname, e) for e in sorted(set(profile.eps_grid))
        }
        if qname in ("Q", "P", "p", "q"):
            cross[qname] = double_surrogate(profile, qname, s)
        for e in sorted(set(profile.eps_grid)):
            rows = profile.rows_for(qname, e)
            n_diffs[(qname, e)] = tuple(
                b.per_site - a.per_site for a, b in zip(rows, rows[1:])
            )
        levels = [eps_levels[qname][e] / s.scale_at(e) for e in sorted(set(profile.eps_grid), reverse=True)]
        eps_diffs[qname] = tuple(b - a for a, b in zip(levels, levels[1:]))
    return ScalePressureEstimate(
        sp=cross["Q"],
        cross=cross,
        eps_levels=eps_levels,
        n_diffs=n_diffs,
        eps_diffs=eps_diffs,
    )
