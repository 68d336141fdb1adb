"""Pseudo-orbit windows, orbit spaces, product-space pressure quantities,
and tracking diagnostics.

A pseudo-orbit window assigns a point to every element of a finite window
W containing F and its generator translates; the defect is the worst
generator mismatch inside W, and enumeration keeps exactly the assignments
with defect strictly below the requested threshold.  Separation and
domination between windows both use the coordinatewise non-strict relation
"d(x_g, y_g) <= eps for all g in F", matching their defining displays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .certified import CertifiedValue, log_sum_exp
from .errors import InvalidArgumentError, SizeLimitError
from .group import Element, FinitePatch, FolnerSequence, GroupModel, canonical_enumeration, enumeration_key
from .optim import (
    DEFAULT_CAPS,
    SolveCaps,
    clique_cover_log_upper,
    cover_ratio_log_lower,
    greedy_cover,
    greedy_independent,
    max_weight_independent_set,
    min_weight_cover,
)
from .pressure import PressureProfile, ProfileRow, double_surrogate, separated_value
from .scale import ScaleFunction
from .system import FiniteGSystem, Potential


@dataclass(frozen=True)
class PseudoOrbitWindow:
    """An assignment of points to a finite window with bounded generator defect."""

    elements: tuple[Element, ...]
    assignment: tuple[int, ...]
    defect: float
    eps: float

    def point_at(self, g: Element) -> int:
        return self.assignment[self.elements.index(g)]

    @property
    def is_orbit(self) -> bool:
        return self.defect == 0.0


def window_patch(group: GroupModel, F: FinitePatch) -> FinitePatch:
    """The constraint window F together with all generator translates of F."""
    out = set(F.elements)
    for t in group.generators:
        for g in F.elements:
            out.add(tuple(a + b for a, b in zip(t, g)))
    return FinitePatch(tuple(sorted(out)))


def _ordered_elements(patch: FinitePatch) -> tuple[Element, ...]:
    return tuple(sorted(patch.elements, key=enumeration_key))


def enumerate_pseudo_orbits(
    sys: FiniteGSystem,
    window: FinitePatch,
    eps: float,
    caps: SolveCaps = DEFAULT_CAPS,
) -> list[PseudoOrbitWindow]:
    """All window assignments with generator defect strictly below eps.

    Depth-first search in word-length order with pruning on the partial
    defect; raises SizeLimitError past the enumeration cap.
    """
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    elements = _ordered_elements(window)
    pos = {g: i for i, g in enumerate(elements)}
    n = sys.n_points
    # constraints (src, dst, perm) meaning d(y_dst, t(y_src)) with dst = t*src
    by_depth: list[list[tuple[int, np.ndarray]]] = [[] for _ in elements]
    for t in sys.group.generators:
        perm = sys.perm_for(t)
        for g in elements:
            tg = tuple(a + b for a, b in zip(t, g))
            if tg in pos:
                by_depth[max(pos[g], pos[tg])].append((pos[g], pos[tg], perm))
    metric = sys.metric
    out: list[PseudoOrbitWindow] = []
    assignment = [0] * len(elements)
    visits = 0

    def dfs(depth: int, defect: float):
        nonlocal visits
        visits += 1
        if visits > caps.enumeration:
            raise SizeLimitError(f"pseudo-orbit enumeration exceeded {caps.enumeration} nodes")
        if depth == len(elements):
            out.append(
                PseudoOrbitWindow(elements, tuple(assignment), defect, eps)
            )
            return
        for point in range(n):
            assignment[depth] = point
            local = defect
            ok = True
            for src, dst, perm in by_depth[depth]:
                d = float(metric[assignment[dst], perm[assignment[src]]])
                if d >= eps:
                    ok = False
                    break
                if d > local:
                    local = d
            if ok:
                dfs(depth + 1, local)

    dfs(0, 0.0)
    return out


def true_orbit_windows(sys: FiniteGSystem, window: FinitePatch) -> list[PseudoOrbitWindow]:
    """The genuine orbit assignments g -> g*x, one per point, defect zero.

    Constructed, not enumerated, so the threshold field is infinite.
    """
    elements = _ordered_elements(window)
    perms = [sys.perm_for(g) for g in elements]
    return [
        PseudoOrbitWindow(elements, tuple(int(p[x]) for p in perms), 0.0, float("inf"))
        for x in range(sys.n_points)
    ]


# -- product-space pressure quantities ------------------------------------------


def _window_log_weights(sys, windows, F, phi, s, eps) -> list[float]:
    factor = s.scale_at(eps)
    vals = phi.values
    out = []
    for w in windows:
        pos = {g: i for i, g in enumerate(w.elements)}
        out.append(factor * sum(vals[w.assignment[pos[g]]] for g in F))
    return out


def _po_relation_masks(sys, windows, F, eps) -> list[int]:
    """Bitmask per window of windows within eps in every F-coordinate."""
    if not windows:
        raise InvalidArgumentError("need at least one window")
    elements = windows[0].elements
    if any(w.elements != elements for w in windows):
        raise InvalidArgumentError("windows must share one element ordering")
    pos = [elements.index(g) for g in F if g in elements]
    if len(pos) != len(tuple(F)):
        raise InvalidArgumentError("every element of F must lie inside the window")
    coords = np.array([[w.assignment[k] for k in pos] for w in windows])
    m = len(windows)
    masks = []
    for i in range(m):
        close = np.ones(m, dtype=bool)
        for col, _ in enumerate(pos):
            close &= sys.metric[coords[i, col], coords[:, col]] <= eps
        mask = 0
        for j in np.nonzero(close)[0]:
            mask |= 1 << int(j)
        masks.append(mask)
    return masks


def po_separated(
    sys: FiniteGSystem,
    windows,
    F: FinitePatch,
    eps: float,
    phi: Potential,
    s: ScaleFunction,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
) -> CertifiedValue:
    """Max weighted mass of windows pairwise separated in some F-coordinate."""
    masks = _po_relation_masks(sys, windows, F, eps)
    lw = _window_log_weights(sys, windows, F, phi, s, eps)
    m = len(windows)
    if mode == "greedy" or (mode == "auto" and m > caps.exact_points):
        g = greedy_independent(m, masks, lw)
        val = log_sum_exp(lw[i] for i in g)
        return CertifiedValue.bracket(val, clique_cover_log_upper(m, masks, lw), g)
    if m > caps.exact_points:
        raise SizeLimitError(f"{m} windows exceed exact cap {caps.exact_points}; use greedy")
    out = max_weight_independent_set(m, masks, lw, caps)
    val = log_sum_exp(lw[i] for i in sorted(out.witness))
    if not out.optimal:
        return CertifiedValue.bracket(val, clique_cover_log_upper(m, masks, lw), out.witness, out.note)
    return CertifiedValue.exact(val, out.witness)


def po_spanning(
    sys: FiniteGSystem,
    windows,
    F: FinitePatch,
    eps: float,
    phi: Potential,
    s: ScaleFunction,
    mode: str = "exact",
    caps: SolveCaps = DEFAULT_CAPS,
) -> CertifiedValue:
    """Min weighted mass of windows dominating all windows coordinatewise."""
    masks = _po_relation_masks(sys, windows, F, eps)
    lw = _window_log_weights(sys, windows, F, phi, s, eps)
    m = len(windows)
    universe = (1 << m) - 1
    if mode == "greedy" or (mode == "auto" and m > caps.exact_points):
        g = greedy_cover(universe, masks, lw)
        val = log_sum_exp(lw[i] for i in g)
        return CertifiedValue.bracket(min(cover_ratio_log_lower(universe, masks, lw), val), val, g)
    if m > caps.exact_points:
        raise SizeLimitError(f"{m} windows exceed exact cap {caps.exact_points}; use greedy")
    out = min_weight_cover(universe, masks, lw, caps)
    val = log_sum_exp(lw[i] for i in sorted(out.witness))
    if not out.optimal:
        return CertifiedValue.bracket(
            min(cover_ratio_log_lower(universe, masks, lw), val), val, out.witness, out.note
        )
    return CertifiedValue.exact(val, out.witness)


# -- orbit space and the product metric ------------------------------------------


@dataclass(frozen=True)
class TruncatedProductPoint:
    """Coordinates of an orbit over a finite window, with a certified tail bound."""

    elements: tuple[Element, ...]
    coordinates: tuple[int, ...]
    weights: tuple[float, ...]
    tail_bound: float

    @property
    def base_point(self) -> int:
        return self.coordinates[self.elements.index((0,) * len(self.elements[0]))]


def _dbar_weights(group: GroupModel, elements: tuple[Element, ...]) -> tuple[float, ...]:
    """2^-i weights from the canonical group enumeration, restricted to W."""
    need = set(elements)
    count = 8
    while True:
        enum = canonical_enumeration(group, count)
        idx = {g: i for i, g in enumerate(enum)}
        if need <= set(enum):
            return tuple(2.0 ** (-idx[g]) for g in elements)
        count *= 2


def orbit_space(sys: FiniteGSystem, window: FinitePatch) -> list[TruncatedProductPoint]:
    """One truncated product point per system point, coordinates g -> g*x."""
    elements = _ordered_elements(window)
    weights = _dbar_weights(sys.group, elements)
    tail = sys.diameter * (2.0 - sum(weights))
    perms = [sys.perm_for(g) for g in elements]
    return [
        TruncatedProductPoint(elements, tuple(int(p[x]) for p in perms), weights, tail)
        for x in range(sys.n_points)
    ]


def truncated_dbar(sys: FiniteGSystem, coords_a, coords_b, weights) -> float:
    return float(sum(w * sys.metric[a, b] for w, a, b in zip(weights, coords_a, coords_b)))


def hausdorff_gap(sys: FiniteGSystem, windows, orbit_points) -> float:
    """One-sided gap: worst window's distance to the orbit set, plus the tail.

    Both families must share the same window elements; the certified tail
    bound accounts for every coordinate outside the window.
    """
    if not windows or not orbit_points:
        raise InvalidArgumentError("need nonempty window and orbit families")
    elements = orbit_points[0].elements
    weights = orbit_points[0].weights
    if any(w.elements != elements for w in windows):
        raise InvalidArgumentError("windows and orbit points must share one element ordering")
    worst = 0.0
    for w in windows:
        best = min(
            truncated_dbar(sys, w.assignment, op.coordinates, weights) for op in orbit_points
        )
        if best > worst:
            worst = best
    return worst + orbit_points[0].tail_bound


def tracking_parameters(sys: FiniteGSystem, eta: float) -> tuple[FinitePatch, float, float]:
    """Window and threshold realizing the tracking recipe for a target eta.

    Picks the shortest canonical window whose tail bound is below eta/3 and
    the largest eps0 such that base distance below eps0 forces the windowed
    orbit distance below eta/3.
    """
    if eta <= 0:
        raise InvalidArgumentError("eta must be positive")
    diam = sys.diameter if sys.diameter > 0 else 1.0
    count = 1
    while diam * 2.0 ** (-(count - 1)) >= eta / 3.0:
        count += 1
    elements = canonical_enumeration(sys.group, count)
    window = FinitePatch(tuple(sorted(elements)))
    weights = _dbar_weights(sys.group, _ordered_elements(window))
    tail = sys.diameter * (2.0 - sum(weights))
    n = sys.n_points
    perms = [sys.perm_for(g) for g in _ordered_elements(window)]
    eps0 = diam + 1.0
    for x in range(n):
        for y in range(x + 1, n):
            d_window = max(float(sys.metric[p[x], p[y]]) for p in perms)
            if d_window >= eta / 3.0 and float(sys.metric[x, y]) < eps0:
                eps0 = float(sys.metric[x, y])
    return window, eps0, tail


# -- report ------------------------------------------------------------------------


@dataclass(frozen=True)
class POCell:
    n: int
    eps: float
    eps_pseudo: float
    n_windows: int
    pop_log: float
    poq_log: float
    x_side_log: float
    containment_ok: bool


@dataclass(frozen=True)
class PSPReport:
    profile: PressureProfile
    psp_surrogate: float
    sp_surrogate: float | None
    gap: float | None
    pop_poq_gap: float
    cells: tuple[POCell, ...]
    monotone_ok: bool
    collapse_eps: float


def psp_report(
    sys: FiniteGSystem,
    folner: FolnerSequence,
    eps_grid,
    eps_pseudo_grid,
    phi: Potential,
    s: ScaleFunction,
    mode: str = "auto",
    caps: SolveCaps = DEFAULT_CAPS,
    sp_surrogate: float | None = None,
) -> PSPReport:
    """Pseudo-orbit pressure cells across the grid, with the inner-limit
    surrogate taken at the smallest pseudo threshold.

    Reports per-cell containment against the base-system separated values,
    monotonicity of the window families in the pseudo threshold, and the
    gap between the separated- and spanning-side surrogates.
    """
    eps_grid = tuple(float(e) for e in eps_grid)
    pseudo_sorted = tuple(sorted(float(e) for e in eps_pseudo_grid))
    if not eps_grid or not pseudo_sorted:
        raise InvalidArgumentError("eps and eps_pseudo grids must be nonempty")
    cells = []
    rows = []
    monotone_ok = True
    for n in range(1, len(folner) + 1):
        F = folner[n - 1]
        window = window_patch(sys.group, F)
        families = {ep: enumerate_pseudo_orbits(sys, window, ep, caps) for ep in pseudo_sorted}
        for small, big in zip(pseudo_sorted, pseudo_sorted[1:]):
            small_set = {w.assignment for w in families[small]}
            big_set = {w.assignment for w in families[big]}
            if not small_set <= big_set:
                monotone_ok = False
        for eps in eps_grid:
            x_side = separated_value(sys, F, eps, phi, s, mode=mode, caps=caps)
            for ep in pseudo_sorted:
                windows = families[ep]
                pop = po_separated(sys, windows, F, eps, phi, s, mode=mode, caps=caps)
                poq = po_spanning(sys, windows, F, eps, phi, s, mode=mode, caps=caps)
                contained = pop.log_value >= x_side.log_value - 1e-9
                cells.append(
                    POCell(n, eps, ep, len(windows), pop.log_value, poq.log_value,
                           x_side.log_value, contained)
                )
                if ep == pseudo_sorted[0]:
                    for qname, cv in (("POP", pop), ("POQ", poq)):
                        per_site = cv.log_value / F.cardinality
                        rows.append(
                            ProfileRow(qname, n, F.cardinality, eps, cv, per_site,
                                       per_site / s.scale_at(eps))
                        )
    profile = PressureProfile(
        system_id=sys.system_id,
        s_kind=s.kind,
        phi_label=phi.label,
        rows=tuple(rows),
        eps_grid=eps_grid,
        n_grid=tuple(range(1, len(folner) + 1)),
    )
    psp = double_surrogate(profile, "POQ", s)
    pop_surr = double_surrogate(profile, "POP", s)
    return PSPReport(
        profile=profile,
        psp_surrogate=psp,
        sp_surrogate=sp_surrogate,
        gap=None if sp_surrogate is None else psp - sp_surrogate,
        pop_poq_gap=pop_surr - psp,
        cells=tuple(cells),
        monotone_ok=monotone_ok,
        collapse_eps=sys.min_positive_distance,
    )


# -- serialization ------------------------------------------------------------------


def windows_to_json(windows) -> str:
    """Pseudo-orbit windows as JSON keyed by group-element coordinates."""
    docs = []
    for w in windows:
        docs.append(
            {
                "eps": w.eps,
                "defect": w.defect,
                "assignment": {",".join(map(str, g)): int(x) for g, x in zip(w.elements, w.assignment)},
            }
        )
    return json.dumps(docs, sort_keys=True)


def windows_from_json(text: str) -> list[PseudoOrbitWindow]:
    docs = json.loads(text)
    out = []
    for doc in docs:
        items = [
            (tuple(int(c) for c in key.split(",")), int(v)) for key, v in doc["assignment"].items()
        ]
        items.sort(key=lambda kv: enumeration_key(kv[0]))
        out.append(
            PseudoOrbitWindow(
                tuple(g for g, _ in items),
                tuple(x for _, x in items),
                float(doc["defect"]),
                float(doc["eps"]),
            )
        )
    return out
