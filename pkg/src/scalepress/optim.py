"""Deterministic combinatorial solvers behind the pressure quantities.

Branch-and-bound maximum-weight independent set, minimum-weight set cover,
minimum-weight partial cover (mass-constrained), greedy brackets with
matching relaxation bounds, and maximal-clique enumeration.

Conventions shared by every solver:
  - vertex/set weights enter as log-weights; internally each solve rescales
    by the maximum log-weight so linear arithmetic stays within [0, n];
  - ties break toward the lowest index, so witnesses are reproducible;
  - node caps make worst-case runtime bounded; a capped exact solve
    degrades to a certified greedy bracket instead of failing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgumentError, SizeLimitError


@dataclass(frozen=True)
class SolveCaps:
    """Resource limits for exact solves."""

    exact_points: int = 256
    nodes: int = 10_000_000
    cell_seconds: float | None = 30.0
    enumeration: int = 10_000_000


DEFAULT_CAPS = SolveCaps()


@dataclass
class SolveOutcome:
    witness: tuple[int, ...]
    optimal: bool
    nodes: int
    note: str = ""


class _Budget:
    """Node counter plus coarse wall-clock guard, checked every 2048 nodes."""

    __slots__ = ("nodes", "max_nodes", "deadline", "exhausted")

    def __init__(self, caps: SolveCaps):
        self.nodes = 0
        self.max_nodes = caps.nodes
        self.deadline = None if caps.cell_seconds is None else time.monotonic() + caps.cell_seconds
        self.exhausted = False

    def tick(self) -> bool:
        self.nodes += 1
        if self.nodes >= self.max_nodes:
            self.exhausted = True
        elif self.deadline is not None and self.nodes % 2048 == 0:
            if time.monotonic() > self.deadline:
                self.exhausted = True
        return self.exhausted


def _scaled(logw) -> tuple[list[float], float]:
    lw = [float(v) for v in logw]
    m = max(lw)
    return [math.exp(v - m) for v in lw], m


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# -- maximum-weight independent set -------------------------------------------


def greedy_independent(n: int, conflict_masks: list[int], logw) -> tuple[int, ...]:
    """Weight-descending greedy independent set (lowest index on ties)."""
    order = sorted(range(n), key=lambda i: (-float(logw[i]), i))
    used = 0
    chosen = []
    for i in order:
        if not (used >> i) & 1:
            chosen.append(i)
            used |= conflict_masks[i]
    return tuple(sorted(chosen))


def clique_cover_log_upper(n: int, conflict_masks: list[int], logw, restrict: int | None = None) -> float:
    """Upper bound via a greedy clique cover: one vertex per clique at most."""
    remaining = (1 << n) - 1 if restrict is None else restrict
    w, m = _scaled(logw)
    total = 0.0
    while remaining:
        v = (remaining & -remaining).bit_length() - 1
        clique = [v]
        cand = conflict_masks[v] & remaining & ~(1 << v)
        for u in _bits(cand):
            if all((conflict_masks[u] >> c) & 1 for c in clique):
                clique.append(u)
        best = 0.0
        for c in clique:
            if w[c] > best:
                best = w[c]
            remaining &= ~(1 << c)
        total += best
    if total == 0.0:
        return float("-inf")
    return m + math.log(total)


def max_weight_independent_set(
    n: int, conflict_masks: list[int], logw, caps: SolveCaps = DEFAULT_CAPS
) -> SolveOutcome:
    """Exact MWIS by branch and bound; degrades to greedy on budget exhaustion.

    conflict_masks[i] must include bit i itself.
    """
    w, _ = _scaled(logw)
    greedy = greedy_independent(n, conflict_masks, logw)
    best_weight = sum(w[i] for i in greedy)
    best_set = list(greedy)
    order = sorted(range(n), key=lambda i: (-w[i], i))
    budget = _Budget(caps)

    def dfs(mask: int, cur: float, chosen: list[int], remaining: float):
        nonlocal best_weight, best_set
        if budget.exhausted or budget.tick():
            return
        if cur + remaining <= best_weight:
            return
        if mask == 0:
            if cur > best_weight:
                best_weight = cur
                best_set = chosen.copy()
            return
        node = next(i for i in order if (mask >> i) & 1)
        removed = conflict_masks[node] & mask
        removed_weight = sum(w[i] for i in _bits(removed))
        chosen.append(node)
        dfs(mask & ~removed, cur + w[node], chosen, remaining - removed_weight)
        chosen.pop()
        dfs(mask & ~(1 << node), cur, chosen, remaining - w[node])

    full = (1 << n) - 1
    dfs(full, 0.0, [], sum(w))
    witness = tuple(sorted(best_set))
    if budget.exhausted:
        return SolveOutcome(witness, False, budget.nodes, "node cap reached; greedy bracket")
    return SolveOutcome(witness, True, budget.nodes)


# -- minimum-weight set cover --------------------------------------------------


def greedy_cover(universe: int, sets_masks: list[int], logw) -> tuple[int, ...]:
    """Chvatal greedy: repeatedly take the cheapest weight per newly covered point."""
    w, _ = _scaled(logw)
    uncovered = universe
    chosen = []
    while uncovered:
        best_j, best_ratio = -1, None
        for j, s in enumerate(sets_masks):
            gain = (s & uncovered).bit_count()
            if gain == 0:
                continue
            ratio = w[j] / gain
            if best_ratio is None or ratio < best_ratio - 1e-15 or (
                abs(ratio - best_ratio) <= 1e-15 and j < best_j
            ):
                best_j, best_ratio = j, ratio
        if best_j < 0:
            raise InvalidArgumentError("universe is not coverable by the given sets")
        chosen.append(best_j)
        uncovered &= ~sets_masks[best_j]
    return tuple(sorted(chosen))


def cover_ratio_log_lower(universe: int, sets_masks: list[int], logw) -> float:
    """Assignment bound: every point pays at least min over covering sets of w/|S|."""
    w, m = _scaled(logw)
    sizes = [s.bit_count() for s in sets_masks]
    total = 0.0
    for x in _bits(universe):
        best = None
        for j, s in enumerate(sets_masks):
            if (s >> x) & 1:
                c = w[j] / sizes[j]
                if best is None or c < best:
                    best = c
        if best is None:
            raise InvalidArgumentError("universe is not coverable by the given sets")
        total += best
    if total == 0.0:
        return float("-inf")
    return m + math.log(total)


def min_weight_cover(
    universe: int, sets_masks: list[int], logw, caps: SolveCaps = DEFAULT_CAPS
) -> SolveOutcome:
    """Exact minimum-weight cover of ``universe`` by branch and bound.

    Branches on the uncovered point with the fewest covering sets.
    """
    w, _ = _scaled(logw)
    point_cost = {}
    sizes = [s.bit_count() for s in sets_masks]
    covers_by_point: dict[int, list[int]] = {}
    for x in _bits(universe):
        cov = [j for j, s in enumerate(sets_masks) if (s >> x) & 1]
        if not cov:
            raise InvalidArgumentError("universe is not coverable by the given sets")
        covers_by_point[x] = sorted(cov, key=lambda j: (w[j], j))
        point_cost[x] = min(w[j] / sizes[j] for j in cov)

    greedy = greedy_cover(universe, sets_masks, logw)
    best_weight = sum(w[j] for j in greedy)
    best_sets = list(greedy)
    budget = _Budget(caps)

    def lower(uncovered: int) -> float:
        return sum(point_cost[x] for x in _bits(uncovered))

    def dfs(uncovered: int, cur: float, chosen: list[int]):
        nonlocal best_weight, best_sets
        if budget.exhausted or budget.tick():
            return
        if uncovered == 0:
            if cur < best_weight:
                best_weight = cur
                best_sets = chosen.copy()
            return
        if cur + lower(uncovered) >= best_weight:
            return
        x = min(_bits(uncovered), key=lambda p: (len(covers_by_point[p]), p))
        for j in covers_by_point[x]:
            chosen.append(j)
            dfs(uncovered & ~sets_masks[j], cur + w[j], chosen)
            chosen.pop()
            if budget.exhausted:
                return

    dfs(universe, 0.0, [])
    witness = tuple(sorted(best_sets))
    if budget.exhausted:
        return SolveOutcome(witness, False, budget.nodes, "node cap reached; greedy bracket")
    return SolveOutcome(witness, True, budget.nodes)


# -- minimum-weight partial cover ----------------------------------------------


def _mass_of(mask: int, masses: list[Fraction]) -> Fraction:
    return sum((masses[x] for x in _bits(mask)), Fraction(0))


def _meets(mass: Fraction, threshold: Fraction, strict: bool) -> bool:
    return mass > threshold if strict else mass >= threshold


def greedy_partial_cover(
    sets_masks: list[int], logw, masses: list[Fraction], threshold: Fraction, strict: bool
) -> tuple[int, ...]:
    """Greedy mass-per-weight partial cover; exact rational feasibility test."""
    w, _ = _scaled(logw)
    covered = 0
    covered_mass = Fraction(0)
    chosen: list[int] = []
    while not _meets(covered_mass, threshold, strict):
        best_j, best_ratio = -1, None
        for j, s in enumerate(sets_masks):
            gain = _mass_of(s & ~covered, masses)
            if gain == 0:
                continue
            ratio = w[j] / float(gain)
            if best_ratio is None or ratio < best_ratio - 1e-15 or (
                abs(ratio - best_ratio) <= 1e-15 and j < best_j
            ):
                best_j, best_ratio = j, ratio
        if best_j < 0:
            raise InvalidArgumentError("total available mass cannot meet the threshold")
        chosen.append(best_j)
        covered |= sets_masks[best_j]
        covered_mass = _mass_of(covered, masses)
    return tuple(sorted(chosen))


def partial_cover_log_lower(
    sets_masks: list[int], logw, masses: list[Fraction], threshold: Fraction
) -> float:
    """Ratio bound: any feasible family pays at least threshold * min(w/mass)."""
    w, m = _scaled(logw)
    best = None
    for j, s in enumerate(sets_masks):
        sm = _mass_of(s, masses)
        if sm == 0:
            continue
        r = w[j] / float(sm)
        if best is None or r < best:
            best = r
    if best is None or threshold <= 0:
        return float("-inf")
    total = best * float(threshold)
    if total <= 0.0:
        return float("-inf")
    return m + math.log(total)


def min_weight_partial_cover(
    sets_masks: list[int],
    logw,
    masses: list[Fraction],
    threshold: Fraction,
    strict: bool,
    caps: SolveCaps = DEFAULT_CAPS,
) -> SolveOutcome:
    """Exact minimum-weight family whose union mass meets the threshold.

    Feasibility comparisons are exact rational arithmetic; only the weight
    objective lives in floats.
    """
    n_sets = len(sets_masks)
    w, _ = _scaled(logw)
    greedy = greedy_partial_cover(sets_masks, logw, masses, threshold, strict)
    best_weight = sum(w[j] for j in greedy)
    best_sets = list(greedy)
    order = sorted(range(n_sets), key=lambda j: (w[j] / max(float(_mass_of(sets_masks[j], masses)), 1e-300), j))
    suffix_union = [0] * (n_sets + 1)
    for pos in range(n_sets - 1, -1, -1):
        suffix_union[pos] = suffix_union[pos + 1] | sets_masks[order[pos]]
    budget = _Budget(caps)

    def dfs(pos: int, covered: int, covered_mass: Fraction, cur: float, chosen: list[int]):
        nonlocal best_weight, best_sets
        if budget.exhausted or budget.tick():
            return
        if _meets(covered_mass, threshold, strict):
            if cur < best_weight:
                best_weight = cur
                best_sets = chosen.copy()
            return
        if pos >= n_sets or cur >= best_weight:
            return
        reachable = _mass_of((covered | suffix_union[pos]) & ~covered, masses) + covered_mass
        if not _meets(reachable, threshold, strict):
            return
        j = order[pos]
        gain = sets_masks[j] & ~covered
        if gain:
            chosen.append(j)
            dfs(pos + 1, covered | sets_masks[j], covered_mass + _mass_of(gain, masses), cur + w[j], chosen)
            chosen.pop()
        dfs(pos + 1, covered, covered_mass, cur, chosen)

    dfs(0, 0, Fraction(0), 0.0, [])
    witness = tuple(sorted(best_sets))
    if budget.exhausted:
        return SolveOutcome(witness, False, budget.nodes, "node cap reached; greedy bracket")
    return SolveOutcome(witness, True, budget.nodes)


# -- maximal cliques -----------------------------------------------------------


def maximal_cliques(n: int, adj_masks: list[int], cap: int = 100_000) -> list[int]:
    """All maximal cliques (Bron-Kerbosch with pivot), as bitmasks sorted ascending.

    adj_masks[i] must exclude bit i.
    """
    out: list[int] = []

    def expand(r: int, p: int, x: int):
        if len(out) > cap:
            raise SizeLimitError(f"more than {cap} maximal cliques")
        if p == 0 and x == 0:
            out.append(r)
            return
        pivot_pool = p | x
        pivot = max(_bits(pivot_pool), key=lambda v: (adj_masks[v] & p).bit_count())
        for v in _bits(p & ~adj_masks[pivot]):
            expand(r | (1 << v), p & adj_masks[v], x & adj_masks[v])
            p &= ~(1 << v)
            x |= 1 << v

    if n:
        expand(0, (1 << n) - 1, 0)
    return sorted(out)
