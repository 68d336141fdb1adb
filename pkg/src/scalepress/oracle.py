"""Independent brute-force evaluators for every optimized quantity.

This module deliberately shares no code with the branch-and-bound solvers:
distances are recomputed from the generator maps with plain loops and every
optimum is found by exhaustive subset or cover enumeration.  It exists so
each production value can be cross-checked on small instances.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .certified import log_sum_exp
from .errors import SizeLimitError
from .group import FinitePatch
from .system import FiniteGSystem, Potential

ORACLE_POINT_CAP = 12


def _require_small(n: int, what: str):
    if n > ORACLE_POINT_CAP:
        raise SizeLimitError(f"oracle refuses {what} with {n} items (cap {ORACLE_POINT_CAP})")


def orbit_distance(sys: FiniteGSystem, F: FinitePatch, x: int, y: int) -> float:
    """d_F recomputed pointwise from the generator maps."""
    best = 0.0
    for g in F:
        p = sys.perm_for(g)
        d = sys.metric[p[x], p[y]]
        if d > best:
            best = float(d)
    return best


def _orbit_log_weights(sys: FiniteGSystem, F: FinitePatch, phi: Potential, s_at_eps: float):
    vals = phi.values
    out = []
    for x in range(sys.n_points):
        total = 0.0
        for g in F:
            total += vals[sys.perm_for(g)[x]]
        out.append(s_at_eps * total)
    return out


def oracle_separated(sys, F, eps, phi, s_at_eps: float) -> tuple[float, tuple[int, ...]]:
    """Max over all subsets with pairwise d_F > eps of the weighted mass."""
    n = sys.n_points
    _require_small(n, "separated enumeration")
    lw = _orbit_log_weights(sys, F, phi, s_at_eps)
    apart = [[orbit_distance(sys, F, i, j) > eps for j in range(n)] for i in range(n)]
    best, best_set = float("-inf"), ()
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if (mask >> i) & 1]
        ok = all(apart[a][b] for a, b in itertools.combinations(members, 2))
        if not ok:
            continue
        v = log_sum_exp(lw[i] for i in members)
        if v > best:
            best, best_set = v, tuple(members)
    return best, best_set


def oracle_spanning(sys, F, eps, phi, s_at_eps: float) -> tuple[float, tuple[int, ...]]:
    """Min over all subsets dominating every point via d_F < eps."""
    n = sys.n_points
    _require_small(n, "spanning enumeration")
    lw = _orbit_log_weights(sys, F, phi, s_at_eps)
    close = [[orbit_distance(sys, F, i, j) < eps for j in range(n)] for i in range(n)]
    best, best_set = float("inf"), ()
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if (mask >> i) & 1]
        if all(any(close[x][y] for y in members) for x in range(n)):
            v = log_sum_exp(lw[i] for i in members)
            if v < best:
                best, best_set = v, tuple(members)
    return best, best_set


def oracle_sep_count(sys, F, eps) -> int:
    n = sys.n_points
    _require_small(n, "separated-count enumeration")
    apart = [[orbit_distance(sys, F, i, j) > eps for j in range(n)] for i in range(n)]
    best = 0
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if (mask >> i) & 1]
        if len(members) <= best:
            continue
        if all(apart[a][b] for a, b in itertools.combinations(members, 2)):
            best = len(members)
    return best


def oracle_spa_count(sys, F, eps) -> int:
    n = sys.n_points
    _require_small(n, "spanning-count enumeration")
    close = [[orbit_distance(sys, F, i, j) < eps for j in range(n)] for i in range(n)]
    best = n
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if (mask >> i) & 1]
        if len(members) >= best:
            continue
        if all(any(close[x][y] for y in members) for x in range(n)):
            best = len(members)
    return best


def _oracle_candidate_cells(sys, F, eps) -> list[tuple[int, ...]]:
    """Strict eps/2 balls plus maximal diameter-<eps subsets, by brute force."""
    n = sys.n_points
    dist = [[orbit_distance(sys, F, i, j) for j in range(n)] for i in range(n)]
    cells = set()
    for c in range(n):
        ball = tuple(i for i in range(n) if dist[c][i] < eps / 2.0)
        if ball:
            cells.add(ball)
    small = set()
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if (mask >> i) & 1]
        if all(dist[a][b] < eps for a, b in itertools.combinations(members, 2)):
            small.add(mask)
    for mask in small:
        if all((mask >> i) & 1 or (mask | (1 << i)) not in small for i in range(n)):
            cells.add(tuple(i for i in range(n) if (mask >> i) & 1))
    return sorted(cells)


def oracle_cover(sys, F, eps, phi, s_at_eps: float, which: str) -> float:
    """Exhaustive minimal-cover search over the candidate cell family."""
    n = sys.n_points
    _require_small(n, "cover enumeration")
    lw = _orbit_log_weights(sys, F, phi, s_at_eps)
    cells = _oracle_candidate_cells(sys, F, eps)
    if which == "p":
        cell_lw = [max(lw[i] for i in cell) for cell in cells]
    else:
        cell_lw = [min(lw[i] for i in cell) for cell in cells]
    containing = [[j for j, cell in enumerate(cells) if x in cell] for x in range(n)]
    best = [float("inf")]

    def search(covered: set, chosen: list):
        if len(covered) == n:
            v = log_sum_exp(cell_lw[j] for j in chosen)
            if v < best[0]:
                best[0] = v
            return
        x = min(i for i in range(n) if i not in covered)
        for j in containing[x]:
            if j in chosen:
                continue
            search(covered | set(cells[j]), chosen + [j])

    search(set(), [])
    return best[0]


def oracle_ball_cover_count(sys, mu_weights, F, eps, delta, centers=None) -> int:
    """Fewest strict-eps dynamical balls whose union mass exceeds 1 - delta."""
    n = sys.n_points
    _require_small(n, "ball-cover enumeration")
    centers = list(range(n)) if centers is None else list(centers)
    threshold = Fraction(1) - Fraction(delta)
    balls = [
        frozenset(i for i in range(n) if orbit_distance(sys, F, c, i) < eps) for c in centers
    ]
    best = None
    for r in range(1, len(centers) + 1):
        if best is not None:
            break
        for combo in itertools.combinations(range(len(centers)), r):
            mass = sum((mu_weights[i] for i in frozenset().union(*(balls[j] for j in combo))), Fraction(0))
            if mass > threshold:
                best = r
                break
    if best is None:
        raise SizeLimitError("no ball family reaches the mass threshold")
    return best


def oracle_measure_pressure(
    sys, mu_weights, F, eps, delta, phi, s_at_eps: float, centers=None
) -> float:
    """Min weighted mass of a family whose strict-eps balls carry mass >= 1-delta."""
    n = sys.n_points
    _require_small(n, "partial-domination enumeration")
    centers = list(range(n)) if centers is None else list(centers)
    lw = _orbit_log_weights(sys, F, phi, s_at_eps)
    threshold = Fraction(1) - Fraction(delta)
    balls = [
        frozenset(i for i in range(n) if orbit_distance(sys, F, c, i) < eps) for c in centers
    ]
    best = float("inf")
    for mask in range(1, 1 << len(centers)):
        chosen = [j for j in range(len(centers)) if (mask >> j) & 1]
        union = frozenset().union(*(balls[j] for j in chosen))
        mass = sum((mu_weights[i] for i in union), Fraction(0))
        if mass >= threshold:
            v = log_sum_exp(lw[centers[j]] for j in chosen)
            if v < best:
                best = v
    return best


# -- pseudo-orbit quantities ---------------------------------------------------


def _window_log_weight(sys, window_elements, assignment, F, phi, s_at_eps: float) -> float:
    pos = {g: k for k, g in enumerate(window_elements)}
    return s_at_eps * sum(phi.values[assignment[pos[g]]] for g in F)


def _window_conflict(sys, wa, wb, window_elements, F, eps) -> bool:
    """True when no coordinate over F separates the two windows (d <= eps)."""
    pos = {g: k for k, g in enumerate(window_elements)}
    return all(sys.metric[wa[pos[g]], wb[pos[g]]] <= eps for g in F)


def oracle_po_separated(sys, window_elements, assignments, F, eps, phi, s_at_eps: float) -> float:
    m = len(assignments)
    _require_small(m, "pseudo-orbit separated enumeration")
    lw = [_window_log_weight(sys, window_elements, a, F, phi, s_at_eps) for a in assignments]
    best = float("-inf")
    for mask in range(1, 1 << m):
        members = [i for i in range(m) if (mask >> i) & 1]
        if all(
            not _window_conflict(sys, assignments[a], assignments[b], window_elements, F, eps)
            for a, b in itertools.combinations(members, 2)
        ):
            v = log_sum_exp(lw[i] for i in members)
            if v > best:
                best = v
    return best


def oracle_po_spanning(sys, window_elements, assignments, F, eps, phi, s_at_eps: float) -> float:
    m = len(assignments)
    _require_small(m, "pseudo-orbit spanning enumeration")
    lw = [_window_log_weight(sys, window_elements, a, F, phi, s_at_eps) for a in assignments]
    best = float("inf")
    for mask in range(1, 1 << m):
        members = [i for i in range(m) if (mask >> i) & 1]
        if all(
            any(
                _window_conflict(sys, assignments[x], assignments[y], window_elements, F, eps)
                for y in members
            )
            for x in range(m)
        ):
            v = log_sum_exp(lw[i] for i in members)
            if v < best:
                best = v
    return best
