"""Shared generators for the randomized suites (seeded, deterministic)."""

from __future__ import annotations

import numpy as np

from scalepress.group import GroupModel, folner_box
from scalepress.scale import ScaleFunction
from scalepress.system import FiniteGSystem, Potential, dyn_metric, random_system

GROUP_1D = GroupModel(1)


def seeded_system(seed: int, n_min: int = 6, n_max: int = 10) -> FiniteGSystem:
    n = n_min + seed % (n_max - n_min + 1)
    return random_system(seed, n, ultrametric=(seed % 5 == 4))


def seeded_potential(seed: int, n_points: int) -> Potential:
    rng = np.random.default_rng(10_000 + seed)
    return Potential.from_values(rng.uniform(-1.0, 1.0, size=n_points), label=f"rand{seed}")


def seeded_scale(seed: int) -> ScaleFunction:
    return ScaleFunction.constant_one() if seed % 2 == 0 else ScaleFunction.neg_log()


def dyn_values(sys: FiniteGSystem, n: int) -> np.ndarray:
    return dyn_metric(sys, folner_box(GROUP_1D, n)).matrix


def eps_menu(sys: FiniteGSystem, n: int) -> list[float]:
    """Four thresholds per cell: an exact tie at the largest realized orbit
    distance, two generic values, and one below the minimum gap."""
    m = dyn_values(sys, n)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    top = float(off.max())
    bottom = float(off.min())
    values = sorted(set(float(v) for v in off))
    if len(values) > 1:
        mid = 0.5 * (values[len(values) // 2 - 1] + values[len(values) // 2])
    else:
        mid = 0.75 * top
    return [top, 0.93 * top, mid, 0.9 * bottom]
