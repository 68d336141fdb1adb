"""Finite metric systems carrying a Z^d action.

A FiniteGSystem is the desk-scale stand-in for a compact metric space with
a group action: an indexed point set, an exact metric matrix, and one
bijection per generator.  Builders supply invariant subsystems (periodic
sequences under the shift, finite rotation orbits) so that every group
element genuinely acts on the model.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError, InvalidSystemError, SizeLimitError
from .group import Element, FinitePatch, GroupModel

METRIC_TOL = 1e-12
DEFAULT_SIZE_CAP = 4096
_FULL_CHECK_LIMIT = 512
_SAMPLE_TRIPLES = 4096


def _check_triangle(metric: np.ndarray, ultra: bool, rng: np.random.Generator | None = None) -> bool:
    """Exact check for small systems, seeded sampling above _FULL_CHECK_LIMIT."""
    n = metric.shape[0]
    if n <= _FULL_CHECK_LIMIT:
        for y in range(n):
            if ultra:
                via = np.maximum(metric[:, y][:, None], metric[y, :][None, :])
            else:
                via = metric[:, y][:, None] + metric[y, :][None, :]
            if (metric > via + METRIC_TOL).any():
                return False
        return True
    rng = rng or np.random.default_rng(0)
    idx = rng.integers(0, n, size=(_SAMPLE_TRIPLES, 3))
    for x, y, z in idx:
        via = max(metric[x, y], metric[y, z]) if ultra else metric[x, y] + metric[y, z]
        if metric[x, z] > via + METRIC_TOL:
            return False
    return True


class FiniteGSystem:
    """N points, an exact metric matrix, one permutation per generator."""

    def __init__(
        self,
        group: GroupModel,
        metric,
        generator_maps: dict,
        labels=None,
        name: str = "system",
        ultrametric: bool | None = None,
        validate: bool = True,
    ):
        self.group = group
        self.metric = np.asarray(metric, dtype=float)
        self.generator_maps = {
            group.element(g): np.asarray(p, dtype=np.int64) for g, p in generator_maps.items()
        }
        self.labels = tuple(labels) if labels is not None else None
        self.name = name
        self._perm_cache: dict[Element, np.ndarray] = {}
        self._id: str | None = None
        if validate:
            self._validate()
        if ultrametric is None:
            ultrametric = (
                self.n_points <= _FULL_CHECK_LIMIT and _check_triangle(self.metric, ultra=True)
            )
        elif ultrametric and validate:
            if not _check_triangle(self.metric, ultra=True):
                raise InvalidSystemError("declared ultrametric but strong triangle inequality fails")
        self.ultrametric = bool(ultrametric)

    # -- basic shape ---------------------------------------------------------

    @property
    def n_points(self) -> int:
        return self.metric.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.metric.max())

    @property
    def min_positive_distance(self) -> float:
        n = self.n_points
        if n < 2:
            return 0.0
        off = self.metric[~np.eye(n, dtype=bool)]
        return float(off.min())

    def _validate(self):
        m = self.metric
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidSystemError("metric must be a square matrix")
        n = m.shape[0]
        if n == 0:
            raise InvalidSystemError("system must have at least one point")
        if (np.abs(np.diag(m)) > 0).any():
            raise InvalidSystemError("metric diagonal must be zero")
        if (np.abs(m - m.T) > 0).any():
            raise InvalidSystemError("metric must be symmetric")
        if n > 1 and (m[~np.eye(n, dtype=bool)] <= 0).any():
            raise InvalidSystemError("off-diagonal metric entries must be positive")
        if not _check_triangle(m, ultra=False):
            raise InvalidSystemError("triangle inequality violated beyond tolerance")
        base = {tuple(1 if j == i else 0 for j in range(self.group.dimension))
                for i in range(self.group.dimension)}
        if not base <= set(self.generator_maps):
            raise InvalidSystemError("a permutation is required for every basis generator")
        ident = np.arange(n)
        for g, p in self.generator_maps.items():
            if p.shape != (n,) or not np.array_equal(np.sort(p), ident):
                raise InvalidSystemError(f"generator map for {g} is not a bijection")
        gens = sorted(base)
        for a, b in itertools.combinations(gens, 2):
            pa, pb = self.generator_maps[a], self.generator_maps[b]
            if not np.array_equal(pa[pb], pb[pa]):
                raise InvalidSystemError(f"generator maps for {a} and {b} do not commute")
        if self.labels is not None and len(self.labels) != n:
            raise InvalidSystemError("labels length must match point count")

    # -- group action --------------------------------------------------------

    def perm_for(self, g) -> np.ndarray:
        """Permutation realizing the action of an arbitrary group element."""
        g = self.group.element(g)
        cached = self._perm_cache.get(g)
        if cached is not None:
            return cached
        perm = np.arange(self.n_points)
        for axis, power in enumerate(g):
            if power == 0:
                continue
            basis = tuple(1 if j == axis else 0 for j in range(self.group.dimension))
            p = self.generator_maps[basis]
            if power < 0:
                inv = np.empty_like(p)
                inv[p] = np.arange(self.n_points)
                p, power = inv, -power
            for _ in range(power):
                perm = p[perm]
        self._perm_cache[g] = perm
        return perm

    def apply(self, g, x: int) -> int:
        return int(self.perm_for(g)[x])

    # -- serialization -------------------------------------------------------

    def to_jsonable(self, measures: dict | None = None) -> dict:
        doc = {
            "name": self.name,
            "dimension": self.group.dimension,
            "n_points": self.n_points,
            "metric": [[float(v) for v in row] for row in self.metric],
            "generator_maps": {
                ",".join(map(str, g)): [int(i) for i in p] for g, p in sorted(self.generator_maps.items())
            },
            "labels": list(self.labels) if self.labels is not None else None,
            "ultrametric": self.ultrametric,
        }
        if measures:
            doc["measures"] = {
                k: [[w.numerator, w.denominator] for w in v] for k, v in sorted(measures.items())
            }
        return doc

    def to_json(self, measures: dict | None = None) -> str:
        return json.dumps(self.to_jsonable(measures), sort_keys=True)

    @classmethod
    def from_jsonable(cls, doc: dict) -> "FiniteGSystem":
        group = GroupModel(int(doc["dimension"]))
        maps = {
            tuple(int(c) for c in k.split(",")): np.asarray(v, dtype=np.int64)
            for k, v in doc["generator_maps"].items()
        }
        return cls(
            group,
            np.asarray(doc["metric"], dtype=float),
            maps,
            labels=doc.get("labels"),
            name=doc.get("name", "system"),
            ultrametric=doc.get("ultrametric"),
        )

    @classmethod
    def from_json(cls, text: str) -> "FiniteGSystem":
        return cls.from_jsonable(json.loads(text))

    @property
    def system_id(self) -> str:
        if self._id is None:
            self._id = hashlib.sha256(self.to_json().encode()).hexdigest()[:12]
        return self._id


def save_system(sys: FiniteGSystem, path, measures: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(sys.to_json(measures))


def load_system(path) -> FiniteGSystem:
    with open(path) as fh:
        return FiniteGSystem.from_json(fh.read())


# -- builders ----------------------------------------------------------------


def build_periodic_subshift(
    k: int, p: int, metric_base: float = 0.5, size_cap: int = DEFAULT_SIZE_CAP
) -> FiniteGSystem:
    """All p-periodic sequences over a k-letter alphabet under the left shift.

    The distance between distinct sequences is metric_base**m where m is the
    first coordinate index >= 0 at which they differ (an ultrametric; exact
    dyadics for the default base 1/2).
    """
    if k < 2 or p < 1:
        raise InvalidArgumentError("need alphabet size k >= 2 and period p >= 1")
    if not (0.0 < metric_base < 1.0):
        raise InvalidArgumentError("metric_base must lie in (0,1)")
    n = k**p
    if n > size_cap:
        raise SizeLimitError(f"k**p = {n} exceeds size cap {size_cap}")
    words = np.array(list(itertools.product(range(k), repeat=p)), dtype=np.int64)
    # first differing coordinate in [0, p); p means identical
    first_diff = np.full((n, n), p, dtype=np.int64)
    for i in range(p - 1, -1, -1):
        differs = words[:, i][:, None] != words[:, i][None, :]
        first_diff[differs] = i
    metric = np.where(first_diff == p, 0.0, float(metric_base) ** first_diff)
    # left shift on words: new[j] = old[(j+1) mod p]
    shifted = np.roll(words, -1, axis=1)
    order = {tuple(w): idx for idx, w in enumerate(words.tolist())}
    shift_perm = np.array([order[tuple(w)] for w in shifted.tolist()], dtype=np.int64)
    labels = ["".join(map(str, w)) for w in words.tolist()]
    return FiniteGSystem(
        GroupModel(1),
        metric,
        {(1,): shift_perm},
        labels=labels,
        name=f"subshift_k{k}_p{p}",
        ultrametric=True,
    )


def build_rotation(q: int) -> FiniteGSystem:
    """q points on the circle with arc-length metric, rotated by one step."""
    if q < 1:
        raise InvalidArgumentError("rotation needs q >= 1")
    idx = np.arange(q)
    gaps = np.abs(idx[:, None] - idx[None, :])
    metric = np.minimum(gaps, q - gaps) / float(q)
    perm = (idx + 1) % q
    return FiniteGSystem(
        GroupModel(1),
        metric,
        {(1,): perm},
        labels=[str(j) for j in range(q)],
        name=f"rotation_q{q}",
    )


def random_system(seed: int, n_points: int, ultrametric: bool = False) -> FiniteGSystem:
    """Seeded random Z-system: random metric, random permutation action."""
    if n_points < 1:
        raise InvalidArgumentError("need at least one point")
    rng = np.random.default_rng(seed)
    if ultrametric:
        depth = max(2, int(math.ceil(math.log2(max(n_points, 2)))) + 2)
        codes = rng.choice(2 ** depth, size=n_points, replace=False)
        bits = ((codes[:, None] >> np.arange(depth)[None, :]) & 1).astype(np.int64)
        first_diff = np.full((n_points, n_points), depth, dtype=np.int64)
        for i in range(depth - 1, -1, -1):
            differs = bits[:, i][:, None] != bits[:, i][None, :]
            first_diff[differs] = i
        metric = np.where(first_diff == depth, 0.0, 0.5 ** (first_diff + 1))
    else:
        pts = rng.uniform(size=(n_points, 3))
        diff = pts[:, None, :] - pts[None, :, :]
        metric = np.sqrt((diff**2).sum(axis=2))
        if n_points > 1:
            metric = metric / (2.0 * metric.max())
    perm = rng.permutation(n_points)
    return FiniteGSystem(
        GroupModel(1),
        metric,
        {(1,): perm},
        name=f"random_s{seed}_n{n_points}" + ("_ultra" if ultrametric else ""),
        ultrametric=ultrametric if ultrametric else None,
    )


# -- potentials --------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """A potential given by its point values, with modulus diagnostics."""

    values: tuple[float, ...]
    label: str = "phi"

    @classmethod
    def constant(cls, n_points: int, c: float) -> "Potential":
        return cls(tuple(float(c) for _ in range(n_points)), label=f"const{c:g}")

    @classmethod
    def from_values(cls, values, label: str = "phi") -> "Potential":
        return cls(tuple(float(v) for v in values), label=label)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.array))) if self.values else 0.0

    def modulus_at(self, sys: FiniteGSystem, eps: float) -> float:
        """max |phi(x)-phi(y)| over pairs with d(x,y) < eps."""
        if eps <= 0:
            raise InvalidArgumentError("eps must be positive")
        close = sys.metric < eps
        spread = np.abs(self.array[:, None] - self.array[None, :])
        return float(spread[close].max(initial=0.0))

    def modulus_table(self, sys: FiniteGSystem, eps_grid) -> tuple[float, ...]:
        return tuple(self.modulus_at(sys, e) for e in eps_grid)


def symbol_origin_potential(sys: FiniteGSystem) -> Potential:
    """Symbol-at-origin potential for subshift systems (reads the labels)."""
    if sys.labels is None:
        raise InvalidArgumentError("system carries no symbolic labels")
    return Potential.from_values([float(int(lbl[0])) for lbl in sys.labels], label="symbol0")


def rotation_angle_potential(sys: FiniteGSystem) -> Potential:
    """Nonnegative angle-fraction potential j/q on a rotation orbit."""
    q = sys.n_points
    return Potential.from_values([j / q for j in range(q)], label="angle")


def potential_from_config(sys: FiniteGSystem, spec: dict) -> Potential:
    kind = spec.get("kind")
    if kind in ("constant", "const"):
        return Potential.constant(sys.n_points, float(spec.get("c", 0.0)))
    if kind in ("symbol0", "symbol_origin"):
        return symbol_origin_potential(sys)
    if kind == "angle":
        return rotation_angle_potential(sys)
    if kind == "values":
        return Potential.from_values(spec["values"])
    raise InvalidArgumentError(f"unknown potential kind {kind!r}")


# -- orbit sums and dynamical metrics ----------------------------------------


def birkhoff_vector(sys: FiniteGSystem, phi: Potential, F: FinitePatch) -> np.ndarray:
    """Vector of orbit sums sum_{g in F} phi(g x) over all points x."""
    phi_arr = phi.array
    total = np.zeros(sys.n_points)
    for g in F:
        total += phi_arr[sys.perm_for(g)]
    return total


def birkhoff_sum(sys: FiniteGSystem, phi: Potential, F: FinitePatch, x: int) -> float:
    return float(birkhoff_vector(sys, phi, F)[x])


@dataclass(frozen=True)
class DynMetric:
    """The orbit-window metric d_F(x,y) = max_{g in F} d(gx, gy)."""

    system: FiniteGSystem
    patch: FinitePatch
    matrix: np.ndarray

    @property
    def ultrametric(self) -> bool:
        return self.system.ultrametric


def dyn_metric(sys: FiniteGSystem, F: FinitePatch) -> DynMetric:
    out = np.zeros_like(sys.metric)
    for g in F:
        p = sys.perm_for(g)
        np.maximum(out, sys.metric[np.ix_(p, p)], out=out)
    return DynMetric(sys, F, out)


# -- action diagnostics ------------------------------------------------------


@dataclass(frozen=True)
class ActionReport:
    bijective: bool
    commuting: bool
    lipschitz: dict
    max_forward: float
    max_inverse: float

    @property
    def bi_lipschitz(self) -> bool:
        return self.bijective and math.isfinite(self.max_forward) and math.isfinite(self.max_inverse)


def verify_action(sys: FiniteGSystem) -> ActionReport:
    """Bijectivity, commutation, and per-generator bi-Lipschitz constants."""
    n = sys.n_points
    ident = np.arange(n)
    for g, p in sys.generator_maps.items():
        if not np.array_equal(np.sort(p), ident):
            raise InvalidSystemError(f"generator map for {g} is not a bijection")
    gens = sorted(sys.generator_maps)
    commuting = all(
        np.array_equal(sys.generator_maps[a][sys.generator_maps[b]],
                       sys.generator_maps[b][sys.generator_maps[a]])
        for a, b in itertools.combinations(gens, 2)
    )
    off = ~np.eye(n, dtype=bool)
    lipschitz = {}
    for g, p in sys.generator_maps.items():
        if n == 1:
            lipschitz[g] = (1.0, 1.0)
            continue
        mapped = sys.metric[np.ix_(p, p)]
        fwd = float((mapped[off] / sys.metric[off]).max())
        inv = float((sys.metric[off] / mapped[off]).max())
        lipschitz[g] = (fwd, inv)
    max_fwd = max((v[0] for v in lipschitz.values()), default=1.0)
    max_inv = max((v[1] for v in lipschitz.values()), default=1.0)
    return ActionReport(True, commuting, lipschitz, max_fwd, max_inv)


def subshift_count_margin(eps: float, metric_base: float = 0.5) -> int:
    """Extra determined coordinates per window at threshold eps.

    Distances at or below eps pin down the first r coordinates where r is
    the least integer with metric_base**r <= eps; the count of threshold
    classes over an n-window is then k**(n + r - 1), so the margin is r-1.
    """
    if not (0.0 < eps):
        raise InvalidArgumentError("eps must be positive")
    r = 0
    while metric_base**r > eps:
        r += 1
    return max(r - 1, 0)
