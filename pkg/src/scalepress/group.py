"""The Z^d group model: finite patches, box sequences, invariance defects.

Elements are integer tuples and all set arithmetic is exact, so the
asymptotic-invariance and temperedness diagnostics come out as rationals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgumentError

Element = tuple[int, ...]

#: slack used when checking that recorded defects are non-increasing
DEFECT_MONOTONE_SLACK = Fraction(1, 10**12)


@dataclass(frozen=True)
class GroupModel:
    """Z^d with the standard basis vectors as generating set.

    ``with_inverses`` additionally lists the inverse generators; the default
    matches the convention that pseudo-orbit defects quantify over the
    forward generators only.
    """

    dimension: int
    with_inverses: bool = False

    def __post_init__(self):
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise InvalidArgumentError("dimension must be a positive integer")

    @property
    def identity(self) -> Element:
        return (0,) * self.dimension

    @property
    def generators(self) -> tuple[Element, ...]:
        basis = [
            tuple(1 if j == i else 0 for j in range(self.dimension))
            for i in range(self.dimension)
        ]
        if self.with_inverses:
            basis += [self.inverse(g) for g in list(basis)]
        return tuple(basis)

    def element(self, g) -> Element:
        """Normalize ``g`` (an int in 1D, or an iterable of ints) to a tuple."""
        if isinstance(g, int):
            g = (g,)
        g = tuple(int(c) for c in g)
        if len(g) != self.dimension:
            raise InvalidArgumentError(
                f"element {g!r} has wrong dimension (expected {self.dimension})"
            )
        return g

    def compose(self, a, b) -> Element:
        a, b = self.element(a), self.element(b)
        return tuple(x + y for x, y in zip(a, b))

    def inverse(self, a) -> Element:
        return tuple(-x for x in self.element(a))

    def word_length(self, g) -> int:
        return sum(abs(c) for c in self.element(g))


def enumeration_key(g: Element):
    """Sort key fixing the group enumeration: word length, then lexicographic."""
    return (sum(abs(c) for c in g), g)


def canonical_enumeration(group: GroupModel, count: int) -> list[Element]:
    """First ``count`` elements of Z^d in word-length order, identity first."""
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    out: list[Element] = []
    radius = 0
    while len(out) < count:
        shell = [
            g
            for g in itertools.product(range(-radius, radius + 1), repeat=group.dimension)
            if sum(abs(c) for c in g) == radius
        ]
        out.extend(sorted(shell))
        radius += 1
    return out[:count]


@dataclass(frozen=True)
class FinitePatch:
    """A nonempty finite subset of Z^d, stored as a sorted tuple."""

    elements: tuple[Element, ...]

    def __post_init__(self):
        if not self.elements:
            raise InvalidArgumentError("patch must be nonempty")
        if len(set(self.elements)) != len(self.elements):
            raise InvalidArgumentError("patch contains duplicate elements")
        if tuple(sorted(self.elements)) != self.elements:
            object.__setattr__(self, "elements", tuple(sorted(self.elements)))

    @classmethod
    def from_iterable(cls, elements, group: GroupModel | None = None) -> "FinitePatch":
        if group is not None:
            elements = [group.element(g) for g in elements]
        else:
            elements = [(g,) if isinstance(g, int) else tuple(int(c) for c in g) for g in elements]
        return cls(tuple(sorted(set(elements))))

    @property
    def cardinality(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return tuple(g) in self.elements if not isinstance(g, int) else (g,) in self.elements

    def translate(self, g) -> "FinitePatch":
        g = (g,) if isinstance(g, int) else tuple(int(c) for c in g)
        return FinitePatch(tuple(sorted(tuple(x + y for x, y in zip(g, f)) for f in self.elements)))

    def inverse(self) -> "FinitePatch":
        return FinitePatch(tuple(sorted(tuple(-c for c in f) for f in self.elements)))

    def product(self, other: "FinitePatch") -> "FinitePatch":
        prods = {
            tuple(x + y for x, y in zip(a, b))
            for a in self.elements
            for b in other.elements
        }
        return FinitePatch(tuple(sorted(prods)))

    def union(self, other: "FinitePatch") -> "FinitePatch":
        return FinitePatch(tuple(sorted(set(self.elements) | set(other.elements))))


def folner_box(group: GroupModel, n: int, shift=None) -> FinitePatch:
    """The box {0,...,n-1}^d, optionally translated by ``shift``."""
    if not isinstance(n, int) or n < 1:
        raise InvalidArgumentError("box side must be a positive integer")
    cells = itertools.product(range(n), repeat=group.dimension)
    patch = FinitePatch(tuple(sorted(cells)))
    if shift is not None:
        patch = patch.translate(group.element(shift))
    return patch


def folner_defect(patch: FinitePatch, g, group: GroupModel | None = None) -> Fraction:
    """|F symdiff gF| / |F|, exactly."""
    g = (g,) if isinstance(g, int) else tuple(int(c) for c in (group.element(g) if group else g))
    base = set(patch.elements)
    shifted = {tuple(x + y for x, y in zip(g, f)) for f in base}
    return Fraction(len(base ^ shifted), len(base))


@dataclass(frozen=True)
class FolnerSequence:
    """A recorded prefix of an asymptotically invariant box sequence."""

    group: GroupModel
    patches: tuple[FinitePatch, ...]

    def __post_init__(self):
        if not self.patches:
            raise InvalidArgumentError("sequence must contain at least one patch")
        cards = [p.cardinality for p in self.patches]
        if any(b <= a for a, b in zip(cards, cards[1:])):
            raise InvalidArgumentError("patch cardinalities must be strictly increasing")
        for g in self.group.generators:
            defects = [folner_defect(p, g) for p in self.patches]
            for a, b in zip(defects, defects[1:]):
                if b > a + DEFECT_MONOTONE_SLACK:
                    raise InvalidArgumentError(
                        f"invariance defect increases along the sequence for generator {g}"
                    )

    @classmethod
    def boxes(cls, group: GroupModel, max_n: int, shift=None) -> "FolnerSequence":
        if max_n < 1:
            raise InvalidArgumentError("max_n must be >= 1")
        return cls(group, tuple(folner_box(group, n, shift) for n in range(1, max_n + 1)))

    @property
    def growth(self) -> tuple[int, ...]:
        return tuple(p.cardinality for p in self.patches)

    def __len__(self) -> int:
        return len(self.patches)

    def __getitem__(self, i: int) -> FinitePatch:
        return self.patches[i]


def temperedness_ratio(seq: FolnerSequence, n: int) -> Fraction:
    """|union_{k<n} F_k^{-1} F_n| / |F_n| at index ``n`` of the recorded prefix."""
    if n < 1:
        raise InvalidArgumentError("temperedness ratio needs n >= 1 (no predecessors at n=0)")
    if n >= len(seq):
        raise InvalidArgumentError(f"index {n} beyond recorded prefix of length {len(seq)}")
    target = seq[n]
    union: set[Element] = set()
    for k in range(n):
        union.update(seq[k].inverse().product(target).elements)
    return Fraction(len(union), target.cardinality)


def empirical_temperedness_constant(seq: FolnerSequence) -> Fraction:
    """Running maximum of the temperedness ratios over the recorded prefix."""
    if len(seq) < 2:
        return Fraction(1)
    return max(temperedness_ratio(seq, n) for n in range(1, len(seq)))
