"""Group model: boxes, invariance defects, temperedness, enumeration order."""

import math
from fractions import Fraction

import pytest

from scalepress.errors import InvalidArgumentError
from scalepress.group import (
    FinitePatch,
    FolnerSequence,
    GroupModel,
    canonical_enumeration,
    empirical_temperedness_constant,
    folner_box,
    folner_defect,
    temperedness_ratio,
)


def test_box_construction():
    g1 = GroupModel(1)
    assert folner_box(g1, 1).elements == ((0,),)
    assert folner_box(g1, 3).elements == ((0,), (1,), (2,))
    g2 = GroupModel(2)
    box = folner_box(g2, 2)
    assert set(box.elements) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert box.cardinality == 4


def test_box_rejects_zero():
    with pytest.raises(InvalidArgumentError):
        folner_box(GroupModel(1), 0)


def test_defect_closed_form_1d():
    g = GroupModel(1)
    for n in range(1, 40):
        assert folner_defect(folner_box(g, n), 1) == Fraction(2, n)
        assert folner_defect(folner_box(g, n), -1) == Fraction(2, n)


def test_defect_identity_and_example():
    g = GroupModel(1)
    assert folner_defect(folner_box(g, 1), 0) == 0
    # shift of {0,1,2} by +1 symmetric-differs in {0, 3}
    assert folner_defect(folner_box(g, 3), 1) == Fraction(2, 3)


def test_defect_bound_multidim():
    for d in (1, 2, 3):
        g = GroupModel(d)
        for n in (1, 2, 3, 5):
            for gen in g.generators:
                assert folner_defect(folner_box(g, n), gen) <= Fraction(2 * d, n)


def test_folner_sequence_invariants():
    g = GroupModel(1)
    seq = FolnerSequence.boxes(g, 10)
    assert seq.growth == tuple(range(1, 11))
    defects = [folner_defect(p, 1) for p in seq.patches]
    assert all(b < a for a, b in zip(defects, defects[1:]))
    with pytest.raises(InvalidArgumentError):
        FolnerSequence(g, (folner_box(g, 3), folner_box(g, 2)))


def test_temperedness_examples():
    g = GroupModel(1)
    seq = FolnerSequence.boxes(g, 3)
    assert temperedness_ratio(seq, 1) == 1
    assert temperedness_ratio(seq, 2) == Fraction(4, 3)
    with pytest.raises(InvalidArgumentError):
        temperedness_ratio(seq, 0)
    with pytest.raises(InvalidArgumentError):
        temperedness_ratio(seq, 3)


def test_temperedness_bounded_1d():
    g = GroupModel(1)
    seq = FolnerSequence.boxes(g, 64)
    for n in range(1, len(seq)):
        assert temperedness_ratio(seq, n) <= Fraction(2**1 + 1)
    assert empirical_temperedness_constant(seq) < 2


def test_temperedness_bounded_2d_prefix():
    g = GroupModel(2)
    seq = FolnerSequence.boxes(g, 12)
    for n in range(1, len(seq)):
        assert temperedness_ratio(seq, n) <= Fraction(2**2 + 1)


def test_growth_exceeds_log():
    for d in (1, 2):
        seq = FolnerSequence.boxes(GroupModel(d), 32)
        vals = [p.cardinality / math.log(n + 1) for n, p in enumerate(seq.patches, start=1)]
        assert all(b > a for a, b in zip(vals[1:], vals[2:]))


def test_shifted_boxes_share_defects():
    g = GroupModel(1)
    for n in (1, 3, 7):
        plain = folner_defect(folner_box(g, n), 1)
        shifted = folner_defect(folner_box(g, n, shift=5), 1)
        assert plain == shifted


def test_canonical_enumeration_order():
    g = GroupModel(1)
    assert canonical_enumeration(g, 5) == [(0,), (-1,), (1,), (-2,), (2,)]
    g2 = GroupModel(2)
    enum = canonical_enumeration(g2, 5)
    assert enum[0] == (0, 0)
    lengths = [sum(abs(c) for c in e) for e in enum]
    assert lengths == sorted(lengths)


def test_patch_set_arithmetic():
    p = FinitePatch.from_iterable([0, 1, 2])
    assert p.inverse().elements == ((-2,), (-1,), (0,))
    assert p.translate(3).elements == ((3,), (4,), (5,))
    q = FinitePatch.from_iterable([0, 1])
    assert p.product(q).elements == ((0,), (1,), (2,), (3,))
    with pytest.raises(InvalidArgumentError):
        FinitePatch(())
