import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lethargy.errors import (
    DependentBasis,
    DimExceedsAmbient,
    InvalidChain,
    NoAdmissibleStart,
    NonIncreasingDims,
    NotNonIncreasing,
)
from lethargy.space import (
    Chain,
    DeviationSequence,
    NormKind,
    Subspace,
    as_point,
    check_tail_condition,
    contains,
    coordinate_chain,
    member,
    require_valid,
    validate_chain,
)


def test_norm_kind_parse_and_dual():
    assert NormKind.parse("l1") is NormKind.L1
    assert NormKind.parse("LINF") is NormKind.LINF
    assert NormKind.parse(NormKind.L2) is NormKind.L2
    assert NormKind.L1.dual is NormKind.LINF
    assert NormKind.LINF.dual is NormKind.L1
    assert NormKind.L2.dual is NormKind.L2
    with pytest.raises(ValueError):
        NormKind.parse("L3")


def test_points_are_read_only_and_finite():
    p = as_point([1, 2, 3])
    with pytest.raises(ValueError):
        p[0] = 5
    with pytest.raises(ValueError):
        as_point([1.0, math.nan])
    with pytest.raises(ValueError):
        as_point([1.0, 2.0], dim=3)


def test_coordinate_chain_ranks():
    ch = coordinate_chain([1, 2, 3], 4)
    assert ch.ranks == [1, 2, 3]
    assert validate_chain(ch)


def test_coordinate_chain_with_zero_subspace():
    ch = coordinate_chain([0, 2], 3)
    assert ch.Y(1).is_zero
    assert ch.Y(2).rank == 2
    assert validate_chain(ch)


def test_coordinate_chain_rejects_repeated_dims():
    with pytest.raises(NonIncreasingDims):
        coordinate_chain([2, 2], 3)


def test_coordinate_chain_rejects_full_top():
    with pytest.raises(DimExceedsAmbient):
        coordinate_chain([1, 3], 3)


def test_dependent_basis_rejected():
    with pytest.raises(DependentBasis):
        Subspace(np.array([[1.0, 0, 0], [2.0, 0, 0]]), 3)


def test_equal_subspaces_fail_rank_check():
    Y = Subspace.coordinate(1, 3)
    diag = validate_chain(Chain((Y, Y), 3))
    assert not diag
    assert diag.pair == (1, 2)
    assert diag.reason.startswith("rank")


def test_non_nested_chain_reports_nesting():
    Y1 = Subspace.span([[0, 0, 1]], 3)
    Y2 = Subspace.coordinate(2, 3)
    diag = validate_chain(Chain((Y1, Y2), 3))
    assert not diag
    assert "nesting" in diag.reason
    with pytest.raises(InvalidChain):
        require_valid(Chain((Y1, Y2), 3))


def test_canonical_form_ignores_presentation():
    a = Subspace.span([[1, 1, 0], [1, -1, 0]], 3)
    b = Subspace.coordinate(2, 3)
    assert np.allclose(a.canonical, b.canonical)
    assert contains(a, b) and contains(b, a)


def test_membership():
    Y = Subspace.coordinate(2, 3)
    assert member([1, 0, 0], Y)
    assert not member([0, 0, 1], Y)
    assert member([0, 0], Subspace.zero(2))


def test_generators_outside_complete_the_inner_space():
    outer = Subspace.coordinate(4, 6)
    inner = Subspace.span([[1, 1, 0, 0, 0, 0]], 6)
    gens = outer.generators_outside(inner)
    assert len(gens) == 3
    assert inner.extended(gens).rank == 4


def test_successor_past_top_is_whole_space():
    ch = coordinate_chain([1, 2], 4)
    assert ch.successor(1).rank == 2
    assert ch.successor(2).rank == 4


def test_geometric_half_meets_tail_with_equality():
    seq = DeviationSequence.geometric(1.0, 0.5, 12)
    for n in range(1, 13):
        assert seq.tau(n) == pytest.approx(seq.d(n), rel=1e-15)
    assert check_tail_condition(seq) == 1


def test_tail_condition_with_late_start():
    seq = DeviationSequence.explicit([1.0, 0.6, 0.5])
    assert check_tail_condition(seq) == 2


def test_tail_condition_per_index():
    seq = DeviationSequence.explicit([5.0, 1.0, 0.5, 0.25], tail=0.25)
    assert [seq.tau(n) for n in range(1, 5)] == [2.0, 1.0, 0.5, 0.25]
    assert check_tail_condition(seq) == 1


def test_inverse_squares_never_meet_the_tail_condition():
    with pytest.raises(NoAdmissibleStart):
        check_tail_condition(DeviationSequence.power(2, 8))


def test_sequence_must_be_non_increasing():
    with pytest.raises(NotNonIncreasing):
        DeviationSequence.explicit([1.0, 2.0])


def test_sequence_reaching_zero_needs_zero_tail():
    with pytest.raises(ValueError):
        DeviationSequence.explicit([1.0, 0.0], tail=0.1)


def test_power_tails_are_analytic():
    seq = DeviationSequence.power(2, 3)
    assert seq.tau(1) == pytest.approx(math.pi**2 / 6 - 1, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=12), st.floats(0.0, 5.0))
def test_tail_recurrence(values, tail):
    values = sorted(values, reverse=True)
    if values[-1] == 0:
        tail = 0.0
    seq = DeviationSequence.explicit(values, tail)
    for j in range(1, len(seq)):
        assert seq.tau(j) == pytest.approx(seq.d(j + 1) + seq.tau(j + 1), rel=1e-12, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 9).flatmap(lambda D: st.tuples(
    st.just(D), st.sets(st.integers(0, D - 1), min_size=1, max_size=D))))
def test_admissible_dims_always_validate(case):
    D, dims = case
    assert validate_chain(coordinate_chain(sorted(dims), D))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_bases_nest(seed):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(3, 8))
    rows = rng.standard_normal((D - 1, D))
    ranks = sorted(rng.choice(np.arange(1, D), size=int(rng.integers(1, D)), replace=False))
    ch = Chain.from_bases([rows[:r] for r in ranks], D)
    assert validate_chain(ch)
    for a, b in zip(ch, list(ch)[1:]):
        assert a.rank < b.rank and contains(b, a)
