import numpy as np
import pytest

from lethargy.distance import norm_of, rho
from lethargy.engine import backward_sweep, construct_exact, convergence_probe, level_elements, preprocess
from lethargy.errors import BracketFailure, HeadTies, NoAdmissibleStart
from lethargy.space import Chain, DeviationSequence, NormKind, coordinate_chain

ALL = [NormKind.L1, NormKind.L2, NormKind.LINF]
CHAIN10 = coordinate_chain(range(1, 11), 12)


def half(N):
    return DeviationSequence.geometric(1.0, 0.5, N)


def assert_exact(rep, rel=1e-6):
    for r in rep.rows:
        assert abs(r.cert_upper - r.d_n) <= rel * r.d_n + 1e-12
        assert abs(r.cert_lower - r.d_n) <= rel * r.d_n + 1e-12


def test_geometric_half_needs_no_reduction():
    plan = preprocess(CHAIN10, half(10))
    assert plan.trivial and plan.n0 == 1 and plan.head == ()


def test_tail_condition_holding_from_start():
    plan = preprocess(CHAIN10, DeviationSequence.explicit([5, 1, 0.5, 0.25], tail=0.25))
    assert plan.route == "engine" and plan.n0 == 1 and plan.head == ()


def test_tied_head_rejected():
    with pytest.raises(HeadTies):
        preprocess(CHAIN10, DeviationSequence.explicit([1, 1, 0.5, 0.25], tail=0.25))


def test_no_admissible_start():
    with pytest.raises(NoAdmissibleStart):
        preprocess(CHAIN10, DeviationSequence.power(2, 6))


def test_zero_tail_takes_finite_route():
    plan = preprocess(CHAIN10, DeviationSequence.explicit([1, 0.5, 0, 0]))
    assert plan.route == "finite" and plan.zero_from == 3 and plan.top == 2


def test_all_zero():
    x, rep = construct_exact(CHAIN10, DeviationSequence.explicit([0, 0, 0]), NormKind.L2)
    assert not np.any(x)
    assert rep.passed


def test_leading_zero_subspace_shifts_start():
    ch = coordinate_chain([0, 1, 2, 3], 5)
    seq = half(4)
    plan = preprocess(ch, seq)
    assert plan.shifted and plan.start == 2 and plan.head == (1,)
    for kind in ALL:
        _, rep = construct_exact(ch, seq, kind)
        assert_exact(rep)


def test_late_start_fixes_head():
    seq = DeviationSequence.explicit([3.0, 1.0, 0.5, 0.25], tail=0.25)
    ch = coordinate_chain([1, 2, 3, 4], 6)
    assert preprocess(ch, DeviationSequence.explicit([3.0, 1.0, 0.5, 0.25], tail=0.25)).n0 == 1
    seq = DeviationSequence.explicit([3.0, 2.9, 0.5, 0.25], tail=0.25)
    plan = preprocess(ch, seq)
    assert plan.start == 2 and plan.head == (1,)
    for kind in ALL:
        _, rep = construct_exact(ch, seq, kind)
        assert_exact(rep)


def test_level_norms():
    levels = level_elements(CHAIN10, half(3), NormKind.L2)
    assert [lv.u for lv in levels] == pytest.approx([1.125, 1.125, 1.125])


def test_zero_tail_levels_have_unit_norm():
    ch = coordinate_chain([1, 2, 3], 5)
    seq = DeviationSequence.explicit([2.0, 2.0, 1.0, 0.0])
    levels = level_elements(ch, seq, NormKind.L1, top=3, tau=0.0)
    assert [lv.u for lv in levels] == [1.0, 1.0, 1.0]


def test_level_rejects_zero_target():
    with pytest.raises(ValueError):
        level_elements(CHAIN10, DeviationSequence.explicit([1.0, 0.0]), NormKind.L2, tau=0.1)


@pytest.mark.parametrize("kind", ALL)
def test_level_invariants(kind):
    for lv in level_elements(CHAIN10, half(5), kind):
        Yj, Ynext = CHAIN10.Y(lv.j), CHAIN10.Y(lv.j + 1)
        assert norm_of(lv.q, kind) == pytest.approx(lv.u, abs=1e-8)
        assert rho(lv.q, Yj, kind) == pytest.approx(1.0, abs=1e-8)
        assert lv.f(lv.q) == pytest.approx(1.0, abs=1e-8)
        assert lv.f.dual_norm_value == pytest.approx(1.0, abs=1e-8)
        assert np.abs(lv.f.coeffs @ Yj.basis.T).max() < 1e-10
        assert Ynext.residual(lv.q) < 1e-10


def test_single_level():
    ch = coordinate_chain([1], 3)
    seq = DeviationSequence.explicit([0.5], tail=0.5)
    levels = level_elements(ch, seq, NormKind.L2)
    state = backward_sweep(levels, seq, ch, NormKind.L2, tau=0.5)
    assert state.lambdas == {1: 0.5}


def test_sweep_breaks_without_tail_condition():
    # 1 < 0.99 + 0.98, so nothing keeps the lower end of the first bracket below d_1
    rows = np.random.default_rng(9).standard_normal((4, 5))
    ch = Chain.from_bases([rows[:1], rows[:2], rows[:3]], 5)
    seq = DeviationSequence.explicit([1.0, 0.99, 0.98])
    levels = level_elements(ch, seq, NormKind.LINF, tau=0.0)
    with pytest.raises(BracketFailure):
        backward_sweep(levels, seq, ch, NormKind.LINF)


@pytest.mark.parametrize("kind", ALL)
def test_sweep_invariants(kind):
    seq = half(6)
    levels = level_elements(CHAIN10, seq, kind)
    state = backward_sweep(levels, seq, CHAIN10, kind, tau=seq.tail)
    assert state.k == 1
    assert state.lambdas[6] == seq.d(6)
    for k, lam in state.lambdas.items():
        assert abs(lam) <= seq.d(k) * (1 + 1e-12)
    assert state.within_norm_bounds
    for m in range(1, 7):
        assert rho(state.partial, CHAIN10.Y(m), kind) == pytest.approx(seq.d(m), abs=1e-8)


def test_euclidean_coefficients_follow_tail_of_squares():
    seq = half(3)
    ch = coordinate_chain([1, 2, 3], 5)
    x, rep = construct_exact(ch, seq, NormKind.L2)
    lam = rep.details["lambdas"]
    d = seq.values
    assert abs(lam[3]) == pytest.approx(d[2])
    for k in (1, 2):
        assert abs(lam[k]) == pytest.approx(np.sqrt(d[k - 1] ** 2 - d[k] ** 2), rel=1e-10)
    assert_exact(rep, 1e-8)


@pytest.mark.parametrize("kind", ALL)
def test_zero_tail_reduction(kind):
    ch = coordinate_chain([1, 2, 3, 4], 6)
    x, rep = construct_exact(ch, DeviationSequence.explicit([1.0, 0.5, 0.0, 0.0]), kind)
    assert ch.Y(3).residual(x) < 1e-10
    assert [r.rho for r in rep.rows] == pytest.approx([1.0, 0.5, 0.0, 0.0], abs=1e-10)


def test_zero_tail_with_tied_head_uses_engine():
    ch = coordinate_chain([1, 2, 3, 4], 6)
    seq = DeviationSequence.explicit([1.0, 0.5, 0.5, 0.0])
    plan = preprocess(ch, seq)
    assert plan.route == "engine" and plan.tau_top == 0
    _, rep = construct_exact(ch, seq, NormKind.LINF)
    assert rep.passed


@pytest.mark.parametrize("kind", ALL)
def test_strict_borodin_regime(kind):
    _, rep = construct_exact(CHAIN10, DeviationSequence.geometric(1.0, 1 / 3, 6), kind)
    assert_exact(rep)


def test_distances_non_increasing():
    _, rep = construct_exact(CHAIN10, half(8), NormKind.L1)
    rhos = [r.rho for r in rep.rows]
    assert all(b <= a + 1e-12 for a, b in zip(rhos, rhos[1:]))


def test_deterministic():
    a, _ = construct_exact(CHAIN10, half(6), NormKind.LINF)
    b, _ = construct_exact(CHAIN10, half(6), NormKind.LINF)
    assert a.tobytes() == b.tobytes()


def test_convergence_table_shrinks():
    tab = convergence_probe(CHAIN10, half(8), (4, 6, 8), NormKind.L2)
    trend = list(tab.max_diff_by_min_index().values())
    assert trend == sorted(trend, reverse=True)
    assert len(tab.entries) == 3


def test_convergence_identical_runs():
    tab = convergence_probe(CHAIN10, half(6), (5, 5), NormKind.L1)
    assert tab.entries[0]["diff"] == 0.0


def test_convergence_single_run():
    assert convergence_probe(CHAIN10, half(6), (2,), NormKind.L2).entries == []
