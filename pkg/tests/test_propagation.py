"""Row propagation: soundness, rounding, disjunction unit rule, termination."""

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from cutlearn.model import (
    BoundAtom,
    BoundDisjunction,
    BoundKind,
    Variable,
    VarKind,
    evaluate,
)
from cutlearn.propagation import (
    is_tight_propagation,
    propagate_candidates,
    propagate_disjunction,
    propagate_fixpoint,
    residual_max,
)
from cutlearn.rationals import INF
from cutlearn.trail import RowReason, Trail, max_activity

from conftest import F, binary_vars, mk

coefs = st.integers(min_value=-4, max_value=4)


def all_binary_points(n):
    return itertools.product(*([[F(0), F(1)]] * n))


def in_box(point, lb, ub):
    return all(lb[j] <= point[j] <= ub[j] for j in range(len(point)))


@settings(max_examples=200)
@given(
    st.lists(st.tuples(coefs, coefs, coefs, coefs), min_size=1, max_size=4),
    st.integers(min_value=-3, max_value=3),
)
def test_fixpoint_soundness_binary(coef_rows, rhs):
    """Every binary point satisfying all rows survives propagation: it stays
    inside the tightened box, and a reported conflict means no point exists."""
    rows = [
        mk(dict(enumerate(cs)), rhs + i) for i, cs in enumerate(coef_rows)
    ]
    t = Trail(binary_vars(4))
    res = propagate_fixpoint(t, rows)
    feasible = [
        p
        for p in all_binary_points(4)
        if all(evaluate(C, list(p)).satisfied for C in rows)
    ]
    if res.conflict:
        assert not feasible
        assert res.source is not None and res.state == t.current_state
    else:
        for p in feasible:
            assert in_box(p, t.local_lb, t.local_ub)


def test_single_row_candidates_and_rounding():
    vs = [
        Variable(0, "z", VarKind.INTEGER, F(0), F(5)),
        Variable(1, "y", VarKind.CONTINUOUS, F(0), F(1)),
    ]
    t = Trail(vs)
    # 2z + y >= 4 with y <= 1 forces z >= 3/2, rounded up to 2
    C = mk({0: 2, 1: 1}, 4)
    res = propagate_candidates(C, t)
    assert not res.conflict
    (cand,) = res.changes
    assert (cand.var, cand.kind, cand.value) == (0, BoundKind.LOWER, F(2))
    assert cand.pre_rounding == F(3, 2)


def test_residual_max_handles_infinite_bounds():
    vs = [
        Variable(0, "y", VarKind.CONTINUOUS, float("-inf"), float("inf")),
        Variable(1, "x", VarKind.BINARY, F(0), F(1)),
    ]
    t = Trail(vs)
    C = mk({0: 1, 1: 1}, 0)
    assert residual_max(C, 0, t.local_lb, t.local_ub) == 1
    assert residual_max(C, 1, t.local_lb, t.local_ub) == INF
    # the unbounded variable yields no candidate for x, but does for y
    res = propagate_candidates(C, t)
    (cand,) = res.changes
    assert cand.var == 0 and cand.kind is BoundKind.LOWER and cand.value == -1


def test_fixpoint_idempotent():
    t = Trail(binary_vars(3))
    rows = [mk({0: 1, 1: 1}, 2), mk({1: -1, 2: 1}, 0)]
    res = propagate_fixpoint(t, rows)
    assert not res.conflict and res.num_changes > 0
    before = (list(t.local_lb), list(t.local_ub))
    again = propagate_fixpoint(t, rows)
    assert again.num_changes == 0
    assert (t.local_lb, t.local_ub) == before


def test_conflict_reports_source_row():
    t = Trail(binary_vars(2))
    t.push_decision(0, BoundKind.UPPER, 0)
    rows = [mk({1: 1}, 0), mk({0: 2, 1: 1}, 3)]
    res = propagate_fixpoint(t, rows)
    assert res.conflict and res.source == ("row", 1)


def test_continuous_zigzag_terminates():
    """Two rows each tightening the other's variable by a shrinking amount
    converge geometrically without reaching a fixpoint; the round cap stops
    the loop with sound (if not maximal) bounds."""
    vs = [
        Variable(0, "y1", VarKind.CONTINUOUS, F(0), F(10)),
        Variable(1, "y2", VarKind.CONTINUOUS, F(0), F(10)),
    ]
    t = Trail(vs)
    rows = [mk({0: -2, 1: 1}, -1), mk({1: -2, 0: 1}, -1)]
    res = propagate_fixpoint(t, rows, max_rounds=50)
    assert not res.conflict
    # limit point is y1 = y2 = 1; every derived bound must stay valid there
    assert t.local_ub[0] >= 1 and t.local_ub[1] >= 1
    for C in rows:
        assert evaluate(C, [F(1), F(1)]).satisfied


def test_disjunction_unit_rule():
    vs = binary_vars(2)
    t = Trail(vs)
    D = BoundDisjunction(
        (BoundAtom(0, BoundKind.LOWER, F(1)), BoundAtom(1, BoundKind.LOWER, F(1)))
    )
    # two open atoms: nothing to do
    assert propagate_disjunction(D, t).change is None
    t.push_decision(0, BoundKind.UPPER, 0)
    res = propagate_disjunction(D, t)
    assert res.change == (1, BoundKind.LOWER, F(1))
    t.push_decision(1, BoundKind.UPPER, 0)
    assert propagate_disjunction(D, t).conflict
    t.backjump(t.states()[0])
    t.push_decision(1, BoundKind.LOWER, 1)
    # one atom already holds: satisfied, no propagation
    res = propagate_disjunction(D, t)
    assert not res.conflict and res.change is None


def test_disjunction_unit_rule_rounds_integer_atoms():
    vs = [Variable(0, "z", VarKind.INTEGER, F(0), F(5))]
    t = Trail(vs)
    D = BoundDisjunction((BoundAtom(0, BoundKind.LOWER, F(3, 2)),))
    res = propagate_disjunction(D, t)
    assert res.change == (0, BoundKind.LOWER, F(2))


def test_fixpoint_applies_disjunctions():
    vs = binary_vars(2)
    t = Trail(vs)
    t.push_decision(0, BoundKind.UPPER, 0)
    D = BoundDisjunction(
        (BoundAtom(0, BoundKind.LOWER, F(1)), BoundAtom(1, BoundKind.LOWER, F(1)))
    )
    res = propagate_fixpoint(t, [], [D])
    assert not res.conflict and t.local_lb[1] == 1
    # and a conflicting disjunction is attributed correctly
    t2 = Trail(vs)
    t2.push_decision(0, BoundKind.UPPER, 0)
    t2.push_decision(1, BoundKind.UPPER, 0)
    res2 = propagate_fixpoint(t2, [], [D])
    assert res2.conflict and res2.source == ("disjunction", 0)


def test_is_tight_propagation():
    vs = [
        Variable(0, "z", VarKind.INTEGER, F(0), F(5)),
        Variable(1, "y", VarKind.CONTINUOUS, F(0), F(4)),
    ]
    # rounded integer deduction: z >= ceil(3/2) is not tight
    t = Trail(vs)
    C = mk({0: 2, 1: 1}, 4)
    t.push_deduction(1, BoundKind.UPPER, 1, RowReason(9, mk({1: -1}, -1)))
    propagate_fixpoint(t, [C])
    change = next(ch for ch in t.changes if ch.var == 0)
    assert not is_tight_propagation(C, change, t)
    # integral pre-rounding: z >= 2 from y <= 0 is tight
    t2 = Trail(vs)
    t2.push_deduction(1, BoundKind.UPPER, 0, RowReason(9, mk({1: -1}, 0)))
    propagate_fixpoint(t2, [C])
    change2 = next(ch for ch in t2.changes if ch.var == 0)
    assert change2.pre_rounding == 2
    assert is_tight_propagation(C, change2, t2)
    # continuous deductions are always tight
    t3 = Trail(vs)
    C3 = mk({1: -1, 0: -1}, -2)  # y <= 2 - z
    propagate_fixpoint(t3, [C3])
    change3 = next(ch for ch in t3.changes if ch.var == 1)
    assert is_tight_propagation(C3, change3, t3)


def test_max_activity_drops_below_rhs_exactly_on_conflict():
    t = Trail(binary_vars(2))
    C = mk({0: 1, 1: 1}, 2)
    assert not propagate_candidates(C, t).conflict
    t.push_decision(0, BoundKind.UPPER, 0)
    assert max_activity(C, t) < C.rhs
    assert propagate_candidates(C, t).conflict
