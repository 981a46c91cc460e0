"""Constraint canonical form, normalization round trips, problem building."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutlearn.model import (
    BoundAtom,
    BoundDisjunction,
    BoundKind,
    LinearConstraint,
    Variable,
    VarKind,
    build_problem,
    complement_term,
    denormalize,
    evaluate,
    normalize_for_reduction,
    satisfies_disjunction,
)

from conftest import F, binary_vars, mk

coefs = st.fractions(min_value=-100, max_value=100, max_denominator=10)


def small_constraints(n=4):
    return st.builds(
        lambda cs, rhs: LinearConstraint.from_dict(dict(enumerate(cs)), rhs),
        st.lists(coefs, min_size=n, max_size=n),
        coefs,
    )


def test_terms_sorted_and_sparse():
    C = LinearConstraint.from_dict({3: F(1), 0: F(2), 1: F(0)}, F(1))
    assert C.terms == ((0, F(2)), (3, F(1)))
    assert C.coef(1) == 0
    assert len(C) == 2


def test_origin_excluded_from_equality():
    a = LinearConstraint.from_dict({0: F(1)}, F(1), "model")
    b = LinearConstraint.from_dict({0: F(1)}, F(1), "learned:cmir")
    assert a == b


def test_canonical_scale():
    C = LinearConstraint.from_dict({0: F(2, 3), 1: F(-4, 3)}, F(1, 6))
    scaled = C.canonical_scale()
    assert scaled.terms == ((0, F(1)), (1, F(-2)))
    assert scaled.rhs == F(1, 4)
    assert scaled.canonical_scale() == scaled


def test_combined_requires_positive_multiplier():
    C = mk({0: 1}, 1)
    with pytest.raises(ValueError):
        C.combined(C, F(-1))
    with pytest.raises(ValueError):
        C.scaled(F(0))


def test_binary_bounds_enforced():
    with pytest.raises(ValueError):
        Variable(0, "x", VarKind.BINARY, F(0), F(2))
    with pytest.raises(ValueError):
        Variable(0, "z", VarKind.INTEGER, F(0), F(3, 2))
    with pytest.raises(ValueError):
        Variable(0, "y", VarKind.CONTINUOUS, F(1), F(0))


def test_build_problem_canonicalizes_senses():
    vs = binary_vars(2)
    p = build_problem(
        vs,
        [({0: F(1), 1: F(2)}, "<=", F(3)), ({0: F(1)}, "=", F(1))],
    )
    assert p.constraints[0] == mk({0: -1, 1: -2}, -3)
    assert p.constraints[1] == mk({0: 1}, 1)
    assert p.constraints[2] == mk({0: -1}, -1)
    # already-canonical rows pass through unchanged
    again = build_problem(vs, list(p.constraints))
    assert again.constraints == p.constraints


def test_build_problem_validation():
    vs = binary_vars(2)
    with pytest.raises(ValueError):
        build_problem(vs, [({5: F(1)}, ">=", F(0))])
    with pytest.raises(ValueError):
        build_problem(vs, [], {9: F(1)})
    with pytest.raises(ValueError):
        build_problem([vs[0], vs[0]], [])


def test_complement_is_involution():
    vs = binary_vars(3)
    C = mk({0: 2, 1: -3, 2: 1}, 4)
    once = complement_term(C, 1, vs)
    assert once.coef(1) == 3
    assert complement_term(once, 1, vs) == C


@given(small_constraints(), st.integers(min_value=0, max_value=3))
def test_normalize_denormalize_roundtrip(C, r):
    vs = binary_vars(4)
    if C.coef(r) == 0:
        return
    norm, record = normalize_for_reduction(C, r, vs)
    assert norm.coef(r) == 1
    assert all(c >= 0 for _, c in norm.terms)
    back = denormalize(norm, record, vs)
    # denormalization undoes complementation only; the positive division by
    # the divisor stays, so scaling back recovers the input exactly
    assert record.divisor > 0
    assert back.scaled(record.divisor) == C


def test_normalize_divisor_tracks_sign():
    vs = binary_vars(2)
    C = mk({0: -2, 1: 4}, 3)
    norm, record = normalize_for_reduction(C, 0, vs)
    assert norm.coef(0) == 1
    assert 0 in record.complemented_set
    assert record.divisor == 2
    # forward again through the same record is the identity in literal space
    again, record2 = normalize_for_reduction(
        denormalize(norm, record, vs), 0, vs
    )
    assert again == norm
    assert record2.complemented == record.complemented


def test_bound_atom_holds():
    atom = BoundAtom(0, BoundKind.LOWER, F(1))
    assert atom.holds(F(1), F(1)) is True
    assert atom.holds(F(0), F(0)) is False
    assert atom.holds(F(0), F(1)) is None
    up = BoundAtom(0, BoundKind.UPPER, F(0))
    assert up.holds(F(0), F(0)) is True
    assert up.holds(F(1), F(1)) is False


def test_disjunction_validation():
    a = BoundAtom(0, BoundKind.LOWER, F(1))
    with pytest.raises(ValueError):
        BoundDisjunction(())
    with pytest.raises(ValueError):
        BoundDisjunction((a, BoundAtom(0, BoundKind.LOWER, F(2))))
    D = BoundDisjunction((a, BoundAtom(0, BoundKind.UPPER, F(0))))
    assert satisfies_disjunction(D, [F(0)])
    assert satisfies_disjunction(D, [F(1)])
    assert not satisfies_disjunction(
        BoundDisjunction((a,)), [F(0)]
    )


def test_evaluate_slack():
    C = mk({0: 2, 1: -1}, 1)
    ev = evaluate(C, [F(1), F(0)])
    assert ev.satisfied and ev.slack == 1
    ev = evaluate(C, [F(0), F(1)])
    assert not ev.satisfied and ev.slack == -2
