"""Shared builders for the test suite."""

from fractions import Fraction

import pytest

from cutlearn.model import (
    LinearConstraint,
    Problem,
    Variable,
    VarKind,
    build_problem,
)

F = Fraction


def binary_vars(n, start=0):
    return [
        Variable(i, f"x{i + 1}", VarKind.BINARY, F(0), F(1))
        for i in range(start, start + n)
    ]


def mk(terms, rhs):
    return LinearConstraint.from_dict(
        {j: F(c) for j, c in terms.items()}, F(rhs)
    )


def binary_problem(n, rows, objective=None):
    """rows: list of ({var: coef}, rhs) in >= form."""
    cons = [({j: F(c) for j, c in t.items()}, ">=", F(r)) for t, r in rows]
    obj = None
    if objective is not None:
        obj = {j: F(c) for j, c in objective.items()}
    return build_problem(binary_vars(n), cons, obj)


def mbp5_system():
    """Five-constraint mixed-binary system: three binaries, two boxed
    continuous variables; branching x2 <= 0 propagates into a conflict."""
    vs = [
        Variable(0, "x1", VarKind.BINARY, F(0), F(1)),
        Variable(1, "x2", VarKind.BINARY, F(0), F(1)),
        Variable(2, "x3", VarKind.BINARY, F(0), F(1)),
        Variable(3, "y1", VarKind.CONTINUOUS, F(0), F(1)),
        Variable(4, "y2", VarKind.CONTINUOUS, F(-1), F(1)),
    ]
    rows = [
        mk({0: -2, 3: -4, 4: -2}, -3),
        mk({0: 20, 3: 5, 4: -1}, 4),
        mk({0: -20, 3: 5, 4: -10}, -16),
        mk({4: -1, 1: -1}, 0),
        mk({4: 1, 2: -1}, 0),
    ]
    return vs, rows


def separation_instance():
    """General integer z in [0,5] plus one binary; the conflict needs the
    rounding cut z + x >= 2 to resolve z."""
    vs = [
        Variable(0, "z", VarKind.INTEGER, F(0), F(5)),
        Variable(1, "x", VarKind.BINARY, F(0), F(1)),
    ]
    reason = mk({0: 2, 1: 1}, 3)
    confl = mk({0: -2, 1: 1}, -3)
    return vs, reason, confl


def fallback_problem(objective=True):
    """Two general integers where the rounding-cut separation fails.

    The reason 2z + w >= 4 propagates z >= 2 from w <= 1 with fractional
    pre-rounding 3/2; the plain resolvent stays feasible, and the shifted
    reason has an integral right-hand side so no rounding cut exists.
    Analysis must fall back to a learned bound disjunction.
    """
    vs = [
        Variable(0, "w", VarKind.INTEGER, F(0), F(4)),
        Variable(1, "z", VarKind.INTEGER, F(1), F(3)),
    ]
    rows = [
        ({1: F(2), 0: F(1)}, ">=", F(4)),
        ({1: F(-2), 0: F(1)}, ">=", F(-5, 2)),
    ]
    obj = {0: F(1), 1: F(1)} if objective else None
    return build_problem(vs, rows, obj)


@pytest.fixture
def mbp5():
    return mbp5_system()
