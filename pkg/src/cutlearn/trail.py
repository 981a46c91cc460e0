"""Ordered record of decisions and deductions with per-state local bounds.

States are identified by (decision level, within-level change index); the
state before any change is ``INITIAL_STATE`` = (0, -1).  Index 0 at each
level > 0 is the branching decision; root-level deductions start at (0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .model import BoundDisjunction, BoundKind, LinearConstraint, Variable, VarKind
from .rationals import (
    Ext,
    Rat,
    ZERO,
    ext_add,
    ext_mul,
    format_ext,
    format_rational,
    is_finite,
    is_integral,
    parse_ext,
)


@dataclass(frozen=True, order=True)
class StateId:
    level: int
    index: int


INITIAL_STATE = StateId(0, -1)


@dataclass(frozen=True)
class RowReason:
    index: int
    row: LinearConstraint


@dataclass(frozen=True)
class DisjunctionReason:
    index: int
    disjunction: BoundDisjunction


Reason = Union[None, RowReason, DisjunctionReason]  # None = branching decision


@dataclass(frozen=True)
class BoundChange:
    state: StateId
    var: int
    kind: BoundKind
    new_value: Rat
    old_value: Ext
    reason: Reason
    # Propagated value before integer rounding; None for decisions.
    pre_rounding: Optional[Rat] = None

    @property
    def is_decision(self) -> bool:
        return self.reason is None


class Trail:
    """Root-to-node path of bound changes over a fixed variable set."""

    def __init__(self, variables: Sequence[Variable]):
        self.variables = tuple(variables)
        self.local_lb: List[Ext] = [v.global_lb for v in variables]
        self.local_ub: List[Ext] = [v.global_ub for v in variables]
        self.changes: List[BoundChange] = []
        self.bound_inconsistent = False
        self.inconsistent_var: Optional[int] = None

    # -- state bookkeeping ------------------------------------------------

    @property
    def current_state(self) -> StateId:
        return self.changes[-1].state if self.changes else INITIAL_STATE

    @property
    def current_level(self) -> int:
        return self.current_state.level

    def change_at(self, state: StateId) -> BoundChange:
        for ch in reversed(self.changes):
            if ch.state == state:
                return ch
        raise KeyError(f"no change at state {state}")

    def predecessor(self, state: StateId) -> StateId:
        prev = INITIAL_STATE
        for ch in self.changes:
            if ch.state == state:
                return prev
            prev = ch.state
        raise KeyError(f"no change at state {state}")

    def states(self) -> List[StateId]:
        return [ch.state for ch in self.changes]

    # -- mutation ----------------------------------------------------------

    def _next_state(self, decision: bool) -> StateId:
        cur = self.current_state
        if decision:
            return StateId(cur.level + 1, 0)
        return StateId(cur.level, cur.index + 1)

    def _apply(self, change: BoundChange) -> None:
        j = change.var
        if change.kind is BoundKind.LOWER:
            self.local_lb[j] = change.new_value
        else:
            self.local_ub[j] = change.new_value
        if self.local_lb[j] > self.local_ub[j]:
            self.bound_inconsistent = True
            self.inconsistent_var = j
        self.changes.append(change)

    def _check_tightens(self, var: int, kind: BoundKind, value: Rat) -> Ext:
        value = Fraction(value)
        if kind is BoundKind.LOWER:
            old = self.local_lb[var]
            if value <= old:
                raise ValueError(
                    f"lower bound {value} does not tighten {format_ext(old)} for x{var}"
                )
        else:
            old = self.local_ub[var]
            if value >= old:
                raise ValueError(
                    f"upper bound {value} does not tighten {format_ext(old)} for x{var}"
                )
        v = self.variables[var]
        if v.is_integral and not is_integral(value):
            raise ValueError(f"fractional bound {value} for integral variable x{var}")
        return old

    def push_decision(self, var: int, kind: BoundKind, value: Rat) -> StateId:
        if self.variables[var].kind is VarKind.CONTINUOUS:
            raise ValueError("branching on a continuous variable is not allowed")
        value = Fraction(value)
        old = self._check_tightens(var, kind, value)
        state = self._next_state(decision=True)
        self._apply(BoundChange(state, var, kind, value, old, None))
        return state

    def push_deduction(
        self,
        var: int,
        kind: BoundKind,
        value: Rat,
        reason: Reason,
        pre_rounding: Optional[Rat] = None,
    ) -> StateId:
        if reason is None:
            raise ValueError("deduction requires a reason")
        value = Fraction(value)
        old = self._check_tightens(var, kind, value)
        state = self._next_state(decision=False)
        self._apply(
            BoundChange(state, var, kind, value, old, reason, pre_rounding)
        )
        return state

    def backjump(self, target: StateId) -> None:
        if target > self.current_state:
            raise ValueError(f"backjump target {target} beyond current state")
        while self.changes and self.changes[-1].state > target:
            ch = self.changes.pop()
            if ch.kind is BoundKind.LOWER:
                self.local_lb[ch.var] = ch.old_value
            else:
                self.local_ub[ch.var] = ch.old_value
        self.bound_inconsistent = False
        self.inconsistent_var = None
        for j in range(len(self.variables)):
            if self.local_lb[j] > self.local_ub[j]:
                self.bound_inconsistent = True
                self.inconsistent_var = j
                break

    # -- bound queries -----------------------------------------------------

    def bounds_at(self, state: StateId) -> Tuple[List[Ext], List[Ext]]:
        """Local bound vectors as they were at (inclusive) the given state."""
        lb = list(self.local_lb)
        ub = list(self.local_ub)
        for ch in reversed(self.changes):
            if ch.state <= state:
                break
            if ch.kind is BoundKind.LOWER:
                lb[ch.var] = ch.old_value
            else:
                ub[ch.var] = ch.old_value
        return lb, ub

    def latest_change(
        self, var: int, kind: BoundKind, upto: Optional[StateId] = None
    ) -> Optional[BoundChange]:
        for ch in reversed(self.changes):
            if upto is not None and ch.state > upto:
                continue
            if ch.var == var and ch.kind is kind:
                return ch
        return None


# -- activities and relaxability -------------------------------------------


def activity_bounds_max(C: LinearConstraint, lb: Sequence[Ext], ub: Sequence[Ext]) -> Ext:
    total: Ext = ZERO
    for j, a in C.terms:
        contrib = ext_mul(a, ub[j]) if a > 0 else ext_mul(a, lb[j])
        total = ext_add(total, contrib)
    return total


def activity_bounds_min(C: LinearConstraint, lb: Sequence[Ext], ub: Sequence[Ext]) -> Ext:
    total: Ext = ZERO
    for j, a in C.terms:
        contrib = ext_mul(a, lb[j]) if a > 0 else ext_mul(a, ub[j])
        total = ext_add(total, contrib)
    return total


def max_activity(C: LinearConstraint, trail: Trail, state: Optional[StateId] = None) -> Ext:
    if state is None:
        return activity_bounds_max(C, trail.local_lb, trail.local_ub)
    lb, ub = trail.bounds_at(state)
    return activity_bounds_max(C, lb, ub)


def min_activity(C: LinearConstraint, trail: Trail, state: Optional[StateId] = None) -> Ext:
    if state is None:
        return activity_bounds_min(C, trail.local_lb, trail.local_ub)
    lb, ub = trail.bounds_at(state)
    return activity_bounds_min(C, lb, ub)


def global_max_activity(C: LinearConstraint, variables: Sequence[Variable]) -> Ext:
    lb = [v.global_lb for v in variables]
    ub = [v.global_ub for v in variables]
    return activity_bounds_max(C, lb, ub)


def global_min_activity(C: LinearConstraint, variables: Sequence[Variable]) -> Ext:
    lb = [v.global_lb for v in variables]
    ub = [v.global_ub for v in variables]
    return activity_bounds_min(C, lb, ub)


def is_relaxable(
    C: LinearConstraint, var: int, trail: Trail, state: Optional[StateId] = None
) -> bool:
    """True iff relaxing var to its global bounds keeps max activity unchanged."""
    a = C.coef(var)
    if a == 0:
        raise ValueError(f"variable {var} not in constraint")
    if state is None:
        lb, ub = trail.local_lb, trail.local_ub
    else:
        lb, ub = trail.bounds_at(state)
    v = trail.variables[var]
    if a > 0:
        return ub[var] == v.global_ub
    return lb[var] == v.global_lb


def infeasible_at(
    C: LinearConstraint, trail: Trail, state: Optional[StateId] = None
) -> bool:
    return max_activity(C, trail, state) < C.rhs


# -- serialization -----------------------------------------------------------


def serialize_trail(trail: Trail) -> str:
    """One change per line: level index var kind value reason-id."""
    lines = []
    for ch in trail.changes:
        if ch.reason is None:
            rid = "dec"
        elif isinstance(ch.reason, RowReason):
            rid = f"row:{ch.reason.index}"
        else:
            rid = f"dis:{ch.reason.index}"
        kind = "lb" if ch.kind is BoundKind.LOWER else "ub"
        lines.append(
            f"{ch.state.level} {ch.state.index} {ch.var} {kind} "
            f"{format_rational(ch.new_value)} {rid}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def replay_trail(
    variables: Sequence[Variable],
    rows: Sequence[LinearConstraint],
    disjunctions: Sequence[BoundDisjunction],
    text: str,
) -> Trail:
    trail = Trail(variables)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        level_s, index_s, var_s, kind_s, value_s, rid = line.split()
        var = int(var_s)
        kind = BoundKind.LOWER if kind_s == "lb" else BoundKind.UPPER
        value = parse_ext(value_s)
        if rid == "dec":
            state = trail.push_decision(var, kind, value)
        elif rid.startswith("row:"):
            idx = int(rid[4:])
            state = trail.push_deduction(var, kind, value, RowReason(idx, rows[idx]))
        elif rid.startswith("dis:"):
            idx = int(rid[4:])
            state = trail.push_deduction(
                var, kind, value, DisjunctionReason(idx, disjunctions[idx])
            )
        else:
            raise ValueError(f"line {lineno}: bad reason id {rid!r}")
        if (state.level, state.index) != (int(level_s), int(index_s)):
            raise ValueError(f"line {lineno}: state mismatch on replay")
    return trail
