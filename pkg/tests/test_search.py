"""Solver end-to-end behavior against the oracle, plus search plumbing."""

import pytest

from cutlearn.corpus import (
    random_binary_problem,
    random_general_integer_problem,
    random_mbp_problem,
)
from cutlearn.cuts import ReductionStrategy
from cutlearn.model import (
    BoundAtom,
    BoundDisjunction,
    BoundKind,
    LinearConstraint,
    VarKind,
    Variable,
    build_problem,
    evaluate,
)
from cutlearn.oracle import oracle_optimum, validate_learned
from cutlearn.search import (
    SolverConfig,
    parse_learned_line,
    read_learned_file,
    run_two_phase,
    select_branching,
    serialize_learned,
    solve,
    write_learned_file,
)
from cutlearn.trail import Trail

from conftest import F, binary_problem, binary_vars, fallback_problem, mk


def assert_agrees_with_oracle(problem, result):
    truth = oracle_optimum(problem)
    assert result.status != "limit"
    if truth.status == "infeasible":
        assert result.status == "infeasible"
    else:
        assert result.status == "optimal"
        if problem.objective is None:
            assert result.objective is None  # feasibility question only
        else:
            assert result.objective == truth.value
        w = list(result.witness)
        for C in problem.constraints:
            assert evaluate(C, w).satisfied


# -- agreement sweeps ---------------------------------------------------------


@pytest.mark.parametrize("strategy", list(ReductionStrategy))
def test_binary_solves_match_oracle(strategy):
    for seed in range(15):
        problem = random_binary_problem(seed)
        result = solve(problem, SolverConfig(strategy=strategy))
        assert_agrees_with_oracle(problem, result)
        for obj in result.learned:
            assert validate_learned(problem, obj)


def test_mixed_binary_solves_match_oracle():
    for seed in range(10):
        problem = random_mbp_problem(seed)
        result = solve(problem)
        assert_agrees_with_oracle(problem, result)
        for obj in result.learned:
            assert validate_learned(problem, obj)


def test_general_integer_solves_match_oracle():
    for seed in range(10):
        problem = random_general_integer_problem(seed)
        result = solve(problem)
        assert_agrees_with_oracle(problem, result)
        for obj in result.learned:
            assert validate_learned(problem, obj)


def test_learning_off_still_agrees():
    for seed in range(8):
        problem = random_binary_problem(seed)
        result = solve(problem, SolverConfig(enable_learning=False))
        assert_agrees_with_oracle(problem, result)
        assert not result.learned


# -- determinism --------------------------------------------------------------


def test_solver_is_deterministic():
    problem = random_binary_problem(7)
    a = solve(problem, SolverConfig())
    b = solve(problem, SolverConfig())
    assert (a.status, a.objective, a.witness) == (b.status, b.objective, b.witness)
    assert a.stats == b.stats
    assert a.learned == b.learned


# -- feasibility-only search --------------------------------------------------


def test_solve_without_objective_stops_at_first_leaf():
    problem = binary_problem(3, [({0: 1, 1: 1, 2: 1}, 2)])
    result = solve(problem)
    assert result.status == "optimal" and result.objective is None
    w = list(result.witness)
    assert evaluate(problem.constraints[0], w).satisfied


def test_infeasible_without_objective():
    problem = binary_problem(1, [({0: 1}, 1), ({0: -1}, 0)])
    assert solve(problem).status == "infeasible"


# -- disjunction fallback end to end ------------------------------------------


@pytest.mark.parametrize("with_objective", [True, False])
def test_fallback_learns_valid_disjunction(with_objective):
    problem = fallback_problem(objective=with_objective)
    result = solve(problem)
    assert_agrees_with_oracle(problem, result)
    assert result.stats.fallbacks >= 1
    disjunctions = [
        obj for obj in result.learned if isinstance(obj, BoundDisjunction)
    ]
    assert disjunctions
    for d in disjunctions:
        assert validate_learned(problem, d)


# -- two-phase ----------------------------------------------------------------


def test_two_phase_agrees_and_shares_objects():
    for seed in (3, 11, 19):
        problem = random_binary_problem(seed)
        r1, r2, objects = run_two_phase(problem)
        assert (r1.status, r1.objective) == (r2.status, r2.objective)
        assert_agrees_with_oracle(problem, r2)
        assert list(r1.learned) == objects
        # phase 2 does not learn anything new of its own
        assert not r2.learned
        for obj in objects:
            assert validate_learned(problem, obj)


def test_generation_tree_is_strategy_independent():
    problem = random_binary_problem(5)
    nodes = set()
    for strategy in ReductionStrategy:
        cfg = SolverConfig(strategy=strategy, mode="generate")
        nodes.add(solve(problem, cfg).stats.nodes)
    assert len(nodes) == 1


# -- branching ----------------------------------------------------------------


def test_select_branching_lowest_index_down_first():
    problem = binary_problem(3, [({0: 1, 1: 1, 2: 1}, 1)])
    t = Trail(problem.variables)
    var, kind, value, flip_kind, flip_value = select_branching(t, problem)
    assert (var, kind, value) == (0, BoundKind.UPPER, F(0))
    assert (flip_kind, flip_value) == (BoundKind.LOWER, F(1))
    t.push_decision(0, BoundKind.UPPER, 0)
    assert select_branching(t, problem)[0] == 1


def test_select_branching_splits_integer_range():
    vs = [Variable(0, "z", VarKind.INTEGER, F(0), F(5))]
    problem = build_problem(vs, [])
    t = Trail(vs)
    var, kind, value, flip_kind, flip_value = select_branching(t, problem)
    assert (var, kind, value) == (0, BoundKind.UPPER, F(2))
    assert (flip_kind, flip_value) == (BoundKind.LOWER, F(3))


def test_select_branching_skips_fixed_and_continuous():
    vs = [
        Variable(0, "y", VarKind.CONTINUOUS, F(0), F(1)),
        Variable(1, "x", VarKind.BINARY, F(0), F(1)),
    ]
    problem = build_problem(vs, [])
    t = Trail(vs)
    t.push_decision(1, BoundKind.UPPER, 0)
    assert select_branching(t, problem) is None


# -- limits and config --------------------------------------------------------


def test_node_limit_reports_limit_status():
    problem = random_binary_problem(2)
    result = solve(problem, SolverConfig(node_limit=1))
    assert result.status == "limit"


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(node_limit=0)
    with pytest.raises(ValueError):
        SolverConfig(mode="bogus")


def test_on_learned_hook_sees_every_object():
    problem = random_mbp_problem(52)
    seen = []
    result = solve(problem, SolverConfig(on_learned=seen.append))
    assert result.learned
    assert len(seen) >= len(result.learned)
    for obj in result.learned:
        assert obj in seen


# -- learned-object files -----------------------------------------------------


def test_learned_line_roundtrip():
    row = LinearConstraint.from_dict({0: F(3, 2), 2: F(-1)}, F(1, 4), "learned:x")
    assert parse_learned_line(serialize_learned(row)) == row
    dis = BoundDisjunction(
        (
            BoundAtom(0, BoundKind.LOWER, F(2)),
            BoundAtom(1, BoundKind.UPPER, F(-1, 2)),
        )
    )
    back = parse_learned_line(serialize_learned(dis))
    assert back.atoms == dis.atoms
    with pytest.raises(ValueError):
        parse_learned_line("zzz 1 2")
    with pytest.raises(ValueError):
        parse_learned_line("")


def test_learned_file_roundtrip(tmp_path):
    problem = random_mbp_problem(52)
    result = solve(problem)
    assert result.learned
    path = str(tmp_path / "learned.txt")
    write_learned_file(path, result.learned)
    back = read_learned_file(path)
    assert list(result.learned) == back
    # and the objects can seed an exploitation run
    cfg = SolverConfig(
        mode="exploit", enable_learning=False, initial_learned=tuple(back)
    )
    again = solve(problem, cfg)
    assert_agrees_with_oracle(problem, again)
