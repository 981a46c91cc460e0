#!/usr/bin/env python3
"""Random cross-validation of the solver against the enumeration oracle.

Generates pure-binary, mixed-binary, and general-integer instances, solves
each one under every reduction strategy, and checks that the reported optimum
matches the oracle and that every learned constraint or bound disjunction is
valid for the instance.  Exits nonzero on the first discrepancy.
"""

import argparse
import sys
import time

from cutlearn.corpus import (
    random_binary_problem,
    random_general_integer_problem,
    random_mbp_problem,
)
from cutlearn.cuts import ReductionStrategy
from cutlearn.model import evaluate
from cutlearn.oracle import oracle_optimum, validate_learned
from cutlearn.search import SolverConfig, solve


def check_one(problem, strategy):
    truth = oracle_optimum(problem)
    result = solve(problem, SolverConfig(strategy=strategy))
    if result.status == "limit":
        return "hit the node limit"
    if truth.status == "infeasible":
        if result.status != "infeasible":
            return f"solver says {result.status}, oracle says infeasible"
        learned = result.learned
    else:
        if result.status != "optimal":
            return f"solver says {result.status}, oracle says optimal"
        if problem.objective is not None and result.objective != truth.value:
            return f"optimum {result.objective} != oracle {truth.value}"
        witness = list(result.witness)
        for C in problem.constraints:
            if not evaluate(C, witness).satisfied:
                return f"witness violates {C}"
        learned = result.learned
    for obj in learned:
        if not validate_learned(problem, obj):
            return f"invalid learned object {obj}"
    return None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--binary", type=int, default=200, help="binary seeds")
    ap.add_argument("--mixed", type=int, default=100, help="mixed-binary seeds")
    ap.add_argument("--integer", type=int, default=50, help="general-integer seeds")
    args = ap.parse_args(argv)

    groups = [
        ("binary", random_binary_problem, args.binary),
        ("mixed", random_mbp_problem, args.mixed),
        ("integer", random_general_integer_problem, args.integer),
    ]
    start = time.perf_counter()
    checked = 0
    for label, gen, count in groups:
        for seed in range(count):
            problem = gen(seed)
            for strategy in ReductionStrategy:
                err = check_one(problem, strategy)
                checked += 1
                if err is not None:
                    print(
                        f"FAIL {label} seed={seed} "
                        f"strategy={strategy.name.lower()}: {err}"
                    )
                    return 1
        print(f"{label}: {count} instances ok")
    elapsed = time.perf_counter() - start
    print(f"all {checked} solves agree with the oracle ({elapsed:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
