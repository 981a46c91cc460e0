#!/usr/bin/env python3
"""Two-phase strategy comparison over the fixed desk corpus.

Phase 1 solves each instance with chronological backtracking, analyzing every
conflict but ignoring the learned objects, so the tree (and node count) is the
same for all reduction strategies.  Phase 2 re-solves with the learned objects
installed.  The script prints one JSON line per (instance, strategy) pair and
a per-strategy summary table.
"""

import argparse
import json
import sys

from cutlearn.corpus import desk_corpus
from cutlearn.cuts import ReductionStrategy
from cutlearn.fileio import emit_result_stats
from cutlearn.search import SolverConfig, run_two_phase


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=20, help="corpus size")
    ap.add_argument("--base-seed", type=int, default=1234)
    ap.add_argument(
        "--quiet", action="store_true", help="print only the summary table"
    )
    args = ap.parse_args(argv)

    corpus = desk_corpus(size=args.size, base_seed=args.base_seed)
    summary = {
        s.name.lower(): dict(
            nodes1=0, nodes2=0, learned=0, length_sum=0.0, length_n=0,
            used_sum=0.0, used_n=0, bdchgs=0,
        )
        for s in ReductionStrategy
    }

    for idx, problem in enumerate(corpus):
        phase1_nodes = set()
        for strategy in ReductionStrategy:
            r1, r2, objects = run_two_phase(
                problem, SolverConfig(strategy=strategy)
            )
            phase1_nodes.add(r1.stats.nodes)
            row = summary[strategy.name.lower()]
            row["nodes1"] += r1.stats.nodes
            row["nodes2"] += r2.stats.nodes
            row["learned"] += len(objects)
            if r1.stats.avg_learned_length is not None:
                row["length_sum"] += r1.stats.avg_learned_length
                row["length_n"] += 1
            if r2.stats.used_pct is not None:
                row["used_sum"] += r2.stats.used_pct
                row["used_n"] += 1
            row["bdchgs"] += r2.stats.bdchgs_by_learned
            if not args.quiet:
                payload = json.loads(emit_result_stats(r2))
                payload["instance"] = idx
                payload["strategy"] = strategy.name.lower()
                payload["phase1_nodes"] = r1.stats.nodes
                print(json.dumps(payload))
        if len(phase1_nodes) != 1:
            print(
                f"instance {idx}: phase-1 node counts differ across "
                f"strategies: {sorted(phase1_nodes)}",
                file=sys.stderr,
            )
            return 1

    print()
    header = (
        f"{'strategy':<10} {'nodes1':>7} {'nodes2':>7} {'learned':>8} "
        f"{'avg_len':>8} {'used_pct':>9} {'bdchgs':>7}"
    )
    print(header)
    print("-" * len(header))
    for name, row in summary.items():
        avg_len = row["length_sum"] / row["length_n"] if row["length_n"] else None
        used = row["used_sum"] / row["used_n"] if row["used_n"] else None
        print(
            f"{name:<10} {row['nodes1']:>7} {row['nodes2']:>7} "
            f"{row['learned']:>8} "
            f"{avg_len if avg_len is None else round(avg_len, 2)!s:>8} "
            f"{used if used is None else round(used, 1)!s:>9} "
            f"{row['bdchgs']:>7}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
