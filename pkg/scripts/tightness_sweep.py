"""Tightness of the data-dependence bounds over a grid of affine contractions.

    python3 scripts/tightness_sweep.py --out out/tightness.csv --workers 4
"""

import argparse
import statistics
from collections import defaultdict

from fixpoint import io
from fixpoint.analysis import StopRule, affine_sweep_grid, bound_tightness_sweep
from fixpoint.schemes import Schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/tightness.csv")
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--beta", type=float, default=0.3)
    args = ap.parse_args()

    cells = affine_sweep_grid(
        epsilons=[1e-4, 1e-3, 1e-2, 1e-1],
        deltas=[0.1, 0.3, 0.5, 0.7, 0.9],
        ks=[2, 3, 5, 8],
        schemes=["new_multistep", "s_iteration"],
        modes=["constant_shift", "smooth_field"],
        dim=args.dim,
        seed=args.seed,
        alpha=Schedule.constant(args.alpha),
        beta=Schedule.constant(args.beta),
        stop=StopRule(1e-12),
    )
    rows = bound_tightness_sweep(cells, workers=args.workers)

    table, by_key = [], defaultdict(list)
    for r in rows:
        c, rep = r.cell, r.report
        row = {"cell": c.index, "epsilon_nominal": c.epsilon, "delta": c.params.delta, "k": c.scheme.multiplier,
               "scheme": c.scheme.scheme.value, "mode": c.mode, "seed": c.seed, "status": r.status,
               "epsilon_realized": None, "observed": None, "bound": None, "theorem": "", "satisfied": None,
               "ratio": r.ratio}
        if rep is not None:
            row.update(epsilon_realized=rep.epsilon_realized, observed=rep.observed, bound=rep.bound,
                       theorem=rep.theorem, satisfied=rep.satisfied)
            by_key[(c.scheme.scheme.value, c.scheme.multiplier, c.params.delta)].append(rep.ratio)
        table.append(row)
    io.emit_csv(table, args.out, io.SWEEP)

    print(f"{'scheme':<14}{'k':>3}{'delta':>7}{'median ratio':>14}{'max ratio':>11}")
    for (scheme, k, delta), ratios in sorted(by_key.items()):
        print(f"{scheme:<14}{k:>3}{delta:>7.1f}{statistics.median(ratios):>14.4f}{max(ratios):>11.4f}")
    bad = sum(r.report is not None and not r.report.satisfied for r in rows)
    print(f"{len(rows)} cells, {bad} bound violations -> {args.out}")


if __name__ == "__main__":
    main()
