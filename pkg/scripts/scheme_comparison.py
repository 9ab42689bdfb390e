"""Steps to a residual tolerance for every scheme on seeded affine contractions.

    python3 scripts/scheme_comparison.py --dim 3 --operators 10
"""

import argparse

import numpy as np

from fixpoint.analysis import RunConfig, StopRule, multistep_config, run
from fixpoint.operators import random_affine_contraction
from fixpoint.schemes import Schedule, Scheme, SchemeConfig


def schemes(a, b):
    A, B = Schedule.constant(a), Schedule.constant(b)
    out = {f"new_multistep(k={k})": multistep_config(k, A, B) for k in (2, 3, 5)}
    out["rs_multistep(k=3)"] = SchemeConfig(Scheme.RS_MULTISTEP, {"alpha": A, "beta1": B, "beta2": B}, k=3)
    out["s_iteration"] = SchemeConfig(Scheme.S_ITERATION, {"alpha": A, "beta": B})
    out["thianwan"] = SchemeConfig(Scheme.THIANWAN, {"alpha": A, "beta": B})
    out["sp"] = SchemeConfig(Scheme.SP, {"alpha": A, "beta": B, "gamma": B})
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--operators", type=int, default=10)
    ap.add_argument("--delta", type=float, default=0.9)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    configs = schemes(0.6, 0.3)
    steps = {name: [] for name in configs}
    for i in range(args.operators):
        T = random_affine_contraction(args.delta, args.dim, seed=args.seed + i)
        for name, cfg in configs.items():
            tr = run(RunConfig(cfg, T, T.domain.lower, StopRule(args.tol), record_every=10**9))
            steps[name].append(tr.steps if tr.converged else np.nan)
    print(f"delta={args.delta}, dim={args.dim}, {args.operators} operators, tol={args.tol:g}")
    for name, s in steps.items():
        print(f"  {name:<20} mean steps {np.nanmean(s):8.1f}   worst {np.nanmax(s):6.0f}")


if __name__ == "__main__":
    main()
