"""``fixpoint <subcommand> --config <path> [--out <path>] [--seed <int>]``.

Exit codes: 0 when every asserted bound or identity holds, 1 on config or
runtime errors, 2 on a violated bound/identity, 3 when an iteration fails to
converge. Diagnostics go to standard error; results go to the CSV.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import io
from .analysis import (
    RunConfig,
    affine_sweep_grid,
    bound_tightness_sweep,
    data_dependence_experiment,
    lemma_one_oracle,
    residual_error_bound_check,
    run,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigError, FixpointError, NoConvergenceError
from .operators import (
    Condition,
    Sampler,
    affine_fixed_point,
    certify_contractive_like,
    certify_osilike,
    certify_quasi_contractive,
    certify_zamfirescu,
    find_fixed_points_grid,
    uniqueness_violated,
)
from .schemes import reduction_check

log = logging.getLogger("fixpoint")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION, EXIT_NO_CONVERGENCE = 0, 1, 2, 3

SUBCOMMANDS = {
    "converge": "converge",
    "datadep": "datadep",
    "sweep": "sweep",
    "certify": "certify",
    "reduce-check": "reduce_check",
    "lemma1": "lemma1",
}


def _converge(cfg: ExperimentConfig):
    T = cfg.operator
    p = cfg.fixed_point if cfg.fixed_point is not None else affine_fixed_point(T)
    trace = run(RunConfig(cfg.scheme, T, cfg.x0, cfg.stop, cfg.record_every, norm=cfg.norm), known_p=p)
    rows = []
    for rec in trace.records:
        row = {"n": rec.n, "residual": rec.residual, "error": rec.error}
        row.update({f"x{i}": v for i, v in enumerate(rec.x.tolist())})
        rows.append(row)
    code = EXIT_OK
    if not trace.converged:
        log.error("no convergence: residual %.3e after %d steps", trace.final_residual, trace.steps)
        code = EXIT_NO_CONVERGENCE
    elif cfg.contract is not None and p is not None:
        worst = residual_error_bound_check(trace, cfg.contract.delta, p, cfg.norm)
        if worst > 0:
            log.error("residual estimate violated by %.3e", worst)
            code = EXIT_VIOLATION
    return rows, io.converge_schema(T.dimension), code


def _datadep_row(rep) -> dict:
    return {
        "epsilon_nominal": rep.epsilon_nominal, "epsilon_realized": rep.epsilon_realized, "delta": rep.delta,
        "k": rep.k, "scheme": rep.scheme, "observed": rep.observed, "bound": rep.bound,
        "theorem": rep.theorem, "satisfied": rep.satisfied, "seed": rep.seed,
    }


def _datadep(cfg: ExperimentConfig):
    pert = cfg.perturbation
    try:
        rep = data_dependence_experiment(
            cfg.operator, cfg.contract, cfg.scheme, pert["epsilon"], pert["mode"], cfg.seed, cfg.stop,
            x0=cfg.x0, norm=cfg.norm, validate=False, direction=pert["direction"],
        )
    except NoConvergenceError as exc:
        log.error("%s", exc)
        return [], io.DATADEP, EXIT_NO_CONVERGENCE
    if not rep.satisfied:
        log.error("bound violated: observed %.17g > bound %.17g", rep.observed, rep.bound)
    return [_datadep_row(rep)], io.DATADEP, EXIT_OK if rep.satisfied else EXIT_VIOLATION


def _sweep(cfg: ExperimentConfig):
    sw = cfg.sweep
    cells = affine_sweep_grid(
        sw["epsilons"], sw["deltas"], sw["ks"], sw["schemes"], sw["modes"], sw["dimension"], cfg.seed,
        sw["alpha"], sw["beta"], cfg.stop, cfg.norm,
    )
    rows, violated, stalled = [], False, False
    for row in bound_tightness_sweep(cells, workers=sw["workers"]):
        c, rep = row.cell, row.report
        out = {
            "cell": c.index, "epsilon_nominal": c.epsilon, "delta": c.params.delta, "k": c.scheme.multiplier,
            "scheme": c.scheme.scheme.value, "mode": c.mode, "seed": c.seed, "status": row.status,
            "epsilon_realized": None, "observed": None, "bound": None, "theorem": "", "satisfied": None, "ratio": None,
        }
        if rep is not None:
            out.update(_datadep_row(rep))
            out["ratio"] = rep.ratio
            violated |= not rep.satisfied
        else:
            log.warning("cell %d %s: %s", c.index, row.status, row.reason)
            stalled |= row.status == "no_convergence"
        rows.append(out)
    code = EXIT_VIOLATION if violated else EXIT_NO_CONVERGENCE if stalled else EXIT_OK
    return rows, io.SWEEP, code


def _certify(cfg: ExperimentConfig):
    T, c, cp = cfg.operator, cfg.certify, cfg.contract
    sampler = Sampler(c["samples"], cfg.seed)
    cond = Condition(c["condition"])
    if cond is Condition.ZAMFIRESCU:
        rep = certify_zamfirescu(T, cp.zamfirescu, sampler, cfg.norm)
    elif cond is Condition.QUASI_CONTRACTIVE:
        rep = certify_quasi_contractive(T, cp.delta, sampler, cfg.norm)
    elif cond is Condition.OSILIKE:
        rep = certify_osilike(T, cp.delta, cp.L, sampler, cfg.norm)
    else:
        rep = certify_contractive_like(T, cp.delta, cp.gauge, sampler, cfg.norm)
    d = T.dimension
    wx, wy = rep.witness if rep.witness is not None else (np.full(d, np.nan), np.full(d, np.nan))
    row = {"condition": rep.condition.value, "verdict": rep.verdict.value, "slack": rep.slack,
           "samples": rep.samples_used, "seed": rep.rng_seed}
    row.update({f"witness_x{i}": v for i, v in enumerate(wx.tolist())})
    row.update({f"witness_y{i}": v for i, v in enumerate(wy.tolist())})
    code = EXIT_OK if rep.holds else EXIT_VIOLATION
    if not rep.holds:
        log.error("%s falsified at x=%s, y=%s (slack %.3e)", cond.value, wx.tolist(), wy.tolist(), rep.slack)
    if c["fixed_point_resolution"]:
        fps = find_fixed_points_grid(T, c["fixed_point_resolution"], norm=cfg.norm)
        log.info("grid fixed points: %s", [p.tolist() for p in fps])
        if uniqueness_violated(rep, fps):
            log.error("certification holds but %d distinct fixed points were found", len(fps))
            code = EXIT_VIOLATION
    return [row], io.certify_schema(d), code


def _reduce(cfg: ExperimentConfig):
    r = cfg.reduce
    res = reduction_check(cfg.operator, r["x0"], r["schedules"], r["k"], r["horizon"], cfg.norm)
    row = {"k": res.k, "horizon": res.horizon, "max_deviation": res.max_deviation, "passed": res.passed,
           "seed": cfg.seed}
    if not res.passed:
        log.error("reduction identity broken: max deviation %.3e", res.max_deviation)
    return [row], io.REDUCE_CHECK, EXIT_OK if res.passed else EXIT_VIOLATION


def _lemma1(cfg: ExperimentConfig):
    inst = cfg.lemma1
    rep = lemma_one_oracle(inst)
    row = {"a0": inst.a0, "mu_family": inst.mu.family, "eta_family": inst.eta.family, "horizon": inst.horizon,
           "limsup_a": rep.limsup_a, "limsup_eta": rep.limsup_eta, "satisfied": rep.satisfied, "seed": cfg.seed}
    if not rep.satisfied:
        log.error("tail maximum of a_n %.17g exceeds that of eta_n %.17g", rep.limsup_a, rep.limsup_eta)
    return [row], io.LEMMA1, EXIT_OK if rep.satisfied else EXIT_VIOLATION


_RUNNERS = {
    "converge": _converge,
    "datadep": _datadep,
    "sweep": _sweep,
    "certify": _certify,
    "reduce_check": _reduce,
    "lemma1": _lemma1,
}


def execute(cfg: ExperimentConfig, out=None) -> int:
    """Run a parsed experiment, write its CSV and return the exit code."""
    rows, schema, code = _RUNNERS[cfg.experiment](cfg)
    io.emit_csv(rows, out or cfg.output_path, schema)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fixpoint", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="TOML experiment config")
    parser.add_argument("--out", help="CSV output path (overrides output_path)")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"{args.config}: {type(exc).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if SUBCOMMANDS[args.subcommand] != cfg.experiment:
        print(f"subcommand {args.subcommand!r} does not match experiment {cfg.experiment!r} in the config",
              file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    try:
        return execute(cfg, args.out)
    except (FixpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
