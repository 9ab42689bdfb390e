"""Convergence runs, fixed-point data-dependence experiments and the averaged-recurrence oracle."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonFiniteError, NoConvergenceError, ParamError
from .operators import ContractParams, OperatorSpec, evaluate, perturb
from .schemes import Schedule, Scheme, SchemeConfig, Theorem, step, theorem_for, validate_schedules
from .space import Norm, Point, contains, point

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
RESIDUAL_SLACK = 1e-12


@dataclass(frozen=True)
class StopRule:
    residual_tol: float = 1e-10
    error_tol: float | None = None
    max_iter: int = 100_000

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ParamError("residual_tol must be positive")
        if self.max_iter < 1:
            raise ParamError("max_iter must be at least 1")


@dataclass(frozen=True)
class RunConfig:
    scheme: SchemeConfig
    operator: OperatorSpec
    x0: Point
    stop: StopRule = field(default_factory=StopRule)
    record_every: int = 1
    record_stages: bool = False
    norm: Norm = Norm.EUCLIDEAN

    def __post_init__(self):
        if self.record_every < 1:
            raise ParamError("record_every must be at least 1")


@dataclass(frozen=True, eq=False)
class TraceRecord:
    n: int
    x: Point
    residual: float
    error: float | None = None
    stage_residuals: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class IterationTrace:
    records: tuple[TraceRecord, ...]
    terminated_by: str
    final: Point
    final_residual: float
    steps: int

    @property
    def converged(self) -> bool:
        return self.terminated_by != "max_iter"


def run(cfg: RunConfig, known_p=None) -> IterationTrace:
    """Iterate ``cfg.scheme`` from ``cfg.x0`` until a stopping rule fires.

    x_n is tested before each step: residual ``|x_n - T x_n| <= residual_tol``,
    then ``|x_n - p| <= error_tol`` when p is known, then ``n == max_iter``.
    Steps are recorded every ``record_every`` iterations, and the terminating
    step always is.
    """
    T, norm, stop = cfg.operator, Norm(cfg.norm), cfg.stop
    x = point(cfg.x0)
    if not contains(x, T.domain):
        raise DomainError(f"start point {x.tolist()} is outside the domain")
    p = None if known_p is None else point(known_p)
    records: list[TraceRecord] = []
    n = 0
    while True:
        r = norm(x - evaluate(T, x))
        err = None if p is None else norm(x - p)
        if r <= stop.residual_tol:
            reason = "residual"
        elif err is not None and stop.error_tol is not None and err <= stop.error_tol:
            reason = "error"
        elif n >= stop.max_iter:
            reason = "max_iter"
        else:
            reason = None
        if reason is not None:
            records.append(TraceRecord(n, x, r, err))
            return IterationTrace(tuple(records), reason, x, r, n)
        st = step(T, x, n, cfg.scheme)
        if n % cfg.record_every == 0:
            stages = ()
            if cfg.record_stages:
                stages = tuple(norm(y - evaluate(T, y)) for y in st.auxiliaries)
            records.append(TraceRecord(n, x, r, err, stages))
        if not np.all(np.isfinite(st.x)):
            raise NonFiniteError(f"iterate {n + 1} is not finite: {st.x.tolist()}")
        x = st.x
        n += 1


def residual_error_bound_check(trace: IterationTrace, delta: float, p, norm=Norm.EUCLIDEAN) -> float:
    """Largest value of ``residual - (1 + delta) |x_n - p| - 1e-12`` over the recorded steps.

    Stage residuals, when recorded, are held to the same bound. A result
    ``<= 0`` means the estimate holds at every recorded step.
    """
    norm = Norm(norm)
    p = point(p)
    worst = -np.inf
    for rec in trace.records:
        rhs = (1 + delta) * norm(rec.x - p) + RESIDUAL_SLACK
        for r in (rec.residual,) + rec.stage_residuals:
            worst = max(worst, r - rhs)
    return float(worst)


# -- data dependence ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DataDepReport:
    epsilon_nominal: float
    epsilon_realized: float
    delta: float
    k: int
    scheme: str
    p: Point
    q: Point
    observed: float
    bound: float
    theorem: str
    satisfied: bool
    seed: int
    residual_p: float = 0.0
    residual_q: float = 0.0
    mode: str = "constant_shift"

    @property
    def ratio(self) -> float:
        return self.observed / self.bound if self.bound > 0 else (0.0 if self.observed == 0 else np.inf)


def picard_polish(T: OperatorSpec, x, norm=Norm.EUCLIDEAN, max_steps: int = 10_000) -> Point:
    """Apply T while it strictly lowers the residual."""
    norm = Norm(norm)
    tx = evaluate(T, x)
    r = norm(x - tx)
    for _ in range(max_steps):
        if r == 0:
            break
        ty = evaluate(T, tx)
        ry = norm(tx - ty)
        if ry >= r:
            break
        x, tx, r = tx, ty, ry
    return x


def _solve(T, scheme, x0, stop, norm, polish):
    trace = run(RunConfig(scheme, T, x0, stop, record_every=stop.max_iter + 1, norm=norm))
    x = trace.final
    if polish:
        x = picard_polish(T, x, norm)
    return trace, x, norm(x - evaluate(T, x))


def data_dependence_experiment(
    T: OperatorSpec,
    params: ContractParams,
    scheme: SchemeConfig,
    epsilon: float,
    mode: str = "constant_shift",
    seed: int = 0,
    stop: StopRule = StopRule(),
    x0=None,
    norm=Norm.EUCLIDEAN,
    validate: bool = True,
    direction=None,
) -> DataDepReport:
    """Compare the fixed points of T and of a seeded epsilon-perturbation of T.

    Both fixed points are found by running ``scheme`` from the same start
    (the domain centre unless ``x0`` is given) and, when the declared gauge is
    zero, polished by plain iteration. The bound is
    ``multiplier * epsilon_realized / (1 - delta)`` with multiplier k for the
    multistep scheme and 3 for the S-iteration.

    Raises NoConvergenceError if either fixed point fails to reach
    ``10 * residual_tol``; no verdict is issued in that case.
    """
    norm = Norm(norm)
    datadep_thm = theorem_for(scheme.scheme, datadep=True)
    if datadep_thm is None:
        raise ParamError(f"no data-dependence bound is available for {scheme.scheme.value}")
    if validate:
        rep = validate_schedules(scheme, datadep_thm)
        if not rep.ok:
            raise ParamError("; ".join(f.message for f in rep.failures))
    Tt = perturb(T, epsilon, mode, seed=seed, norm=norm, direction=direction)
    x0 = T.domain.center if x0 is None else point(x0)
    polish = params.gauge.form == "zero"
    tr_p, p, res_p = _solve(T, scheme, x0, stop, norm, polish)
    tr_q, q, res_q = _solve(Tt, scheme, x0, stop, norm, polish)
    limit = 10 * stop.residual_tol
    if res_p > limit or res_q > limit:
        raise NoConvergenceError(
            f"fixed-point solve did not converge (residual p={res_p:.3e}, q={res_q:.3e}, limit {limit:.1e})",
            traces=(tr_p, tr_q),
        )
    eps_hat = Tt.epsilon_realized
    mult = scheme.multiplier
    bound = mult * eps_hat / (1 - params.delta)
    observed = norm(p - q)
    return DataDepReport(
        epsilon_nominal=float(epsilon),
        epsilon_realized=eps_hat,
        delta=params.delta,
        k=mult,
        scheme=scheme.scheme.value,
        p=p,
        q=q,
        observed=observed,
        bound=bound,
        theorem="t2" if datadep_thm is Theorem.T2_DATADEP else "t4",
        satisfied=bool(observed <= bound + BOUND_SLACK),
        seed=seed,
        residual_p=res_p,
        residual_q=res_q,
        mode=mode,
    )


@dataclass(frozen=True, eq=False)
class SweepCell:
    index: int
    operator: OperatorSpec
    params: ContractParams
    scheme: SchemeConfig
    epsilon: float
    mode: str
    seed: int
    stop: StopRule = field(default_factory=StopRule)
    norm: Norm = Norm.EUCLIDEAN


@dataclass(frozen=True, eq=False)
class SweepRow:
    cell: SweepCell
    status: str  # ok | skipped | no_convergence
    report: DataDepReport | None = None
    reason: str = ""

    @property
    def ratio(self) -> float | None:
        return None if self.report is None else self.report.ratio


def run_cell(cell: SweepCell) -> SweepRow:
    thm = theorem_for(cell.scheme.scheme, datadep=True)
    if thm is None:
        return SweepRow(cell, "skipped", reason=f"no data-dependence bound for {cell.scheme.scheme.value}")
    rep = validate_schedules(cell.scheme, thm)
    if not rep.ok:
        return SweepRow(cell, "skipped", reason="; ".join(f.message for f in rep.failures))
    try:
        report = data_dependence_experiment(
            cell.operator, cell.params, cell.scheme, cell.epsilon, cell.mode, cell.seed, cell.stop,
            norm=cell.norm, validate=False,
        )
    except NoConvergenceError as exc:
        return SweepRow(cell, "no_convergence", reason=str(exc))
    return SweepRow(cell, "ok", report)


def bound_tightness_sweep(cells, workers: int = 1) -> list[SweepRow]:
    """Run every cell; rows come back in grid order whatever the worker count."""
    cells = list(cells)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(c) for c in cells]


def multistep_config(k: int, alpha: Schedule, beta: Schedule) -> SchemeConfig:
    """New multistep scheme of order k with every beta stage on the same schedule."""
    sch = {"alpha": alpha}
    sch.update({f"beta{i}": beta for i in range(1, k)})
    return SchemeConfig(Scheme.NEW_MULTISTEP, sch, k=k)


def affine_sweep_grid(
    epsilons,
    deltas,
    ks=(2, 3, 5),
    schemes=("new_multistep",),
    modes=("constant_shift",),
    dim: int = 1,
    seed: int = 0,
    alpha: Schedule = Schedule.constant(0.6),
    beta: Schedule = Schedule.constant(0.3),
    stop: StopRule = StopRule(),
    norm=Norm.EUCLIDEAN,
) -> list[SweepCell]:
    """Cells over eps x delta x k x scheme x mode on seeded affine contractions.

    One operator per delta (Lipschitz constant exactly delta, declared with a
    zero gauge). The S-iteration has no order, so it contributes one cell per
    (eps, delta, mode) and ignores ``ks``.
    """
    from .operators import random_affine_contraction

    cells: list[SweepCell] = []
    for di, delta in enumerate(deltas):
        T = random_affine_contraction(delta, dim, seed=seed + di, norm=norm)
        params = ContractParams(float(delta))
        for eps in epsilons:
            for name in schemes:
                configs = (
                    [multistep_config(k, alpha, beta) for k in ks]
                    if Scheme(name) in (Scheme.NEW_MULTISTEP, Scheme.RS_MULTISTEP)
                    else [SchemeConfig(Scheme(name), {"alpha": alpha, "beta": beta}
                                       if Scheme(name) is not Scheme.SP
                                       else {"alpha": alpha, "beta": beta, "gamma": beta})]
                )
                for cfg in configs:
                    for mode in modes:
                        cells.append(SweepCell(len(cells), T, params, cfg, float(eps), mode, seed, stop, Norm(norm)))
    return cells


# -- averaged recurrence oracle ---------------------------------------------


@dataclass(frozen=True)
class LemmaOneInstance:
    """Data of the averaged recurrence a_{n+1} = (1 - mu_n) a_n + mu_n eta_n."""

    a0: float
    mu: Schedule
    eta: Schedule
    horizon: int = 10_000

    def __post_init__(self):
        if not self.a0 >= 0:
            raise ParamError("a0 must be nonnegative")
        if self.horizon < 2:
            raise ParamError("horizon must be at least 2")
        if not self.mu.sum_diverges():
            raise ParamError("mu must have a divergent series")


@dataclass(frozen=True)
class LemmaOneReport:
    limsup_a: float
    limsup_eta: float
    satisfied: bool
    tail_start: int


def lemma_one_sequences(inst: LemmaOneInstance) -> tuple[np.ndarray, np.ndarray]:
    """``a_0..a_horizon`` of the equality recurrence and ``eta_0..eta_horizon``."""
    h = inst.horizon
    mu = np.array([inst.mu(n) for n in range(h + 1)])
    eta = np.array([inst.eta(n) for n in range(h + 1)])
    if np.any(mu <= 0) or np.any(mu >= 1):
        bad = int(np.flatnonzero((mu <= 0) | (mu >= 1))[0])
        raise ParamError(f"mu[n] must lie in (0, 1); got {mu[bad]} at n={bad}")
    if np.any(eta < 0):
        raise ParamError("eta must be nonnegative")
    a = np.empty(h + 1)
    a[0] = inst.a0
    for n in range(h):
        a[n + 1] = (1 - mu[n]) * a[n] + mu[n] * eta[n]
    return a, eta


def lemma_one_oracle(inst: LemmaOneInstance) -> LemmaOneReport:
    """Estimate both limsups as maxima over the second half of the horizon."""
    a, eta = lemma_one_sequences(inst)
    start = inst.horizon // 2
    la, le = float(np.max(a[start:])), float(np.max(eta[start:]))
    return LemmaOneReport(la, le, la <= le + BOUND_SLACK, start)
