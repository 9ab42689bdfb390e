"""One-step maps of the five iteration processes and their parameter schedules.

Every stage is a convex combination ``u + w * (v - u)`` of a point and its
image (or of two images), evaluated innermost stage first. The five schemes
are written out independently so that the reductions between them can be
checked against each other rather than holding by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParamError
from .operators import OperatorSpec, evaluate
from .space import Norm, Point, point

REDUCTION_TOL = 1e-12


class Scheme(str, enum.Enum):
    NEW_MULTISTEP = "new_multistep"
    RS_MULTISTEP = "rs_multistep"
    S_ITERATION = "s_iteration"
    THIANWAN = "thianwan"
    SP = "sp"


class Theorem(str, enum.Enum):
    T1_CONVERGENCE = "t1_convergence"
    T2_DATADEP = "t2_datadep"
    T3_CONVERGENCE = "t3_convergence"
    T4_DATADEP = "t4_datadep"


@dataclass(frozen=True)
class Schedule:
    """Deterministic real sequence indexed from n = 0.

    ``constant``: c.  ``harmonic``: c / (n + 1).  ``power``: c / (n + 1) ** p.
    ``table``: ``values[n]``, with the last entry repeated past the end.
    """

    family: str = "constant"
    c: float = 0.0
    p: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in ("constant", "harmonic", "power", "table"):
            raise ParamError(f"unknown schedule family {self.family!r}")
        if self.family == "table":
            if not self.values:
                raise ParamError("table schedule needs at least one value")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not np.isfinite(self.c) or not np.isfinite(self.p):
            raise ParamError("schedule parameters must be finite")

    @classmethod
    def constant(cls, c: float) -> "Schedule":
        return cls("constant", float(c))

    @classmethod
    def harmonic(cls, c: float) -> "Schedule":
        return cls("harmonic", float(c))

    @classmethod
    def power(cls, c: float, p: float) -> "Schedule":
        return cls("power", float(c), float(p))

    @classmethod
    def table(cls, values) -> "Schedule":
        return cls("table", values=tuple(values))

    def __call__(self, n: int) -> float:
        if self.family == "constant":
            return self.c
        if self.family == "harmonic":
            return self.c / (n + 1)
        if self.family == "power":
            return self.c / (n + 1) ** self.p
        return self.values[min(n, len(self.values) - 1)]

    def sum_diverges(self) -> bool:
        """Whether the series of this schedule diverges, decided from the family alone."""
        if self.family == "table":
            return self.values[-1] > 0
        if self.family == "power":
            return self.c > 0 and self.p <= 1
        return self.c > 0


def beta_role(i: int) -> str:
    return f"beta{i}"


def required_roles(scheme: Scheme, k: int) -> tuple[str, ...]:
    scheme = Scheme(scheme)
    if scheme in (Scheme.NEW_MULTISTEP, Scheme.RS_MULTISTEP):
        return ("alpha",) + tuple(beta_role(i) for i in range(1, k))
    if scheme is Scheme.SP:
        return ("alpha", "beta", "gamma")
    return ("alpha", "beta")


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    schedules: dict = field(default_factory=dict)
    k: int = 2

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.k < 2:
            raise ParamError(f"multistep order k must be at least 2, got {self.k}")
        need = set(required_roles(self.scheme, self.k))
        have = set(self.schedules)
        if need != have:
            missing, extra = sorted(need - have), sorted(have - need)
            raise ParamError(f"{self.scheme.value} with k={self.k}: missing schedules {missing}, unexpected {extra}")

    @property
    def multiplier(self) -> int:
        """Factor in front of epsilon in the data-dependence bound for this scheme."""
        return self.k if self.scheme is Scheme.NEW_MULTISTEP else 3

    def weight(self, role: str, n: int) -> float:
        w = self.schedules[role](n)
        if not 0 <= w < 1:
            raise DomainError(f"schedule {role} left [0, 1) at n={n}: {w}")
        return w


@dataclass(frozen=True, eq=False)
class StepState:
    """``x`` is x_{n+1}; ``auxiliaries`` are the stage points of step n.

    Multistep schemes store y^1, ..., y^{k-1} in that order; SP stores (y, z);
    S-iteration and Thianwan store (y,).
    """

    x: Point
    n: int
    auxiliaries: tuple[Point, ...]


def _combine(u: np.ndarray, v: np.ndarray, w: float, T: OperatorSpec) -> Point:
    # Projection only absorbs rounding at the box faces; interior sums are untouched.
    out = np.minimum(np.maximum(u + w * (v - u), T.domain.lower), T.domain.upper)
    out.flags.writeable = False
    return out


def step_new_multistep(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    k = cfg.k
    ys = [None] * k
    y = x_n
    for i in range(k - 1, 0, -1):
        y = _combine(y, evaluate(T, y), cfg.weight(beta_role(i), n), T)
        ys[i] = y
    x_next = _combine(y, evaluate(T, y), cfg.weight("alpha", n), T)
    return StepState(x_next, n + 1, tuple(ys[1:]))


def step_rs_multistep(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    """Every stage mixes x_n itself with the image of the previous stage."""
    k = cfg.k
    ys = [None] * k
    ys[k - 1] = _combine(x_n, evaluate(T, x_n), cfg.weight(beta_role(k - 1), n), T)
    for i in range(k - 2, 0, -1):
        ys[i] = _combine(x_n, evaluate(T, ys[i + 1]), cfg.weight(beta_role(i), n), T)
    x_next = _combine(x_n, evaluate(T, ys[1]), cfg.weight("alpha", n), T)
    return StepState(x_next, n + 1, tuple(ys[1:]))


def step_s_iteration(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    tx = evaluate(T, x_n)
    y = _combine(x_n, tx, cfg.weight("beta", n), T)
    x_next = _combine(tx, evaluate(T, y), cfg.weight("alpha", n), T)
    return StepState(x_next, n + 1, (y,))


def step_thianwan(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    y = _combine(x_n, evaluate(T, x_n), cfg.weight("beta", n), T)
    x_next = _combine(y, evaluate(T, y), cfg.weight("alpha", n), T)
    return StepState(x_next, n + 1, (y,))


def step_sp(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    z = _combine(x_n, evaluate(T, x_n), cfg.weight("gamma", n), T)
    y = _combine(z, evaluate(T, z), cfg.weight("beta", n), T)
    x_next = _combine(y, evaluate(T, y), cfg.weight("alpha", n), T)
    return StepState(x_next, n + 1, (y, z))


_STEPS = {
    Scheme.NEW_MULTISTEP: step_new_multistep,
    Scheme.RS_MULTISTEP: step_rs_multistep,
    Scheme.S_ITERATION: step_s_iteration,
    Scheme.THIANWAN: step_thianwan,
    Scheme.SP: step_sp,
}


def step(T: OperatorSpec, x_n, n: int, cfg: SchemeConfig) -> StepState:
    return _STEPS[cfg.scheme](T, x_n, n, cfg)


def orbit(T: OperatorSpec, x0, cfg: SchemeConfig, steps: int) -> np.ndarray:
    """Iterates x_0, ..., x_steps stacked into a ``(steps + 1, d)`` array."""
    x = point(x0)
    out = [x]
    for n in range(steps):
        x = step(T, x, n, cfg).x
        out.append(x)
    return np.array(out)


# -- schedule validation -----------------------------------------------------


@dataclass(frozen=True)
class ScheduleFailure:
    rule: str
    role: str
    n: int | None
    message: str


@dataclass(frozen=True)
class ScheduleReport:
    theorem: Theorem
    failures: tuple[ScheduleFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def first_violation(self) -> int | None:
        ns = [f.n for f in self.failures if f.n is not None]
        return min(ns) if ns else None


_THEOREM_SCHEME = {
    Theorem.T1_CONVERGENCE: Scheme.NEW_MULTISTEP,
    Theorem.T2_DATADEP: Scheme.NEW_MULTISTEP,
    Theorem.T3_CONVERGENCE: Scheme.S_ITERATION,
    Theorem.T4_DATADEP: Scheme.S_ITERATION,
}


def theorem_for(scheme: Scheme, datadep: bool) -> Theorem | None:
    """The convergence or data-dependence result covering ``scheme``, if any."""
    for thm, sch in _THEOREM_SCHEME.items():
        if sch is Scheme(scheme) and (thm in (Theorem.T2_DATADEP, Theorem.T4_DATADEP)) == datadep:
            return thm
    return None


def validate_schedules(cfg: SchemeConfig, theorem: Theorem, horizon: int = 1000) -> ScheduleReport:
    """Check the schedule hypotheses of ``theorem`` on n = 0..horizon.

    Membership in [0, 1) and the extra order conditions are checked pointwise
    and report the first failing n per role; divergence of the alpha series is
    decided from the schedule family.
    """
    theorem = Theorem(theorem)
    if horizon < 1:
        raise ParamError("horizon must be at least 1")
    fails: list[ScheduleFailure] = []
    t = theorem.value
    if cfg.scheme is not _THEOREM_SCHEME[theorem]:
        fails.append(ScheduleFailure(
            "scheme", "", None,
            f"{t} applies to {_THEOREM_SCHEME[theorem].value}, not {cfg.scheme.value}"))
    ns = range(horizon + 1)
    vals = {role: [s(n) for n in ns] for role, s in cfg.schedules.items()}

    def first(role, bad, rule, msg):
        for n, v in enumerate(vals[role]):
            if bad(n, v):
                fails.append(ScheduleFailure(rule, role, n, f"{t}: {msg.format(role=role, n=n, v=v)}"))
                return

    for role in cfg.schedules:
        first(role, lambda n, v: not 0 <= v < 1, "unit_interval", "{role}[n] must lie in [0, 1); got {v} at n={n}")
    if not cfg.schedules["alpha"].sum_diverges():
        fails.append(ScheduleFailure("divergence", "alpha", None, f"{t}: requires sum of alpha[n] = infinity"))
    alpha = vals["alpha"]
    if theorem is Theorem.T2_DATADEP:
        first("alpha", lambda n, v: v <= 0, "positive_alpha",
              "requires alpha[n] > 0 so that alpha[n](1 - delta) lies in (0, 1); got {v} at n={n}")
        for role in cfg.schedules:
            if role.startswith("beta"):
                first(role, lambda n, v: not v < alpha[n], "beta_below_alpha",
                      "requires {role}[n] < alpha[n] (strict); got {v} at n={n}")
    if theorem is Theorem.T4_DATADEP:
        first("alpha", lambda n, v: v < 0.5, "alpha_at_least_half", "requires alpha[n] >= 1/2; got {v} at n={n}")
    return ScheduleReport(theorem, tuple(fails))


# -- reduction identities ----------------------------------------------------


@dataclass(frozen=True)
class ReductionResult:
    k: int
    horizon: int
    max_deviation: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= REDUCTION_TOL


def reduction_pair(schedules: dict, k: int) -> tuple[SchemeConfig, SchemeConfig]:
    """Multistep config of order k and the named two/three-step scheme it should equal.

    k = 2 pairs with Thianwan (beta := beta1); k = 3 pairs with SP
    (beta := beta1, gamma := beta2).
    """
    if k == 2:
        multi = SchemeConfig(Scheme.NEW_MULTISTEP, {"alpha": schedules["alpha"], "beta1": schedules["beta1"]}, k=2)
        named = SchemeConfig(Scheme.THIANWAN, {"alpha": schedules["alpha"], "beta": schedules["beta1"]})
    elif k == 3:
        multi = SchemeConfig(
            Scheme.NEW_MULTISTEP,
            {"alpha": schedules["alpha"], "beta1": schedules["beta1"], "beta2": schedules["beta2"]},
            k=3,
        )
        named = SchemeConfig(
            Scheme.SP, {"alpha": schedules["alpha"], "beta": schedules["beta1"], "gamma": schedules["beta2"]}
        )
    else:
        raise ParamError(f"reduction identities exist for k = 2 and k = 3 only, got k={k}")
    return multi, named


def reduction_check(T: OperatorSpec, x0, schedules: dict, k: int, horizon: int, norm=Norm.EUCLIDEAN) -> ReductionResult:
    """Largest gap between the multistep orbit and its named counterpart over ``horizon`` steps."""
    multi, named = reduction_pair(schedules, k)
    a = orbit(T, x0, multi, horizon)
    b = orbit(T, x0, named, horizon)
    return ReductionResult(k, horizon, float(np.max(Norm(norm)(a - b))))
