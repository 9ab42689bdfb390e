"""Strict TOML experiment configs.

``parse_config`` collects every problem it finds before raising: schema
problems (unknown or missing keys, wrong types) raise ParseError, violated
cross-field constraints raise ValidationError. Defaults are filled into
``ExperimentConfig.raw`` so that ``dump_config`` writes an exhaustive config.

Layout, by section (which sections are required depends on ``experiment``)::

    version = 1
    experiment = "datadep"    # converge | datadep | sweep | certify | reduce_check | lemma1
    seed = 0
    output_path = "out.csv"
    norm = "euclidean"

    [domain]        lower, upper
    [operator]      family + family keys (matrix/offset, pieces, coefficients, nodes/values)
    [scheme]        name, k, [scheme.schedules] role = {family, c, p, values}
    [run]           x0, residual_tol, error_tol, max_iter, record_every, theorem, fixed_point
    [contract]      delta, gauge = {form, L, p}, L, zamfirescu
    [perturbation]  epsilon, mode, direction
    [certify]       condition, samples, fixed_point_resolution
    [reduce]        k, horizon, x0, [reduce.schedules] alpha, beta1, beta2
    [lemma1]        a0, horizon, mu = {...}, eta = {...}
    [sweep]         epsilons, deltas, ks, schemes, modes, dimension, workers, [sweep.schedules] alpha, beta
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .analysis import LemmaOneInstance, StopRule
from .errors import FixpointError, ParseError, ValidationError
from .schemes import Schedule, Scheme, SchemeConfig, Theorem, required_roles, theorem_for, validate_schedules
from .space import BoxDomain, Norm, contains, point

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

EXPERIMENTS = ("converge", "datadep", "sweep", "certify", "reduce_check", "lemma1")

_SECTIONS = {
    "converge": ({"domain", "operator", "scheme", "run"}, {"contract"}),
    "datadep": ({"domain", "operator", "scheme", "contract", "perturbation"}, {"run"}),
    "sweep": ({"sweep"}, {"run"}),
    "certify": ({"domain", "operator", "contract", "certify"}, set()),
    "reduce_check": ({"domain", "operator", "reduce"}, set()),
    "lemma1": ({"lemma1"}, set()),
}

_THEOREM_ALIASES = {t.value.split("_")[0]: t for t in Theorem} | {t.value: t for t in Theorem}

_MISSING = object()


class _Reader:
    """Pulls typed keys out of one TOML table, recording errors under a dotted path."""

    def __init__(self, table, path: str, errors: list[str], out: dict):
        self.table = table if isinstance(table, dict) else {}
        self.path = path
        self.errors = errors
        self.out = out
        self.seen: set[str] = set()
        if not isinstance(table, dict):
            errors.append(f"{path}: expected a table")

    def _where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=_MISSING, check=None, msg=""):
        self.seen.add(key)
        if key not in self.table:
            if default is _MISSING:
                self.errors.append(f"{self._where(key)}: required key is missing")
                return None
            if default is not None:
                self.out[key] = default
            return default
        v = self.table[key]
        ok = _TYPES[kind](v)
        if not ok:
            self.errors.append(f"{self._where(key)}: expected {kind}, got {type(v).__name__} {v!r}")
            return None
        if kind == "float":
            v = float(v)
        elif kind == "floats":
            v = [float(x) for x in v]
        elif kind == "matrix":
            v = [[float(x) for x in row] for row in v]
        if check is not None and not check(v):
            self.errors.append(f"{self._where(key)}: {msg} (got {v!r})")
            return None
        self.out[key] = v
        return v

    def sub(self, key, required=True):
        self.seen.add(key)
        if key not in self.table:
            if required:
                self.errors.append(f"{self._where(key)}: required table is missing")
            return None
        self.out[key] = {}
        return _Reader(self.table[key], self._where(key), self.errors, self.out[key])

    def close(self):
        for key in sorted(set(self.table) - self.seen):
            self.errors.append(f"{self._where(key)}: unknown key")


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


_TYPES = {
    "float": _is_num,
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "floats": lambda v: isinstance(v, list) and all(_is_num(x) for x in v),
    "ints": lambda v: isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v),
    "strs": lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
    "matrix": lambda v: isinstance(v, list) and all(isinstance(r, list) and all(_is_num(x) for x in r) for r in v),
}


@dataclass
class ExperimentConfig:
    version: int
    experiment: str
    seed: int
    output_path: str
    norm: Norm = Norm.EUCLIDEAN
    domain: BoxDomain | None = None
    operator: ops.OperatorSpec | None = None
    scheme: SchemeConfig | None = None
    x0: np.ndarray | None = None
    stop: StopRule = field(default_factory=StopRule)
    record_every: int = 1
    theorem: Theorem | None = None
    fixed_point: np.ndarray | None = None
    contract: ops.ContractParams | None = None
    perturbation: dict = field(default_factory=dict)
    certify: dict = field(default_factory=dict)
    reduce: dict = field(default_factory=dict)
    lemma1: LemmaOneInstance | None = None
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _schedule(r: _Reader | None) -> Schedule | None:
    if r is None:
        return None
    fam = r.get("family", "str", check=lambda f: f in ("constant", "harmonic", "power", "table"),
                msg="family must be constant, harmonic, power or table")
    if fam == "table":
        vals = r.get("values", "floats", check=bool, msg="table needs at least one value")
        r.close()
        return Schedule.table(vals) if vals else None
    c = r.get("c", "float")
    p = r.get("p", "float", default=1.0) if fam == "power" else None
    r.close()
    if fam is None or c is None:
        return None
    return Schedule(fam, c, 1.0 if p is None else p)


def _schedules(r: _Reader, roles) -> dict | None:
    out = {}
    for role in roles:
        out[role] = _schedule(r.sub(role))
    r.close()
    return out if all(v is not None for v in out.values()) else None


def _domain(r: _Reader, errors):
    lo = r.get("lower", "floats", check=bool, msg="needs at least one coordinate")
    hi = r.get("upper", "floats", check=bool, msg="needs at least one coordinate")
    r.close()
    if lo is None or hi is None:
        return None
    try:
        return BoxDomain(lo, hi)
    except FixpointError as exc:
        errors.append(f"domain: {exc}")
        return None


def _operator(r: _Reader, domain, errors):
    fam = r.get("family", "str", check=lambda f: f in [x.value for x in ops.Family],
                msg=f"family must be one of {[x.value for x in ops.Family]}")
    built = None
    try:
        if fam == "affine":
            A, b = r.get("matrix", "matrix"), r.get("offset", "floats")
            if domain is not None and A is not None and b is not None:
                built = lambda: ops.affine(A, b, domain)
        elif fam == "piecewise_constant_1d":
            pieces = r.get("pieces", "matrix", check=lambda v: v and all(len(x) == 2 for x in v),
                           msg="pieces must be a list of [threshold, value] pairs")
            if domain is not None and pieces:
                built = lambda: ops.piecewise_constant([tuple(x) for x in pieces], domain)
        elif fam == "polynomial_1d_clamped":
            coeffs = r.get("coefficients", "floats")
            if domain is not None and coeffs is not None:
                built = lambda: ops.polynomial(coeffs, domain)
        elif fam == "custom_table":
            nodes, vals = r.get("nodes", "floats"), r.get("values", "floats")
            if domain is not None and nodes is not None and vals is not None:
                built = lambda: ops.table(nodes, vals, domain)
    finally:
        r.close()
    if built is None:
        return None
    try:
        return built()
    except FixpointError as exc:
        errors.append(f"operator: {exc}")
        return None


def _contract(r: _Reader, errors):
    delta = r.get("delta", "float")
    g = r.sub("gauge", required=False)
    gauge = ops.Gauge.zero()
    if g is None:
        r.out["gauge"] = {"form": "zero"}
    if g is not None:
        form = g.get("form", "str", check=lambda f: f in ("zero", "linear", "power"),
                     msg="form must be zero, linear or power")
        L = g.get("L", "float", default=None if form == "zero" else _MISSING) if form else None
        p = g.get("p", "float", default=1.0) if form == "power" else None
        g.close()
        try:
            gauge = ops.Gauge(form or "zero", L or 0.0, p or 1.0)
        except FixpointError as exc:
            errors.append(f"contract.gauge: {exc}")
    L = r.get("L", "float", default=0.0)
    z = r.get("zamfirescu", "floats", default=None, check=lambda v: len(v) == 3, msg="needs three numbers a, b, c")
    r.close()
    if delta is None:
        return None
    try:
        return ops.ContractParams(delta, gauge, L, None if z is None else tuple(z))
    except FixpointError as exc:
        errors.append(f"contract: {exc}")
        return None


def _scheme(r: _Reader, errors):
    name = r.get("name", "str", check=lambda s: s in [x.value for x in Scheme],
                 msg=f"name must be one of {[x.value for x in Scheme]}")
    k = r.get("k", "int", default=2, check=lambda k: k >= 2, msg="k must be at least 2")
    sr = r.sub("schedules")
    r.close()
    if name is None or k is None or sr is None:
        if sr is not None:
            sr.seen.update(sr.table)
        return None
    roles = required_roles(Scheme(name), k)
    scheds = _schedules(sr, roles)
    if scheds is None:
        return None
    return SchemeConfig(Scheme(name), scheds, k=k)


def _theorem(v):
    return v in _THEOREM_ALIASES


def _run(r: _Reader | None, raw: dict, dim):
    if r is None:
        r = _Reader({}, "run", [], raw.setdefault("run", {}))
    x0 = r.get("x0", "floats", default=None)
    res_tol = r.get("residual_tol", "float", default=1e-10, check=lambda v: v > 0, msg="must be positive")
    err_tol = r.get("error_tol", "float", default=None, check=lambda v: v > 0, msg="must be positive")
    max_iter = r.get("max_iter", "int", default=100_000, check=lambda v: v >= 1, msg="must be at least 1")
    every = r.get("record_every", "int", default=1, check=lambda v: v >= 1, msg="must be at least 1")
    thm = r.get("theorem", "str", default=None, check=_theorem,
                msg=f"theorem must be one of {sorted(_THEOREM_ALIASES)}")
    fp = r.get("fixed_point", "floats", default=None)
    r.close()
    stop = StopRule(res_tol or 1e-10, err_tol, max_iter or 100_000)
    return x0, stop, every or 1, None if thm is None else _THEOREM_ALIASES[thm], fp


def _point_field(name, v, domain, errors, inside=True):
    if v is None or domain is None:
        return None
    if len(v) != domain.dimension:
        errors.append(f"{name}: dimension {len(v)} does not match the domain dimension {domain.dimension}")
        return None
    try:
        x = point(v)
    except FixpointError as exc:
        errors.append(f"{name}: {exc}")
        return None
    if inside and not contains(x, domain):
        errors.append(f"{name}: {v} lies outside the domain")
        return None
    return x


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a TOML experiment config."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError([f"TOML syntax error: {exc}"]) from exc
    errors: list[str] = []
    raw: dict = {}
    top = _Reader(doc, "", errors, raw)
    version = top.get("version", "int", check=lambda v: v == 1, msg="only version 1 is supported")
    experiment = top.get("experiment", "str", check=lambda v: v in EXPERIMENTS, msg=f"must be one of {EXPERIMENTS}")
    seed = top.get("seed", "int", default=0)
    output_path = top.get("output_path", "str", default=f"{experiment or 'result'}.csv")
    norm = top.get("norm", "str", default="euclidean", check=lambda v: v in [n.value for n in Norm],
                   msg="norm must be euclidean, max or one")
    if experiment is None:
        top.seen.update(doc)
        raise ParseError(errors)
    required, optional = _SECTIONS[experiment]
    for key in sorted(set(doc) - top.seen):
        if isinstance(doc[key], dict) and key not in required | optional:
            errors.append(f"{key}: section is not used by experiment {experiment!r}")
            top.seen.add(key)
    cfg = ExperimentConfig(version, experiment, seed or 0, output_path, Norm(norm or "euclidean"), raw=raw)
    verr: list[str] = []  # cross-field problems, reported only when the schema is clean

    def sub(name):
        return top.sub(name, required=name in required) if name in required | optional else None

    if (r := sub("domain")) is not None:
        cfg.domain = _domain(r, verr)
    if (r := sub("operator")) is not None:
        cfg.operator = _operator(r, cfg.domain, verr)
    if (r := sub("scheme")) is not None:
        try:
            cfg.scheme = _scheme(r, errors)
        except FixpointError as exc:
            verr.append(f"scheme: {exc}")
    if (r := sub("contract")) is not None:
        cfg.contract = _contract(r, verr)
    if "run" in required | optional:
        r = top.sub("run", required="run" in required)
        x0, cfg.stop, cfg.record_every, cfg.theorem, fp = _run(r, raw, None)
        cfg.x0 = _point_field("run.x0", x0, cfg.domain, verr)
        cfg.fixed_point = _point_field("run.fixed_point", fp, cfg.domain, verr, inside=False)
        if cfg.x0 is None and x0 is None and cfg.domain is not None:
            cfg.x0 = cfg.domain.center
    if (r := sub("perturbation")) is not None:
        eps = r.get("epsilon", "float", check=lambda v: v >= 0, msg="epsilon must be nonnegative")
        mode = r.get("mode", "str", default="constant_shift", check=lambda v: v in ("constant_shift", "smooth_field"),
                     msg="mode must be constant_shift or smooth_field")
        direction = r.get("direction", "floats", default=None)
        r.close()
        cfg.perturbation = {"epsilon": eps, "mode": mode, "direction": direction}
    if (r := sub("certify")) is not None:
        cond = r.get("condition", "str", check=lambda v: v in [c.value for c in ops.Condition],
                     msg=f"condition must be one of {[c.value for c in ops.Condition]}")
        samples = r.get("samples", "int", default=10_000, check=lambda v: v >= 1, msg="must be at least 1")
        res = r.get("fixed_point_resolution", "int", default=None, check=lambda v: v >= 2, msg="must be at least 2")
        r.close()
        cfg.certify = {"condition": cond, "samples": samples, "fixed_point_resolution": res}
    if (r := sub("reduce")) is not None:
        k = r.get("k", "int", check=lambda v: v in (2, 3), msg="reduction identities exist for k = 2 and 3 only")
        horizon = r.get("horizon", "int", default=200, check=lambda v: v >= 1, msg="must be at least 1")
        x0 = r.get("x0", "floats", default=None)
        sr = r.sub("schedules")
        r.close()
        scheds = None
        if sr is not None and k is not None:
            scheds = _schedules(sr, ("alpha",) + tuple(f"beta{i}" for i in range(1, k)))
        elif sr is not None:
            sr.seen.update(sr.table)
        x = _point_field("reduce.x0", x0, cfg.domain, verr)
        if x is None and x0 is None and cfg.domain is not None:
            x = cfg.domain.center
        cfg.reduce = {"k": k, "horizon": horizon, "x0": x, "schedules": scheds}
    if (r := sub("lemma1")) is not None:
        a0 = r.get("a0", "float", check=lambda v: v >= 0, msg="a0 must be nonnegative")
        horizon = r.get("horizon", "int", default=10_000, check=lambda v: v >= 2, msg="must be at least 2")
        mu = _schedule(r.sub("mu"))
        eta = _schedule(r.sub("eta"))
        r.close()
        if None not in (a0, horizon, mu, eta):
            try:
                cfg.lemma1 = LemmaOneInstance(a0, mu, eta, horizon)
            except FixpointError as exc:
                verr.append(f"lemma1: {exc}")
    if (r := sub("sweep")) is not None:
        sw = {
            "epsilons": r.get("epsilons", "floats", check=lambda v: v and min(v) >= 0, msg="need nonnegative values"),
            "deltas": r.get("deltas", "floats", check=lambda v: v and all(0 <= d < 1 for d in v),
                            msg="deltas must lie in [0, 1)"),
            "ks": r.get("ks", "ints", default=[2, 3, 5], check=lambda v: v and min(v) >= 2, msg="k must be >= 2"),
            "schemes": r.get("schemes", "strs", default=["new_multistep"],
                             check=lambda v: v and all(s in [x.value for x in Scheme] for s in v),
                             msg="unknown scheme name"),
            "modes": r.get("modes", "strs", default=["constant_shift"],
                           check=lambda v: v and all(m in ("constant_shift", "smooth_field") for m in v),
                           msg="modes must be constant_shift or smooth_field"),
            "dimension": r.get("dimension", "int", default=1, check=lambda v: 1 <= v <= 8, msg="must be in 1..8"),
            "workers": r.get("workers", "int", default=1, check=lambda v: v >= 1, msg="must be at least 1"),
        }
        sr = r.sub("schedules", required=False)
        if sr is None:
            raw["sweep"]["schedules"] = {"alpha": {"family": "constant", "c": 0.6},
                                         "beta": {"family": "constant", "c": 0.3}}
            sw["alpha"], sw["beta"] = Schedule.constant(0.6), Schedule.constant(0.3)
        else:
            scheds = _schedules(sr, ("alpha", "beta"))
            if scheds is not None:
                sw["alpha"], sw["beta"] = scheds["alpha"], scheds["beta"]
        r.close()
        cfg.sweep = sw
    top.close()
    if errors:
        raise ParseError(errors)
    _cross_validate(cfg, verr)
    if verr:
        raise ValidationError(verr)
    return cfg


def _cross_validate(cfg: ExperimentConfig, errors: list[str]) -> None:
    """Constraints that span several sections, chiefly schedule-theorem compatibility."""
    if cfg.experiment == "datadep" and cfg.scheme is not None:
        thm = theorem_for(cfg.scheme.scheme, datadep=True)
        if thm is None:
            errors.append(f"scheme: no data-dependence bound exists for {cfg.scheme.scheme.value}; "
                          "use new_multistep (t2_datadep) or s_iteration (t4_datadep)")
        elif cfg.theorem is not None and cfg.theorem is not thm:
            errors.append(f"run.theorem: {cfg.theorem.value} does not match the scheme's bound {thm.value}")
        else:
            cfg.theorem = thm
    if cfg.theorem is not None and cfg.scheme is not None:
        rep = validate_schedules(cfg.scheme, cfg.theorem, horizon=max(1000, min(cfg.stop.max_iter, 100_000)))
        errors.extend(f"scheme.schedules: {f.message}" for f in rep.failures)
    if cfg.experiment == "certify" and cfg.contract is not None and cfg.certify.get("condition") == "zamfirescu":
        if cfg.contract.zamfirescu is None:
            errors.append("contract.zamfirescu: the zamfirescu condition needs a triple (a, b, c)")
    if cfg.experiment == "datadep" and cfg.operator is not None and cfg.perturbation.get("direction") is not None:
        if len(cfg.perturbation["direction"]) != cfg.operator.dimension:
            errors.append("perturbation.direction: dimension does not match the operator")


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    """TOML text of the normalised config (defaults included); parses back to an equal config."""
    return tomli_w.dumps(cfg.raw)
