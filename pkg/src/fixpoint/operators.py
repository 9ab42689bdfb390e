"""Declarative self-maps of a box, their perturbations, and sample-based
certification of contractive conditions.

Every operator family ends with a clamp onto its domain, so ``evaluate``
always returns a point of the domain. Batch evaluation over ``(m, d)`` arrays
is used internally for certification and sampling.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DimensionError, DomainError, NonFiniteError, ParamError
from .space import BoxDomain, Norm, Point, contains, point

SLACK = 1e-12
PERTURBATION_SAMPLES = 10_000
_BREAKPOINT_OFFSETS = (0.0, 1e-9, -1e-9, 1e-6, -1e-6, 1e-3, -1e-3)


class Family(str, enum.Enum):
    AFFINE = "affine"
    PIECEWISE_CONSTANT_1D = "piecewise_constant_1d"
    POLYNOMIAL_1D_CLAMPED = "polynomial_1d_clamped"
    CUSTOM_TABLE = "custom_table"


class Condition(str, enum.Enum):
    ZAMFIRESCU = "zamfirescu"
    QUASI_CONTRACTIVE = "quasi_contractive"
    OSILIKE = "osilike"
    CONTRACTIVE_LIKE = "contractive_like"


class Verdict(str, enum.Enum):
    HOLDS = "holds_on_samples"
    FALSIFIED = "falsified"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Gauge:
    """Comparison function phi with phi(0) = 0: ``zero``, ``L*t`` or ``L*t**p``."""

    form: str = "zero"
    L: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        if self.form not in ("zero", "linear", "power"):
            raise ParamError(f"unknown gauge form {self.form!r}")
        if not (np.isfinite(self.L) and self.L >= 0):
            raise ParamError(f"gauge L must be a nonnegative real, got {self.L}")
        if self.form == "power" and not (np.isfinite(self.p) and self.p > 0):
            raise ParamError(f"gauge exponent p must be positive, got {self.p}")

    @classmethod
    def zero(cls) -> "Gauge":
        return cls("zero")

    @classmethod
    def linear(cls, L: float) -> "Gauge":
        return cls("linear", float(L))

    @classmethod
    def power(cls, L: float, p: float) -> "Gauge":
        return cls("power", float(L), float(p))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.form == "zero":
            out = np.zeros_like(t)
        elif self.form == "linear":
            out = self.L * t
        else:
            out = self.L * np.power(t, self.p)
        return float(out) if out.ndim == 0 else out


def zamfirescu_delta(a: float, b: float, c: float) -> float:
    """Quasi-contraction constant max{a, b/(1-b), c/(1-c)} of a Zamfirescu triple."""
    if not (0 < a < 1 and 0 < b < 0.5 and 0 < c < 0.5):
        raise ParamError(f"Zamfirescu triple needs 0<a<1, 0<b<1/2, 0<c<1/2; got {(a, b, c)}")
    return max(a, b / (1 - b), c / (1 - c))


@dataclass(frozen=True)
class ContractParams:
    delta: float
    gauge: Gauge = field(default_factory=Gauge.zero)
    L: float = 0.0
    zamfirescu: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise ParamError(f"delta must lie in [0, 1), got {self.delta}")
        if self.L < 0:
            raise ParamError(f"L must be nonnegative, got {self.L}")
        if self.zamfirescu is not None:
            zamfirescu_delta(*self.zamfirescu)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Additive error field ``e(x)`` with ``norm(e(x)) <= epsilon`` everywhere.

    ``constant_shift`` adds ``epsilon * direction`` (a unit vector in ``norm``).
    ``smooth_field`` adds a scaled sum of random sinusoids; the scale divides by
    an upper bound of the field's norm, so the bound holds by construction.
    """

    epsilon: float
    mode: str
    seed: int
    norm: Norm
    direction: np.ndarray | None = None
    amplitudes: np.ndarray | None = None  # (d, M)
    frequencies: np.ndarray | None = None  # (d, M, d)
    phases: np.ndarray | None = None  # (d, M)
    scale: float = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.mode == "constant_shift":
            return np.broadcast_to(self.epsilon * self.direction, x.shape)
        arg = np.einsum("jmk,...k->...jm", self.frequencies, x) + self.phases
        return self.scale * np.sum(self.amplitudes * np.sin(arg), axis=-1)


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A self-map of ``domain`` from one of the declarative families.

    ``data`` holds the family parameters as read-only arrays:
    affine -> ``matrix``, ``offset``; piecewise_constant_1d -> ``thresholds``,
    ``values``; polynomial_1d_clamped -> ``coefficients`` (ascending powers);
    custom_table -> ``nodes``, ``values``.
    """

    family: Family
    domain: BoxDomain
    data: dict
    perturbation: Perturbation | None = None
    epsilon_realized: float | None = None

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def __call__(self, x) -> Point:
        return evaluate(self, x)


def affine(matrix, offset, domain: BoxDomain) -> OperatorSpec:
    """``x -> clamp(A x + b)``."""
    d = domain.dimension
    A = _frozen(np.atleast_2d(matrix))
    b = _frozen(np.reshape(offset, -1))
    if A.shape != (d, d) or b.shape != (d,):
        raise DimensionError(f"affine operator on a {d}-d box needs a {d}x{d} matrix and length-{d} offset")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ParamError("affine operator has non-finite entries")
    return OperatorSpec(Family.AFFINE, domain, {"matrix": A, "offset": b})


def _require_1d(domain: BoxDomain, family: str) -> None:
    if domain.dimension != 1:
        raise DimensionError(f"{family} operators live on 1-d domains")


def piecewise_constant(pieces, domain: BoxDomain) -> OperatorSpec:
    """Step function from ``(threshold, value)`` pairs.

    ``T(x)`` is the value of the first piece with ``x <= threshold``; points
    beyond every threshold take the last value.
    """
    _require_1d(domain, "piecewise_constant_1d")
    pieces = list(pieces)
    if not pieces:
        raise ParamError("piecewise operator needs at least one piece")
    thresholds = _frozen([t for t, _ in pieces])
    values = _frozen([v for _, v in pieces])
    if np.any(np.diff(thresholds) <= 0):
        raise ParamError("piece thresholds must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise ParamError("piece values must be finite")
    return OperatorSpec(Family.PIECEWISE_CONSTANT_1D, domain, {"thresholds": thresholds, "values": values})


def polynomial(coefficients, domain: BoxDomain) -> OperatorSpec:
    """``x -> clamp(c0 + c1 x + c2 x^2 + ...)``."""
    _require_1d(domain, "polynomial_1d_clamped")
    coeffs = _frozen(np.reshape(coefficients, -1))
    if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
        raise ParamError("polynomial needs finite coefficients")
    return OperatorSpec(Family.POLYNOMIAL_1D_CLAMPED, domain, {"coefficients": coeffs})


def table(nodes, values, domain: BoxDomain) -> OperatorSpec:
    """Piecewise-linear interpolation through ``(nodes[i], values[i])``, clamped."""
    _require_1d(domain, "custom_table")
    nodes, values = _frozen(nodes), _frozen(values)
    if nodes.shape != values.shape or nodes.size < 2:
        raise ParamError("table needs at least two nodes and one value per node")
    if np.any(np.diff(nodes) <= 0):
        raise ParamError("table nodes must be strictly increasing")
    return OperatorSpec(Family.CUSTOM_TABLE, domain, {"nodes": nodes, "values": values})


def counterexample_operator(upper: float = 2.0) -> OperatorSpec:
    """The fixed-point-free step map: 1.0 on [0, 0.8], 0.6 beyond, hosted on [0, upper]."""
    return piecewise_constant([(0.8, 1.0), (upper, 0.6)], BoxDomain.cube(0.0, upper))


def _apply(T: OperatorSpec, x: np.ndarray) -> np.ndarray:
    fam, data = T.family, T.data
    if fam is Family.AFFINE:
        y = x @ data["matrix"].T + data["offset"]
    elif fam is Family.PIECEWISE_CONSTANT_1D:
        t, v = data["thresholds"], data["values"]
        idx = np.minimum(np.searchsorted(t, x[..., 0], side="left"), len(v) - 1)
        y = v[idx][..., None]
    elif fam is Family.POLYNOMIAL_1D_CLAMPED:
        y = npoly.polyval(x[..., 0], data["coefficients"])[..., None]
    else:
        y = np.interp(x[..., 0], data["nodes"], data["values"])[..., None]
    if T.perturbation is not None and T.perturbation.epsilon > 0:
        y = y + T.perturbation(x)
    return np.minimum(np.maximum(y, T.domain.lower), T.domain.upper)


def evaluate(T: OperatorSpec, x) -> Point:
    """Image of a single point; raises DomainError for points outside ``T.domain``."""
    if type(x) is not np.ndarray or x.dtype != np.float64:
        x = np.asarray(x, dtype=float)
    if x.shape != T.domain.lower.shape:
        raise DimensionError(f"expected a point of dimension {T.dimension}, got shape {x.shape}")
    if not T.domain.contains_point(x):
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"cannot evaluate at a non-finite point {x.tolist()}")
        raise DomainError(f"{x.tolist()} is outside the operator's domain")
    y = _apply(T, x)
    y.flags.writeable = False
    return y


def evaluate_many(T: OperatorSpec, X) -> np.ndarray:
    """Images of stacked points ``(m, d)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != T.dimension:
        raise DimensionError(f"expected an (m, {T.dimension}) array, got shape {X.shape}")
    if np.any(X < T.domain.lower) or np.any(X > T.domain.upper):
        raise DomainError("some points are outside the operator's domain")
    return _apply(T, X)


def perturb(
    T: OperatorSpec,
    epsilon: float,
    mode: str = "constant_shift",
    seed: int = 0,
    norm: Norm = Norm.EUCLIDEAN,
    direction=None,
    n_modes: int = 3,
) -> OperatorSpec:
    """Approximate operator ``x -> project(T x + e(x))`` with ``norm(e(x)) <= epsilon``.

    The returned spec records ``epsilon_realized``: the largest observed
    ``norm(T x - T~ x)`` over a seeded sample of the domain (plus its corners),
    capped at ``epsilon``.
    """
    if not (np.isfinite(epsilon) and epsilon >= 0):
        raise ParamError(f"epsilon must be a nonnegative real, got {epsilon}")
    if T.perturbation is not None:
        raise ParamError("operator is already perturbed")
    norm = Norm(norm)
    d = T.dimension
    rng = np.random.default_rng(seed)
    if mode == "constant_shift":
        u = np.ones(d) if direction is None else np.asarray(direction, dtype=float).reshape(-1)
        if u.shape != (d,) or norm(u) == 0:
            raise ParamError("shift direction must be a nonzero vector of the operator's dimension")
        pert = Perturbation(float(epsilon), mode, seed, norm, direction=_frozen(u / norm(u)))
    elif mode == "smooth_field":
        amps = rng.uniform(-1.0, 1.0, size=(d, n_modes))
        freqs = rng.normal(0.0, 1.0, size=(d, n_modes, d))
        phases = rng.uniform(0.0, 2 * np.pi, size=(d, n_modes))
        bound = norm(np.sum(np.abs(amps), axis=1))
        pert = Perturbation(
            float(epsilon), mode, seed, norm,
            amplitudes=_frozen(amps), frequencies=_frozen(freqs), phases=_frozen(phases),
            scale=float(epsilon) / bound,
        )
    else:
        raise ParamError(f"unknown perturbation mode {mode!r}")
    Tt = replace(T, perturbation=pert)
    if epsilon == 0:
        return replace(Tt, epsilon_realized=0.0)
    X = np.vstack([T.domain.sample(rng, PERTURBATION_SAMPLES), np.array(T.domain.corners())])
    gap = np.max(norm(_apply(T, X) - _apply(Tt, X)))
    return replace(Tt, epsilon_realized=float(min(gap, epsilon)))


def affine_fixed_point(T: OperatorSpec) -> Point | None:
    """Solve ``(I - A) p = b (+ shift)`` for affine maps; None when singular or outside the box."""
    if T.family is not Family.AFFINE:
        return None
    pert = T.perturbation
    if pert is not None and pert.epsilon > 0 and pert.mode != "constant_shift":
        return None
    A, b = T.data["matrix"], T.data["offset"]
    if pert is not None and pert.epsilon > 0:
        b = b + pert.epsilon * pert.direction
    try:
        p = np.linalg.solve(np.eye(T.dimension) - A, b)
    except np.linalg.LinAlgError:
        return None
    return point(p) if contains(p, T.domain) else None


def random_affine_contraction(
    delta: float,
    dim: int = 1,
    seed: int = 0,
    norm: Norm = Norm.EUCLIDEAN,
    domain: BoxDomain | None = None,
) -> OperatorSpec:
    """Affine map with Lipschitz constant exactly ``delta`` in ``norm`` and an interior fixed point.

    The linear part is ``delta`` times an orthogonal matrix (euclidean) or a
    signed permutation (max/one norms); the fixed point is drawn from the
    middle half of the box.
    """
    domain = domain or BoxDomain.cube(0.0, 1.0, dim)
    dim = domain.dimension
    rng = np.random.default_rng(seed)
    if Norm(norm) is Norm.EUCLIDEAN:
        q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
        Q = q * np.sign(np.diag(r))
    else:
        Q = np.eye(dim)[rng.permutation(dim)] * rng.choice([-1.0, 1.0], size=dim)[:, None]
    A = delta * Q
    width = domain.upper - domain.lower
    p = domain.lower + width * rng.uniform(0.25, 0.75, size=dim)
    return affine(A, p - A @ p, domain)


# -- certification -----------------------------------------------------------


@dataclass(frozen=True)
class Sampler:
    """Random unordered pairs drawn uniformly from the domain, seeded."""

    count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ParamError("sampler count must be at least 1")


@dataclass(frozen=True, eq=False)
class CertificationReport:
    condition: Condition
    verdict: Verdict
    witness: tuple[Point, Point] | None
    slack: float
    samples_used: int
    rng_seed: int
    reverse_slack: float | None = None

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def _breakpoints(T: OperatorSpec) -> np.ndarray:
    if T.family is Family.PIECEWISE_CONSTANT_1D:
        return T.data["thresholds"]
    if T.family is Family.CUSTOM_TABLE:
        return T.data["nodes"]
    return np.empty(0)


def structured_points(T: OperatorSpec) -> np.ndarray:
    """Corners, centre, and neighbourhoods of every breakpoint inside the domain."""
    E = T.domain
    pts = E.corners() + [E.center]
    for t in _breakpoints(T):
        for off in _BREAKPOINT_OFFSETS:
            v = np.array([t + off])
            if contains(v, E):
                pts.append(v)
    return np.unique(np.array(pts, dtype=float), axis=0)


def sample_pairs(T: OperatorSpec, sampler: Sampler) -> tuple[np.ndarray, np.ndarray]:
    """All pairs of structured points followed by ``sampler.count`` random pairs."""
    S = structured_points(T)
    idx = np.array(list(itertools.combinations(range(len(S)), 2)), dtype=int).reshape(-1, 2)
    rng = np.random.default_rng(sampler.seed)
    X = np.vstack([S[idx[:, 0]], T.domain.sample(rng, sampler.count)])
    Y = np.vstack([S[idx[:, 1]], T.domain.sample(rng, sampler.count)])
    return X, Y


def _report(condition, slacks, X, Y, sampler, reverse=None) -> CertificationReport:
    i = int(np.argmin(slacks))
    worst = float(slacks[i])
    falsified = worst < -SLACK
    witness = (point(X[i]), point(Y[i])) if falsified else None
    return CertificationReport(
        Condition(condition),
        Verdict.FALSIFIED if falsified else Verdict.HOLDS,
        witness,
        worst,
        len(X),
        sampler.seed,
        None if reverse is None else float(reverse[i]),
    )


def certify_zamfirescu(T: OperatorSpec, params, sampler: Sampler = Sampler(), norm=Norm.EUCLIDEAN) -> CertificationReport:
    """Check that each sampled pair satisfies at least one of the three Zamfirescu inequalities.

    The condition is symmetric, so pairs are unordered. The reported slack is
    the best of the three right-hand sides minus the left-hand side.
    """
    a, b, c = params
    zamfirescu_delta(a, b, c)
    norm = Norm(norm)
    X, Y = sample_pairs(T, sampler)
    TX, TY = evaluate_many(T, X), evaluate_many(T, Y)
    lhs = norm(TX - TY)
    z1 = a * norm(X - Y)
    z2 = b * (norm(X - TX) + norm(Y - TY))
    z3 = c * (norm(X - TY) + norm(Y - TX))
    return _report(Condition.ZAMFIRESCU, np.maximum(np.maximum(z1, z2), z3) - lhs, X, Y, sampler)


def _ordered(condition, T, delta, rhs_extra, sampler, norm):
    """Shared body for the asymmetric conditions, checked in both orderings of every pair.

    ``rhs_extra(x, Tx, y, Ty)`` is the non-delta term of the right-hand side
    for the ordered pair (x, y). The witness is reordered so its first
    element is the one whose ordering fails.
    """
    if not 0 <= delta < 1:
        raise ParamError(f"delta must lie in [0, 1), got {delta}")
    norm = Norm(norm)
    X, Y = sample_pairs(T, sampler)
    TX, TY = evaluate_many(T, X), evaluate_many(T, Y)
    lhs = norm(TX - TY)
    base = delta * norm(X - Y)
    s_xy = base + rhs_extra(X, TX, Y, TY) - lhs
    s_yx = base + rhs_extra(Y, TY, X, TX) - lhs
    swap = s_yx < s_xy
    first = np.where(swap[:, None], Y, X)
    second = np.where(swap[:, None], X, Y)
    return _report(condition, np.minimum(s_xy, s_yx), first, second, sampler, reverse=np.maximum(s_xy, s_yx))


def certify_contractive_like(
    T: OperatorSpec, delta: float, gauge: Gauge, sampler: Sampler = Sampler(), norm=Norm.EUCLIDEAN
) -> CertificationReport:
    """Check ``|Tx - Ty| <= delta |x - y| + phi(|x - Tx|)`` on ordered sampled pairs."""
    norm = Norm(norm)
    return _ordered(Condition.CONTRACTIVE_LIKE, T, delta, lambda x, tx, y, ty: gauge(norm(x - tx)), sampler, norm)


def certify_osilike(
    T: OperatorSpec, delta: float, L: float, sampler: Sampler = Sampler(), norm=Norm.EUCLIDEAN
) -> CertificationReport:
    """Check ``|Tx - Ty| <= delta |x - y| + L |x - Tx|``; the linear-gauge special case."""
    if not (np.isfinite(L) and L >= 0):
        raise ParamError(f"L must be nonnegative, got {L}")
    norm = Norm(norm)
    return _ordered(Condition.OSILIKE, T, delta, lambda x, tx, y, ty: L * norm(x - tx), sampler, norm)


def certify_quasi_contractive(
    T: OperatorSpec, delta: float, sampler: Sampler = Sampler(), norm=Norm.EUCLIDEAN
) -> CertificationReport:
    """Check that every ordered pair meets one of the two quasi-contractive bounds.

    ``|Tx - Ty| <= delta |x - y| + 2 delta |x - Tx|`` or the same with
    ``|x - Ty|`` in place of ``|x - Tx|``.
    """
    norm = Norm(norm)

    def extra(x, tx, y, ty):
        return 2 * delta * np.maximum(norm(x - tx), norm(x - ty))

    return _ordered(Condition.QUASI_CONTRACTIVE, T, delta, extra, sampler, norm)


def find_fixed_points_grid(
    T: OperatorSpec, resolution: int, tol: float | None = None, norm=Norm.EUCLIDEAN
) -> list[Point]:
    """Approximate fixed points among the nodes of a uniform grid.

    A node qualifies when its residual ``|x - Tx|`` is within ``tol`` (default
    ``10 / resolution`` of the domain diameter) and no axis neighbour has a
    smaller residual. Qualifying nodes closer than one grid cell are merged,
    keeping the smallest residual.
    """
    if resolution < 2:
        raise ParamError("resolution must be at least 2")
    norm = Norm(norm)
    E = T.domain
    if tol is None:
        tol = 10.0 / resolution * E.diameter(norm)
    G = E.grid(resolution)
    res = norm(G - evaluate_many(T, G))
    shape = (resolution,) * E.dimension
    R = res.reshape(shape)
    is_min = R <= tol
    for ax in range(E.dimension):
        pad = [(0, 0)] * E.dimension
        pad[ax] = (1, 1)
        P = np.pad(R, pad, constant_values=np.inf)
        lo = np.take(P, range(0, resolution), axis=ax)
        hi = np.take(P, range(2, resolution + 2), axis=ax)
        is_min &= (R <= lo) & (R <= hi)
    cand = np.flatnonzero(is_min.reshape(-1))
    cell = float(np.min(np.where(E.upper > E.lower, (E.upper - E.lower) / (resolution - 1), np.inf)))
    kept: list[int] = []
    for i in cand[np.argsort(res[cand], kind="stable")]:
        if all(norm(G[i] - G[j]) >= cell * (1 - 1e-9) for j in kept):
            kept.append(int(i))
    return [point(G[i]) for i in sorted(kept)]


def uniqueness_violated(report: CertificationReport, fixed_points: list[Point]) -> bool:
    """True when a contractive-type certification holds yet several distinct fixed points were found."""
    return report.holds and len(fixed_points) >= 2
