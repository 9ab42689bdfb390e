import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fixpoint.errors import DimensionError, DomainError, ParamError
from fixpoint.operators import (
    ContractParams,
    Gauge,
    Sampler,
    Verdict,
    affine,
    affine_fixed_point,
    certify_contractive_like,
    certify_osilike,
    certify_quasi_contractive,
    certify_zamfirescu,
    counterexample_operator,
    evaluate,
    evaluate_many,
    find_fixed_points_grid,
    perturb,
    piecewise_constant,
    polynomial,
    random_affine_contraction,
    table,
    uniqueness_violated,
    zamfirescu_delta,
)
from fixpoint.space import BoxDomain, Norm, contains, point

UNIT = BoxDomain.cube(0.0, 1.0)


def identity():
    return affine([[1.0]], [0.0], UNIT)


def test_evaluate_examples(halving):
    T = counterexample_operator()
    assert evaluate(T, [0.5]).tolist() == [1.0]
    assert evaluate(T, [0.8]).tolist() == [1.0]
    assert evaluate(T, [0.9]).tolist() == [0.6]
    assert evaluate(halving, [0.8]).tolist() == [0.4]


def test_evaluate_errors(halving):
    with pytest.raises(DomainError):
        evaluate(halving, [1.5])
    with pytest.raises(DimensionError):
        evaluate(halving, [0.5, 0.5])


def test_affine_clamps_into_domain():
    T = affine([[2.0]], [0.0], UNIT)
    assert evaluate(T, [0.9]).tolist() == [1.0]


def test_polynomial_and_table():
    P = polynomial([0.1, 0.0, 0.5], UNIT)  # 0.1 + 0.5 x^2
    assert evaluate(P, [1.0])[0] == pytest.approx(0.6)
    Q = table([0.0, 0.5, 1.0], [0.2, 0.4, 0.0], UNIT)
    assert evaluate(Q, [0.25])[0] == pytest.approx(0.3)
    assert evaluate(Q, [0.75])[0] == pytest.approx(0.2)


def test_piecewise_requires_one_dimension():
    with pytest.raises(DimensionError):
        piecewise_constant([(0.5, 0.1)], BoxDomain.cube(0.0, 1.0, 2))


@pytest.mark.parametrize(
    "abc,expected",
    [((0.5, 0.25, 0.4), 2 / 3), ((0.9, 0.1, 0.1), 0.9), ((0.001, 0.001, 0.001), 0.001 / 0.999)],
)
def test_zamfirescu_delta(abc, expected):
    assert zamfirescu_delta(*abc) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("abc", [(0.0, 0.1, 0.1), (1.0, 0.1, 0.1), (0.5, 0.5, 0.1), (0.5, 0.1, 0.6)])
def test_zamfirescu_delta_range(abc):
    with pytest.raises(ParamError):
        zamfirescu_delta(*abc)


def test_contract_params_validation():
    with pytest.raises(ParamError):
        ContractParams(1.0)
    with pytest.raises(ParamError):
        ContractParams(0.5, L=-1.0)
    with pytest.raises(ParamError):
        ContractParams(0.5, zamfirescu=(0.5, 0.6, 0.1))


@given(st.sampled_from(["linear", "power"]), st.floats(0.01, 5), st.floats(0.1, 3),
       st.floats(0, 10), st.floats(1e-6, 10))
def test_gauge_monotone(form, L, p, t1, dt):
    g = Gauge.linear(L) if form == "linear" else Gauge.power(L, p)
    assert g(0.0) == 0.0
    assert g(t1 + dt) > g(t1)


def test_zamfirescu_certification(halving):
    rep = certify_zamfirescu(halving, (0.6, 0.25, 0.25), Sampler(10_000, 0))
    assert rep.verdict is Verdict.HOLDS and rep.witness is None
    bad = certify_zamfirescu(identity(), (0.5, 0.25, 0.25), Sampler(1000, 0))
    assert bad.verdict is Verdict.FALSIFIED
    x, y = bad.witness
    assert bad.slack < -1e-12 and not np.array_equal(x, y)


def test_contractive_like_examples(halving):
    T = counterexample_operator()
    assert certify_contractive_like(T, 0.5, Gauge.linear(2.0), Sampler(10_000, 0)).holds
    assert certify_contractive_like(halving, 0.5, Gauge.zero(), Sampler(1000, 0)).holds
    rep = certify_contractive_like(halving, 0.4, Gauge.zero(), Sampler(1000, 0))
    assert not rep.holds and rep.reverse_slack is not None


def test_contractive_like_is_ordered():
    # L = 1 fails only when x is the left piece's endpoint and y sits just above it
    rep = certify_contractive_like(counterexample_operator(), 0.5, Gauge.linear(1.0), Sampler(1000, 0))
    assert not rep.holds
    x, y = rep.witness
    assert x[0] <= 0.8 < y[0]


@pytest.mark.parametrize("delta", [0.0, 0.3, 0.99])
def test_osilike_counterexample(delta):
    assert certify_osilike(counterexample_operator(), delta, 2.0, Sampler(2000, 1)).holds


def test_osilike_examples():
    assert not certify_osilike(identity(), 0.0, 0.0, Sampler(100, 0)).holds
    const = affine([[0.0]], [0.3], UNIT)
    assert certify_osilike(const, 0.2, 0.0, Sampler(100, 0)).holds


def test_osilike_matches_linear_gauge():
    T = counterexample_operator()
    a = certify_osilike(T, 0.5, 1.0, Sampler(500, 3))
    b = certify_contractive_like(T, 0.5, Gauge.linear(1.0), Sampler(500, 3))
    assert a.verdict == b.verdict and a.slack == b.slack
    assert all(np.array_equal(u, v) for u, v in zip(a.witness, b.witness))


def test_quasi_contractive(halving):
    assert certify_quasi_contractive(halving, 0.5, Sampler(500, 0)).holds
    assert not certify_quasi_contractive(identity(), 0.2, Sampler(500, 0)).holds


def test_certification_is_reproducible():
    T = random_affine_contraction(0.7, 2, seed=5)
    a = certify_contractive_like(T, 0.6, Gauge.zero(), Sampler(300, 9))
    b = certify_contractive_like(T, 0.6, Gauge.zero(), Sampler(300, 9))
    assert a.slack == b.slack and a.samples_used == b.samples_used
    assert all(np.array_equal(u, v) for u, v in zip(a.witness, b.witness))


@pytest.mark.parametrize("norm", list(Norm))
def test_random_contraction_has_exact_lipschitz_constant(norm):
    T = random_affine_contraction(0.6, 3, seed=2, norm=norm)
    assert certify_contractive_like(T, 0.6, Gauge.zero(), Sampler(2000, 0), norm).holds
    assert not certify_contractive_like(T, 0.59, Gauge.zero(), Sampler(2000, 0), norm).holds
    p = affine_fixed_point(T)
    assert contains(p, T.domain)
    assert np.allclose(evaluate(T, p), p, atol=1e-14)


def test_fixed_points_grid(halving):
    assert find_fixed_points_grid(counterexample_operator(), 10_000) == []
    fps = find_fixed_points_grid(halving, 1000)
    assert len(fps) == 1 and fps[0].tolist() == [0.0]
    assert len(find_fixed_points_grid(identity(), 11)) == 11


def test_uniqueness_flag(halving):
    rep = certify_contractive_like(halving, 0.5, Gauge.zero(), Sampler(100, 0))
    assert not uniqueness_violated(rep, find_fixed_points_grid(halving, 100))
    # a holding certification next to two fixed points is inconsistent
    assert uniqueness_violated(rep, find_fixed_points_grid(identity(), 11))
    bad = certify_contractive_like(identity(), 0.5, Gauge.zero(), Sampler(100, 0))
    assert not uniqueness_violated(bad, find_fixed_points_grid(identity(), 11))


def test_perturb_zero_is_identical(halving):
    Tt = perturb(halving, 0.0)
    X = UNIT.sample(np.random.default_rng(0), 100)
    assert np.array_equal(evaluate_many(Tt, X), evaluate_many(halving, X))
    assert Tt.epsilon_realized == 0.0


def test_perturb_constant_shift(halving):
    Tt = perturb(halving, 0.01)
    assert Tt.epsilon_realized == pytest.approx(0.01, abs=1e-15)
    q = affine_fixed_point(Tt)
    assert q[0] == pytest.approx(0.02, abs=1e-15)
    assert evaluate(Tt, [1.0])[0] == pytest.approx(0.51)


def test_perturb_errors(halving):
    with pytest.raises(ParamError):
        perturb(halving, -0.1)
    with pytest.raises(ParamError):
        perturb(perturb(halving, 0.1), 0.1)


@given(st.integers(0, 2**31), st.floats(0.0, 0.5), st.sampled_from(list(Norm)))
def test_smooth_field_within_epsilon(seed, eps, norm):
    T = random_affine_contraction(0.5, 2, seed=seed % 97, norm=norm)
    Tt = perturb(T, eps, "smooth_field", seed=seed, norm=norm)
    assert Tt.epsilon_realized <= eps
    X = T.domain.sample(np.random.default_rng(seed), 500)
    gaps = norm(evaluate_many(Tt, X) - evaluate_many(T, X))
    assert np.all(gaps <= eps + 1e-15)


@given(st.integers(0, 1000), st.sampled_from(["affine", "poly", "piecewise"]))
def test_self_map(seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "affine":
        T = affine(rng.normal(size=(2, 2)) * 2, rng.normal(size=2), BoxDomain.cube(-1.0, 1.0, 2))
    elif kind == "poly":
        T = polynomial(rng.normal(size=4) * 3, UNIT)
    else:
        T = piecewise_constant([(0.3, rng.normal()), (1.0, rng.normal())], UNIT)
    X = T.domain.sample(rng, 2000)
    Y = evaluate_many(T, X)
    assert all(contains(y, T.domain) for y in Y)
    assert np.array_equal(Y, evaluate_many(T, X))


def test_self_map_large_sample():
    T = perturb(random_affine_contraction(0.9, 3, seed=1), 0.3, "smooth_field", seed=4)
    Y = evaluate_many(T, T.domain.sample(np.random.default_rng(0), 100_000))
    assert np.all((Y >= T.domain.lower) & (Y <= T.domain.upper))


def test_point_helper_is_float():
    assert point([1]).dtype == np.float64
