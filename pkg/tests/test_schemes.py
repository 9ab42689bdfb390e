import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fixpoint.errors import DomainError, ParamError
from fixpoint.operators import affine, affine_fixed_point, evaluate, random_affine_contraction
from fixpoint.schemes import (
    Schedule,
    Scheme,
    SchemeConfig,
    Theorem,
    orbit,
    reduction_check,
    required_roles,
    step,
    step_new_multistep,
    step_rs_multistep,
    step_s_iteration,
    step_sp,
    step_thianwan,
    validate_schedules,
)
from fixpoint.space import BoxDomain, contains, point

C = Schedule.constant


def cfg(scheme, k=2, **weights):
    if isinstance(scheme, str):
        scheme = Scheme(scheme)
    roles = required_roles(scheme, k)
    return SchemeConfig(scheme, {r: weights.get(r, C(0.0)) for r in roles}, k=k)


def all_configs(value):
    yield cfg("s_iteration", alpha=C(value), beta=C(value))
    yield cfg("thianwan", alpha=C(value), beta=C(value))
    yield cfg("sp", alpha=C(value), beta=C(value), gamma=C(value))
    for k in (2, 3, 5):
        w = {"alpha": C(value)} | {f"beta{i}": C(value) for i in range(1, k)}
        yield cfg("new_multistep", k=k, **w)
        yield cfg("rs_multistep", k=k, **w)


def test_schedule_values():
    assert C(0.3)(10) == 0.3
    assert Schedule.harmonic(0.5)(1) == 0.25
    assert Schedule.power(0.8, 2)(1) == pytest.approx(0.2)
    t = Schedule.table([0.1, 0.2])
    assert [t(0), t(1), t(7)] == [0.1, 0.2, 0.2]


def test_schedule_divergence():
    assert C(0.5).sum_diverges() and Schedule.harmonic(0.1).sum_diverges()
    assert Schedule.power(0.5, 1.0).sum_diverges()
    assert not Schedule.power(0.5, 2.0).sum_diverges()
    assert not C(0.0).sum_diverges()
    assert not Schedule.table([0.5, 0.0]).sum_diverges()


def test_config_roles():
    with pytest.raises(ParamError):
        SchemeConfig(Scheme.SP, {"alpha": C(0.1), "beta": C(0.1)})
    with pytest.raises(ParamError):
        SchemeConfig(Scheme.NEW_MULTISTEP, {"alpha": C(0.1), "beta1": C(0.1)}, k=3)


def test_weight_outside_range_raises(halving):
    c = cfg("thianwan", alpha=Schedule.table([0.5, 1.0]), beta=C(0.1))
    step(halving, point([1.0]), 0, c)
    with pytest.raises(DomainError):
        step(halving, point([1.0]), 1, c)


@pytest.mark.parametrize("c", list(all_configs(0.0)), ids=lambda c: f"{c.scheme.value}-{c.k}")
def test_zero_weights(c, halving):
    x = point([0.7])
    nxt = step(halving, x, 0, c).x
    if c.scheme is Scheme.S_ITERATION:
        assert nxt.tolist() == [0.35]  # Picard
    else:
        assert nxt.tolist() == [0.7]


def test_new_multistep_k2_hand_expansion(halving):
    a, b = 0.3, 0.6
    st_ = step_new_multistep(halving, point([1.0]), 0, cfg("new_multistep", alpha=C(a), beta1=C(b)))
    y1 = 1 - b / 2
    assert st_.auxiliaries[0][0] == pytest.approx(y1, abs=1e-15)
    assert st_.x[0] == pytest.approx((1 - a) * y1 + a * y1 / 2, abs=1e-15)


def test_s_iteration_and_thianwan_hand_values(halving):
    s = step_s_iteration(halving, point([1.0]), 0, cfg("s_iteration", alpha=C(0.5), beta=C(0.5)))
    assert s.auxiliaries[0][0] == 0.75 and s.x[0] == 7 / 16
    t = step_thianwan(halving, point([1.0]), 0, cfg("thianwan", alpha=C(0.5), beta=C(0.5)))
    assert t.auxiliaries[0][0] == 0.75 and t.x[0] == 9 / 16


def test_rs_multistep_uses_x_n_in_every_stage(halving):
    w = {"alpha": C(0.5), "beta1": C(0.5)}
    new = step_new_multistep(halving, point([1.0]), 0, cfg("new_multistep", **w))
    rs = step_rs_multistep(halving, point([1.0]), 0, cfg("rs_multistep", **w))
    # the inner stage is the same two-point average ...
    assert new.auxiliaries[0][0] == rs.auxiliaries[0][0] == 0.75
    # ... but the outer step mixes y^1 in one scheme and x_n in the other
    assert new.x[0] == 0.5625 and rs.x[0] == 0.6875


def test_rs_multistep_k3_hand_expansion(halving):
    a, b1, b2 = 0.5, 0.4, 0.3
    c = cfg("rs_multistep", k=3, alpha=C(a), beta1=C(b1), beta2=C(b2))
    s = step_rs_multistep(halving, point([1.0]), 0, c)
    y2 = (1 - b2) + b2 * 0.5
    y1 = (1 - b1) + b1 * y2 / 2
    assert s.auxiliaries[1][0] == pytest.approx(y2) and s.auxiliaries[0][0] == pytest.approx(y1)
    assert s.x[0] == pytest.approx((1 - a) + a * y1 / 2)


def test_sp_with_zero_gamma_is_thianwan():
    T = random_affine_contraction(0.8, 2, seed=3)
    x0 = point([0.1, 0.9])
    a, b = Schedule.harmonic(0.9), C(0.4)
    sp = orbit(T, x0, cfg("sp", alpha=a, beta=b, gamma=C(0.0)), 50)
    th = orbit(T, x0, cfg("thianwan", alpha=a, beta=b), 50)
    assert np.array_equal(sp, th)


def test_reduction_identities():
    T = random_affine_contraction(0.7, 3, seed=0)
    x0 = point([1.0, 0.0, 0.2])
    s2 = {"alpha": Schedule.harmonic(0.8), "beta1": C(0.3)}
    s3 = s2 | {"beta2": C(0.6)}
    assert reduction_check(T, x0, s2, 2, 200).passed
    assert reduction_check(T, x0, s3, 3, 200).passed
    with pytest.raises(ParamError):
        reduction_check(T, x0, s3, 4, 10)


def test_reduction_swap_is_detected():
    T = random_affine_contraction(0.7, 2, seed=4)
    x0 = point([0.0, 1.0])
    good = {"alpha": C(0.5), "beta1": C(0.2), "beta2": C(0.7)}
    swapped = {"alpha": C(0.5), "beta1": C(0.7), "beta2": C(0.2)}
    a = orbit(T, x0, cfg("new_multistep", k=3, **good), 5)
    b = orbit(T, x0, cfg("sp", alpha=C(0.5), beta=C(0.2), gamma=C(0.7)), 5)
    wrong = orbit(T, x0, cfg("new_multistep", k=3, **swapped), 5)
    assert np.max(np.abs(a - b)) <= 1e-12
    assert np.max(np.abs(wrong - b)) > 1e-6


@pytest.mark.parametrize(
    "weights,theorem,ok",
    [
        ({"alpha": C(0.5), "beta1": C(0.4)}, Theorem.T2_DATADEP, True),
        ({"alpha": C(0.5), "beta1": C(0.5)}, Theorem.T2_DATADEP, False),
        ({"alpha": Schedule.power(0.5, 2.0), "beta1": C(0.4)}, Theorem.T1_CONVERGENCE, False),
        ({"alpha": Schedule.harmonic(0.5), "beta1": C(0.4)}, Theorem.T1_CONVERGENCE, True),
        ({"alpha": C(0.0), "beta1": C(0.0)}, Theorem.T2_DATADEP, False),
    ],
)
def test_validate_schedules_multistep(weights, theorem, ok):
    assert validate_schedules(cfg("new_multistep", **weights), theorem).ok is ok


def test_validate_first_violation():
    c = cfg("new_multistep", alpha=Schedule.harmonic(0.9), beta1=C(0.1))
    rep = validate_schedules(c, Theorem.T2_DATADEP, horizon=100)
    # 0.9/(n+1) <= 0.1 first at n = 8
    assert not rep.ok and rep.first_violation == 8
    assert "t2" in rep.failures[0].message


def test_validate_t4_needs_half():
    ok = cfg("s_iteration", alpha=C(0.5), beta=C(0.9))
    bad = cfg("s_iteration", alpha=C(0.49), beta=C(0.9))
    assert validate_schedules(ok, Theorem.T4_DATADEP).ok
    assert not validate_schedules(bad, Theorem.T4_DATADEP).ok
    assert not validate_schedules(ok, Theorem.T2_DATADEP).ok  # wrong scheme for the theorem


weights = st.floats(0.0, 0.999)


@given(st.integers(0, 500), st.lists(weights, min_size=5, max_size=5), st.sampled_from(list(Scheme)),
       st.integers(2, 5))
def test_convexity_closure_and_absorption(seed, w, scheme, k):
    rng = np.random.default_rng(seed)
    E = BoxDomain.cube(-1.0, 1.0, 2)
    T = affine(rng.normal(size=(2, 2)), rng.normal(size=2), E)
    roles = required_roles(scheme, k)
    c = SchemeConfig(scheme, {r: C(w[i % 5]) for i, r in enumerate(roles)}, k=k)
    x = point(E.sample(rng, 1)[0])
    for n in range(5):
        s = step(T, x, n, c)
        assert all(contains(y, E) for y in (s.x, *s.auxiliaries))
        x = s.x
    Tc = random_affine_contraction(0.9, 2, seed=seed)
    p = affine_fixed_point(Tc)
    if np.array_equal(evaluate(Tc, p), p):
        assert np.array_equal(step(Tc, p, 0, c).x, p)


def test_absorption_exact_fixed_point(halving):
    for c in all_configs(0.37):
        assert step(halving, point([0.0]), 3, c).x.tolist() == [0.0]


def test_orbit_deterministic():
    T = random_affine_contraction(0.5, 3, seed=8)
    c = cfg("new_multistep", k=3, alpha=C(0.6), beta1=C(0.3), beta2=Schedule.harmonic(0.5))
    a = orbit(T, T.domain.center, c, 30)
    b = orbit(T, T.domain.center, c, 30)
    assert a.shape == (31, 3) and a.tobytes() == b.tobytes()
