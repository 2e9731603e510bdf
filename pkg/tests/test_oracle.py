import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critpoint import (
    DimensionError, HessianEstimate, HessianMode, InvalidParameterError, InvariantViolation, Objective,
    QueryLedger, UnsupportedModeError, make_test_objective, query_hessian_estimate,
)
from critpoint.families import hessian_lipschitz_ratio
from critpoint.oracle import fd_step, gradient_fd_error, query_gradient, query_value

from conftest import quadratic


def test_gradient_of_half_norm_squared():
    obj = quadratic(np.eye(2), [0.0, 0.0])
    ledger = QueryLedger()
    g = query_gradient(obj, np.array([1.0, 2.0]), ledger)
    assert np.array_equal(g, [1.0, 2.0])
    assert ledger.grad_count == 1


def test_quad_cos_gradient_vanishes_at_origin():
    obj = make_test_objective("quad_cos", 6, {}, seed=3)
    assert np.array_equal(obj.gradient(np.zeros(6)), np.zeros(6))


@pytest.mark.parametrize("family", ["quad_cos", "separable_quartic", "saddle_band", "random_cubic_reg"])
def test_gradient_matches_central_differences(family, rng):
    obj = make_test_objective(family, 7, {}, seed=11)
    for _ in range(5):
        x = obj.x0 + 0.7 * rng.standard_normal(7)
        assert gradient_fd_error(obj, x) < 1e-6


def test_dimension_mismatch_is_an_argument_error():
    obj = quadratic(np.eye(2), [0.0, 0.0])
    with pytest.raises(DimensionError):
        query_gradient(obj, np.zeros(3), QueryLedger())
    with pytest.raises(DimensionError):
        query_value(obj, np.zeros(1), QueryLedger())


def test_objective_rejects_bad_constants():
    kw = dict(dim=1, value=lambda x: 0.0, gradient=lambda x: x, x0=[0.0])
    with pytest.raises(InvalidParameterError):
        Objective(L2=0.0, delta_bound=1.0, **kw)
    with pytest.raises(InvalidParameterError):
        Objective(L2=1.0, delta_bound=0.0, **kw)
    with pytest.raises(InvalidParameterError):
        Objective(L2=1.0, delta_bound=1.0, L1=-1.0, **kw)
    with pytest.raises(DimensionError):
        Objective(dim=2, value=lambda x: 0.0, gradient=lambda x: x, x0=[0.0], L2=1.0, delta_bound=1.0)


def test_exact_mode_on_half_norm_squared():
    obj = quadratic(np.eye(3), np.zeros(3))
    ledger = QueryLedger()
    H = query_hessian_estimate(obj, np.ones(3), HessianMode.exact(), ledger)
    assert np.array_equal(H.matrix, np.eye(3))
    assert H.delta == 0.0
    assert ledger.counts() == {"grad": 0, "hess": 1, "value": 0}


def test_zero_mode_returns_zero_with_delta_L1():
    obj = quadratic(10.0 * np.eye(2), np.zeros(2))
    assert obj.L1 == 10.0
    ledger = QueryLedger()
    H = query_hessian_estimate(obj, np.ones(2), HessianMode.zero(), ledger)
    assert np.array_equal(H.matrix, np.zeros((2, 2)))
    assert H.delta == 10.0
    assert ledger.hess_count == 1 and ledger.grad_count == 0


def test_mode_errors():
    obj = make_test_objective("quad_cos", 3, {}, seed=0)
    with pytest.raises(InvalidParameterError):
        query_hessian_estimate(obj, obj.x0, HessianMode.finite_difference(0.0), QueryLedger())
    bare = Objective(dim=1, value=lambda x: 0.0, gradient=lambda x: 0 * x, x0=[0.0], L2=1.0,
                     delta_bound=1.0)
    with pytest.raises(UnsupportedModeError):
        query_hessian_estimate(bare, bare.x0, HessianMode.exact(), QueryLedger())
    with pytest.raises(UnsupportedModeError):
        query_hessian_estimate(bare, bare.x0, HessianMode.zero(), QueryLedger())
    with pytest.raises(InvalidParameterError):
        HessianMode.parse("magic")


def test_fd_quad_cos_d10_accuracy_and_cost(rng):
    obj = make_test_objective("quad_cos", 10, {}, seed=5)
    mode = HessianMode.finite_difference(0.1)
    for _ in range(100):
        x = 2.0 * rng.standard_normal(10)
        ledger = QueryLedger()
        H = query_hessian_estimate(obj, x, mode, ledger)
        assert np.linalg.norm(H.matrix - obj.analytic_hessian(x), 2) <= 0.1
        assert ledger.grad_count == 20 and ledger.hess_count == 1


def test_fd_d1_uses_two_gradients():
    obj = make_test_objective("quad_cos", 1, {}, seed=0)
    ledger = QueryLedger()
    query_hessian_estimate(obj, obj.x0, HessianMode.finite_difference(0.05), ledger)
    assert ledger.grad_count == 2


def test_fd_step_size():
    assert fd_step(0.1, 4, 0.5) == pytest.approx(2 * 0.1 / (2 * 0.5))


def test_noisy_mode_within_delta(rng):
    obj = make_test_objective("quad_cos", 8, {}, seed=1)
    mode = HessianMode.noisy(0.3, seed=4)
    for _ in range(50):
        x = rng.standard_normal(8)
        H = query_hessian_estimate(obj, x, mode, QueryLedger(), rng)
        err = np.linalg.norm(H.matrix - obj.analytic_hessian(x), 2)
        assert err <= 0.3 + 1e-12
        assert np.array_equal(H.matrix, H.matrix.T)


def test_hessian_estimate_rejects_asymmetry():
    with pytest.raises(InvariantViolation):
        HessianEstimate(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2), 0.0)


def test_hessian_estimate_is_read_only():
    H = HessianEstimate(np.eye(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        H.matrix[0, 0] = 3.0


def test_ledger_phases_and_monotonicity():
    ledger = QueryLedger()
    with ledger.phase("a"):
        ledger.charge(grad=3, hess=1)
    with ledger.phase("b"):
        ledger.charge(value=2)
    with ledger.phase("a"):
        ledger.charge(grad=1)
    assert ledger.phase_totals() == {"a": {"grad": 4, "hess": 1, "value": 0},
                                     "b": {"grad": 0, "hess": 0, "value": 2}}
    with pytest.raises(InvalidParameterError):
        ledger.charge(grad=-1)


def test_quad_cos_constants():
    obj = make_test_objective("quad_cos", 2, {"A": [[1.0, 0.0], [0.0, 4.0]], "beta": 0.5}, seed=0)
    assert obj.L2 == 0.5
    assert obj.L1 == 4.5


def test_saddle_band_has_unit_negative_curvature_at_start():
    obj = make_test_objective("saddle_band", 3, {}, seed=0)
    # independent eigenvalue oracle
    assert np.linalg.eigvalsh(obj.analytic_hessian(obj.x0))[0] == pytest.approx(-1.0, abs=1e-12)


def test_separable_quartic_L2_sampling_certificate(rng):
    obj = make_test_objective("separable_quartic", 1, {}, seed=0)
    ratio = hessian_lipschitz_ratio(obj, 10_000, rng)
    assert 0.0 < ratio <= obj.L2


def test_unknown_family():
    with pytest.raises(InvalidParameterError):
        make_test_objective("rosenbrock", 2)


@settings(max_examples=40, deadline=None)
@given(family=st.sampled_from(["quad_cos", "saddle_band", "random_cubic_reg"]),
       seed=st.integers(0, 10_000), spread=st.floats(0.1, 5.0))
def test_zero_mode_validity(family, seed, spread):
    obj = make_test_objective(family, 5, {}, seed=seed)
    if obj.L1 is None:
        return
    x = obj.x0 + spread * np.random.default_rng(seed).standard_normal(5)
    assert np.linalg.norm(obj.analytic_hessian(x), 2) <= obj.L1 * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 50), delta=st.sampled_from([1e-2, 1e-1]), seed=st.integers(0, 10_000))
def test_fd_accuracy_property(d, delta, seed):
    obj = make_test_objective("quad_cos", d, {}, seed=seed)
    x = np.random.default_rng(seed).standard_normal(d) * 3
    ledger = QueryLedger()
    H = query_hessian_estimate(obj, x, HessianMode.finite_difference(delta), ledger)
    assert np.linalg.norm(H.matrix - obj.analytic_hessian(x), 2) <= delta
    assert ledger.grad_count == 2 * d


@settings(max_examples=30, deadline=None)
@given(charges=st.lists(st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 3)), max_size=20))
def test_ledger_counts_are_monotone(charges):
    ledger = QueryLedger()
    prev = ledger.counts()
    for g, h, v in charges:
        ledger.charge(grad=g, hess=h, value=v)
        now = ledger.counts()
        assert all(now[k] >= prev[k] for k in now)
        prev = now
    assert ledger.grad_count == sum(c[0] for c in charges)
