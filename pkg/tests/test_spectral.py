import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critpoint import (
    ContractError, InvalidParameterError, InvariantViolation, NumericError, build_norm_operator,
    davis_kahan_check, phi, sym_eigendecomp,
)
from critpoint.spectral import (
    PHI_FLOOR, STATED_PHI_FLOOR, BandConstants, p_max_for, pinv_on_subspace, project_interval,
)


def test_identity_eigenvalues():
    dec = sym_eigendecomp(np.eye(3))
    assert np.allclose(dec.eigenvalues, 1.0)


def test_diagonal_eigenpairs():
    dec = sym_eigendecomp(np.diag([-2.0, 0.0, 5.0]))
    assert np.allclose(dec.eigenvalues, [-2.0, 0.0, 5.0])
    assert np.allclose(np.abs(dec.eigenvectors), np.eye(3))


def test_random_reconstruction_d8(rng):
    A = rng.standard_normal((8, 8))
    M = 0.5 * (A + A.T)
    dec = sym_eigendecomp(M)
    assert np.linalg.norm(dec.reconstruct() - M) <= 1e-9
    assert np.allclose(dec.eigenvalues, np.linalg.eigvalsh(M), atol=1e-12)


def test_jacobi_keeps_small_eigenvalues_next_to_huge_ones(rng):
    Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    M = (Q * np.array([-0.5, 0.25, 2.0 ** 20])) @ Q.T
    dec = sym_eigendecomp(0.5 * (M + M.T))
    assert np.allclose(dec.eigenvalues[:2], [-0.5, 0.25], atol=1e-9)
    dec = sym_eigendecomp(np.diag([2.0 ** 130, 0.25, -0.5]))
    assert np.array_equal(dec.eigenvalues, [-0.5, 0.25, 2.0 ** 130])


def test_asymmetric_input_rejected():
    with pytest.raises(InvalidParameterError):
        sym_eigendecomp(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_nonfinite_input_rejected():
    with pytest.raises(NumericError):
        sym_eigendecomp(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_phi_values_at_zero_and_first_band_edge():
    assert phi(0.0, 1.0, 2.0 ** 16) == 512.0
    assert phi(2.0, 1.0, 2.0 ** 16) == 544.0


def test_phi_rejects_nonpositive_delta():
    with pytest.raises(InvalidParameterError):
        phi(0.0, 0.0, 1.0)


def test_zero_estimate_gives_512_identity():
    op = build_norm_operator(np.zeros((2, 2)), 1.0, 1.0)
    assert op.p_max == 16
    assert np.allclose(op.H_hat, 512.0 * np.eye(2))


def test_top_band_value():
    op = build_norm_operator(np.array([[2.0 ** 17]]), 1.0, 2.0 ** 17)
    assert op.p_max == 17
    assert op.phi_values[0] == 32.0 + 2.0 ** 17


def test_envelope_violation_names_eigenvalue():
    with pytest.raises(ContractError, match="-4"):
        build_norm_operator(np.diag([-4.0, 0.0]), 1.0, 10.0)
    with pytest.raises(ContractError):
        build_norm_operator(np.diag([25.0, 0.0]), 1.0, 10.0)


def test_operator_powers_and_commutation(rng):
    A = rng.standard_normal((6, 6))
    H = 0.5 * (A + A.T)
    op = build_norm_operator(H, 2.0, 100.0)
    Hh = op.H_hat
    assert np.linalg.norm(op.H_hat_sqrt @ op.H_hat_sqrt - Hh) <= 1e-9 * np.linalg.norm(Hh)
    assert np.linalg.norm(Hh @ H - H @ Hh) <= 1e-9 * np.linalg.norm(Hh)
    assert np.allclose(op.H_hat_inv @ Hh, np.eye(6), atol=1e-12)
    v = rng.standard_normal(6)
    assert op.hnorm(v) == pytest.approx(np.sqrt(v @ Hh @ v), rel=1e-12)
    assert np.allclose(op.apply_inv(v), op.H_hat_inv @ v)


def test_true_infimum_is_48_over_5():
    # phi just above |lambda| = 16 delta sits in band 5: (32 + 16) / 5 = 9.6 per delta p_max
    delta, L1 = 1.0, 2.0 ** 16
    pm = p_max_for(L1, delta)
    lam = 16.0 * (1 + 1e-12)
    assert phi(lam, delta, L1) / (delta * pm) == pytest.approx(PHI_FLOOR, rel=1e-9)
    grid = np.concatenate((np.linspace(0, L1, 200_001), 2.0 ** np.arange(1, 17) * (1 + 1e-12)))
    assert np.min(phi(grid, delta, L1)) / (delta * pm) == pytest.approx(PHI_FLOOR, rel=1e-9)


def test_stated_twelve_floor_fails_at_seventeen():
    # counterexample to the 12 delta p_max floor: (32 + 17) * 16 / 5 = 156.8 < 192
    value = phi(17.0, 1.0, 2.0 ** 16)
    assert value == pytest.approx(156.8)
    assert value < STATED_PHI_FLOOR * 16


def test_band_constants_at_sixteen():
    c = BandConstants.at(16, 16)
    assert 0 < c.l_p < c.r_p
    assert c.l_bar_p == pytest.approx(c.l_p - c.xi_p)
    assert c.xi_p > 0 and c.l_bar_p > 0


def test_projector_interval_selection():
    P = project_interval(sym_eigendecomp(np.diag([1.0, 5.0])), 0.0, 2.0)
    assert np.allclose(P, np.diag([1.0, 0.0]))


def test_projector_abs_mode():
    P = project_interval(sym_eigendecomp(np.diag([-3.0, 1.0])), 0.0, 2.0, abs_mode=True)
    assert np.allclose(P, np.diag([0.0, 1.0]))


def test_projector_empty_selection_is_zero():
    P = project_interval(sym_eigendecomp(np.diag([3.0, 4.0])), 0.0, 1.0)
    assert np.array_equal(P, np.zeros((2, 2)))


def test_pinv_on_selected_axis():
    X = pinv_on_subspace(np.diag([2.0, 0.1]), np.diag([1.0, 0.0]))
    assert np.allclose(X, np.diag([0.5, 0.0]))


def test_pinv_on_empty_subspace():
    assert np.array_equal(pinv_on_subspace(np.diag([2.0, 0.1]), np.zeros((2, 2))), np.zeros((2, 2)))


def test_davis_kahan_zero_perturbation():
    M = np.diag([0.0, 1.0, 3.0])
    rep = davis_kahan_check(M, M, 1.0, 1.0, 0.5)
    assert rep.lhs == 0.0 and rep.passed and rep.admissible


def test_davis_kahan_random_gapped_instances(rng):
    for _ in range(200):
        lam = np.sort(rng.uniform(-5, 5, 10))
        lam = lam[0] + np.arange(10) * 1.0  # gaps of 1 so a gap of 0.5 + xi holds around any eigenvalue
        Q = np.linalg.qr(rng.standard_normal((10, 10)))[0]
        M = (Q * lam) @ Q.T
        M = 0.5 * (M + M.T)
        E = rng.standard_normal((10, 10))
        E = 0.5 * (E + E.T)
        E *= 0.01 / np.linalg.norm(E, 2)
        i = int(rng.integers(10))
        rep = davis_kahan_check(M, M + E, lam[i] - 0.05, lam[i] + 0.05, 0.5)
        assert rep.admissible and rep.passed


def test_davis_kahan_equivalent_form_counterexample():
    # an eigenvalue of M just outside the gap crosses into the enlarged window of M~
    M = np.diag([0.49, 1.0])
    Mt = np.diag([0.49 + 0.3, 1.0])
    rep = davis_kahan_check(M, Mt, 1.0, 1.0, 0.5)
    assert rep.admissible
    assert rep.xi == pytest.approx(0.3)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.crossing and not rep.passed


def test_davis_kahan_inadmissible_is_reported_not_raised():
    rep = davis_kahan_check(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]), 1.0, 1.0, 2.0)
    assert not rep.admissible and "gap" in rep.reason


scales = st.tuples(st.floats(-4, 0), st.floats(1, 20)).map(lambda t: (10.0 ** t[0], 10.0 ** t[0] * 2.0 ** t[1]))


@settings(max_examples=50, deadline=None)
@given(scales)
def test_lambda_over_phi_nondecreasing(dl):
    delta, L1 = dl
    lam = np.linspace(-L1, L1, 10_000)
    ratio = lam / phi(lam, delta, L1)
    assert np.all(np.diff(ratio) >= -1e-12 * np.abs(ratio[1:]))


@settings(max_examples=50, deadline=None)
@given(scales, st.integers(0, 2 ** 32 - 1))
def test_band_inclusion(dl, seed):
    delta, L1 = dl
    pm = p_max_for(L1, delta)
    rng = np.random.default_rng(seed)
    for p in range(1, pm + 1):
        lo, hi = 2.0 ** p * delta, 2.0 ** (p + 1) * delta
        lam = np.concatenate((rng.uniform(lo, hi, 20), [hi, lo * (1 + 1e-9)]))
        r = lam / phi(lam, delta, L1)
        c = BandConstants.at(p, pm)
        assert np.all(r > c.l_p) and np.all(r <= c.r_p * (1 + 1e-12))


@settings(max_examples=50, deadline=None)
@given(scales)
def test_grid_minimum_is_the_true_infimum(dl):
    delta, L1 = dl
    pm = p_max_for(L1, delta)
    edges = delta * 2.0 ** np.arange(0, 30) * (1 + 1e-12)
    grid = np.concatenate((np.linspace(0, L1, 10_000), edges[edges <= L1]))
    m = float(np.min(phi(grid, delta, L1))) / (delta * pm)
    if L1 > 16 * delta * (1 + 1e-12):
        assert m == pytest.approx(PHI_FLOOR, rel=1e-9)
    else:
        assert m >= PHI_FLOOR


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_eigendecomp_invariants(d, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d)) * 10.0 ** rng.uniform(-3, 3)
    M = 0.5 * (A + A.T)
    dec = sym_eigendecomp(M)
    Q = dec.eigenvectors
    assert np.linalg.norm(Q.T @ Q - np.eye(d)) <= 1e-10
    assert np.linalg.norm(dec.reconstruct() - M) <= 1e-9 * max(1.0, np.linalg.norm(M, 2))
    assert np.all(np.diff(dec.eigenvalues) >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.floats(0.1, 3.0), st.integers(0, 2 ** 32 - 1))
def test_projector_identities(d, ell, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d))
    H = 0.5 * (A + A.T)
    dec = sym_eigendecomp(H)
    P = project_interval(dec, 0.0, ell, abs_mode=True)
    assert np.allclose(P @ P, P, atol=1e-10)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.trace(P) == pytest.approx(np.sum(np.abs(dec.eigenvalues) <= ell), abs=1e-9)
    Q = np.eye(d) - P
    X = pinv_on_subspace(H, Q)
    B = Q @ H @ Q
    assert np.allclose(B @ X @ B, B, atol=1e-9)


def test_norm_operator_floor_invariant_fires_on_mutated_phi(monkeypatch):
    import critpoint.spectral as spectral

    def low_phi(lam, delta, L1):
        return np.full(np.shape(lam), 9.0 * delta * p_max_for(L1, delta))

    monkeypatch.setattr(spectral, "phi", low_phi)
    with pytest.raises(InvariantViolation):
        spectral.build_norm_operator(np.zeros((2, 2)), 1.0, 1.0)
