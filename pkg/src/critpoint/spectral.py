"""Symmetric eigendecompositions, the phi reshaping and the norm operator built from it."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InvalidParameterError, InvariantViolation, NumericError
from .kernels import jacobi_eigh

P_MIN = 16
ASYMMETRY_TOL = 1e-8
MAX_SWEEPS = 100
ROTATION_TOL = np.finfo(float).eps

# With the band index taken as a ceiling, inf phi / (delta * p_max) is
# min_k (32 + 2^(k-1)) / k = 48/5, approached just above |lambda| = 16 delta.
PHI_FLOOR = 48.0 / 5.0
STATED_PHI_FLOOR = 12.0


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    @property
    def norm(self):
        return float(np.max(np.abs(self.eigenvalues))) if self.dim else 0.0


def _orient(V):
    # First non-negligible entry of each column is made positive.
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if big.size and col[big[0]] < 0:
            V[:, j] = -col
    return V


def sym_eigendecomp(M) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)))
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T)))
    if asym > ASYMMETRY_TOL * scale:
        raise InvalidParameterError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    S = np.ascontiguousarray(0.5 * (M + M.T))
    w, V, sweeps, converged = jacobi_eigh(S, MAX_SWEEPS, ROTATION_TOL)
    if not converged:
        # Accept the fixed absolute threshold before giving up.
        off = np.linalg.norm(V.T @ S @ V - np.diag(w))
        if off > 1e-12 * np.linalg.norm(S):
            raise NumericError(f"Jacobi did not converge after {sweeps} sweeps", iterations=sweeps)
    return SpectralDecomposition(w, _orient(V), int(sweeps))


def p_max_for(L1, delta):
    """max{ceil(log2(L1/delta)), 16}."""
    return max(math.ceil(math.log2(L1 / delta)), P_MIN)


def phi(lam, delta, L1):
    """Eigenvalue reshaping: (32 delta + |lam|) p_max / ceil(log2(max(|lam|, 2 delta)/delta)).

    The numerator uses p_max (the band count floored at 16); the denominator
    is clamped below at 1. Vectorised over ``lam``.
    """
    if not delta > 0:
        raise InvalidParameterError("phi needs delta > 0")
    if not L1 > 0:
        raise InvalidParameterError("phi needs L1 > 0")
    pm = p_max_for(L1, delta)
    a = np.abs(np.asarray(lam, dtype=float))
    band = np.maximum(np.ceil(np.log2(np.maximum(a, 2.0 * delta) / delta)), 1.0)
    out = (32.0 * delta + a) * pm / band
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BandConstants:
    p: int
    p_max: int
    l_p: float
    r_p: float
    xi_p: float
    l_bar_p: float

    @classmethod
    def at(cls, p, p_max):
        if p < 1 or p_max < 1:
            raise InvalidParameterError("band index and p_max must be positive")
        l_p = (p + 1) / (p_max * (1.0 + 2.0 ** (-(p - 5))))
        r_p = (p + 1) / (p_max * (1.0 + 2.0 ** (-(p - 4))))
        xi_p = math.sqrt(p) / (2.0 ** (p / 2.0) * p_max)
        return cls(p, p_max, l_p, r_p, xi_p, l_p - xi_p)


@dataclass(frozen=True, eq=False)
class NormOperator:
    """phi applied to a Hessian estimate, with its powers in the shared eigenbasis."""

    base: SpectralDecomposition
    delta: float
    L1: float
    p_max: int
    phi_values: np.ndarray

    @property
    def eigenvectors(self):
        return self.base.eigenvectors

    def _form(self, diag):
        V = self.base.eigenvectors
        return (V * diag) @ V.T

    @property
    def H_hat(self):
        return self._form(self.phi_values)

    @property
    def H_hat_sqrt(self):
        return self._form(np.sqrt(self.phi_values))

    @property
    def H_hat_inv_sqrt(self):
        return self._form(1.0 / np.sqrt(self.phi_values))

    @property
    def H_hat_inv(self):
        return self._form(1.0 / self.phi_values)

    def apply_inv(self, g):
        V = self.base.eigenvectors
        return V @ ((V.T @ g) / self.phi_values)

    def hnorm(self, v):
        c = self.base.eigenvectors.T @ v
        return float(np.sqrt(np.sum(self.phi_values * c * c)))

    @property
    def floor(self):
        return float(np.min(self.phi_values))


def check_envelope(eigenvalues, delta, L1, what="Hessian estimate"):
    """Eigenvalues must lie in [-3 delta, 2 L1] (up to rounding)."""
    if eigenvalues.size == 0:
        return
    lo, hi = -3.0 * delta, 2.0 * L1
    slack = 1e-12 * max(1.0, hi)
    bad = eigenvalues[(eigenvalues < lo - slack) | (eigenvalues > hi + slack)]
    if bad.size:
        raise ContractError(
            f"{what} eigenvalue {bad[0]:.6g} outside the admissible range [{lo:.6g}, {hi:.6g}]")


def build_norm_operator(H, delta_eff, L1, decomposition=None) -> NormOperator:
    """Reshape a Hessian estimate into the positive-definite norm operator."""
    if not delta_eff > 0:
        raise InvalidParameterError("delta_eff must be positive")
    matrix = H.matrix if hasattr(H, "matrix") else np.asarray(H, dtype=float)
    dec = decomposition or sym_eigendecomp(matrix)
    check_envelope(dec.eigenvalues, delta_eff, L1)
    pm = p_max_for(L1, delta_eff)
    values = np.atleast_1d(phi(dec.eigenvalues, delta_eff, L1))
    op = NormOperator(dec, float(delta_eff), float(L1), pm, values)
    floor = PHI_FLOOR * delta_eff * pm
    if values.size and op.floor < floor * (1 - 1e-12):
        raise InvariantViolation(f"norm operator floor {op.floor:.6g} below {floor:.6g}")
    return op


def project_interval(decomp, lo, hi, abs_mode=False):
    """Projector onto eigenvectors with eigenvalue (or |eigenvalue|) in [lo, hi]."""
    if lo > hi:
        raise InvalidParameterError("empty interval: lo > hi")
    lam = np.abs(decomp.eigenvalues) if abs_mode else decomp.eigenvalues
    sel = (lam >= lo) & (lam <= hi)
    V = decomp.eigenvectors[:, sel]
    return V @ V.T


def pinv_on_subspace(H, Pi, rel_tol=1e-12):
    """Moore-Penrose pseudoinverse of Pi H Pi, dropping |eigenvalues| <= rel_tol * ||H||."""
    H = np.asarray(H, dtype=float)
    Pi = np.asarray(Pi, dtype=float)
    M = Pi @ H @ Pi
    M = 0.5 * (M + M.T)
    dec = sym_eigendecomp(M)
    h_norm = np.linalg.norm(H, 2) if H.size else 0.0
    keep = np.abs(dec.eigenvalues) > rel_tol * h_norm
    V = dec.eigenvectors[:, keep]
    return (V / dec.eigenvalues[keep]) @ V.T


@dataclass(frozen=True)
class DavisKahanReport:
    lhs: float
    rhs: float
    xi: float
    passed: bool
    admissible: bool
    k: int
    k_tilde: int
    reason: str = ""

    @property
    def crossing(self):
        return self.k != self.k_tilde


def davis_kahan_check(M, Mtilde, a, b, gamma) -> DavisKahanReport:
    """Compare ||P_[a,b](M) - P_[a-gamma,b+gamma](Mtilde)|| against xi/gamma.

    ``xi`` is the measured perturbation norm. Instances violating the gap
    preconditions come back with ``admissible=False`` instead of raising.
    """
    M = np.asarray(M, dtype=float)
    Mt = np.asarray(Mtilde, dtype=float)
    xi = float(np.linalg.norm(M - Mt, 2))
    dec = sym_eigendecomp(M)
    dec_t = sym_eigendecomp(Mt)
    lam = dec.eigenvalues
    reason = ""
    if not a <= b:
        reason = "a > b"
    elif not gamma > xi:
        reason = f"gamma={gamma:.3g} does not exceed xi={xi:.3g}"
    elif np.any(((lam >= a - gamma) & (lam < a)) | ((lam > b) & (lam <= b + gamma))):
        reason = "eigenvalue of M inside the gap"
    P = project_interval(dec, a, b)
    Pt = project_interval(dec_t, a - gamma, b + gamma)
    k = int(np.sum((lam >= a) & (lam <= b)))
    lt = dec_t.eigenvalues
    k_t = int(np.sum((lt >= a - gamma) & (lt <= b + gamma)))
    lhs = float(np.linalg.norm(P - Pt, 2)) if M.size else 0.0
    rhs = xi / gamma if gamma > 0 else np.inf
    return DavisKahanReport(lhs, rhs, xi, lhs <= rhs + 1e-9, reason == "", k, k_t, reason)
