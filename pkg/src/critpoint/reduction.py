"""Reduction to bounded smoothness: solve on the small-eigenvalue subspace, then Newton on the rest."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InvalidParameterError, InvariantViolation, RegimeError
from .oracle import HessianEstimate, Objective, QueryLedger
from .restarted import SolverReport, c_delta, restarted_agd
from .spectral import pinv_on_subspace, project_interval, sym_eigendecomp


@dataclass(frozen=True)
class ReductionParams:
    ell_hat: float
    Delta_out: float
    R_out: float
    ell: float
    c_delta: float
    required_ell: float

    @classmethod
    def from_problem(cls, L2, Delta, delta, eps, n_H, L1=None, check=True):
        cd = c_delta(L1, L2, Delta, delta, eps, n_H)
        ell_hat = max(800.0 * Delta / eps ** 2 * (3.0 * L2 * Delta / eps + delta) ** 2, 2.0 * delta)
        lg9 = math.log2(ell_hat / cd + 16.0) ** 9
        Delta_out = 54.0 * (Delta + delta * eps / L2) * lg9 + eps ** 1.5 / (6.0 * math.sqrt(L2))
        R_out = 3.0 * Delta / eps * lg9
        ell = ell_hat * math.log2(ell_hat / cd) ** 19
        required = max(800.0 * Delta / eps ** 2 * (L2 * R_out + delta) ** 2,
                       48.0 * L2 * Delta_out / eps,
                       24.0 * Delta_out ** (1.0 / 3.0) * L2 ** (2.0 / 3.0),
                       2.0 * delta)
        if check and not ell >= required:
            raise ContractError(f"threshold ell={ell:.6g} is below the required {required:.6g}")
        return cls(ell_hat, Delta_out, R_out, ell, cd, required)


@dataclass(frozen=True, eq=False)
class RestrictedObjective(Objective):
    """``f(x0 + P(x - x0))`` where ``P`` projects onto eigenvectors with |eigenvalue| <= ell."""

    parent: Objective = None
    Pi_small: np.ndarray = None
    anchor: np.ndarray = None

    def hessian_estimate(self, x, mode, ledger, rng=None):
        x = np.asarray(x, dtype=float)
        z = self.anchor + self.Pi_small @ (x - self.anchor)
        H = self.parent.hessian_estimate(z, mode, ledger, rng)
        P = self.Pi_small
        M = P @ H.matrix @ P
        return HessianEstimate(0.5 * (M + M.T), x, H.delta)


def build_restricted(obj, x0, H, ell) -> RestrictedObjective:
    """Restrict ``obj`` to the span of eigenvectors of ``H`` with |eigenvalue| <= ell."""
    if not ell >= 2.0 * H.delta:
        raise InvalidParameterError(f"ell={ell:.6g} must be at least 2 delta = {2 * H.delta:.6g}")
    x0 = np.array(x0, dtype=float)
    dec = sym_eigendecomp(H.matrix)
    P = project_interval(dec, 0.0, ell, abs_mode=True)
    P = 0.5 * (P + P.T)
    P.setflags(write=False)

    def point(x):
        return x0 + P @ (np.asarray(x, dtype=float) - x0)

    def value(x):
        return float(obj.value(point(x)))

    def gradient(x):
        return P @ np.asarray(obj.gradient(point(x)), dtype=float)

    hessian = None
    if obj.analytic_hessian is not None:
        def hessian(x):
            M = P @ obj.analytic_hessian(point(x)) @ P
            return 0.5 * (M + M.T)

    kernels = None
    if obj.kernels is not None and obj.kernels[3].shape[0] == 0:
        fid, mat, vec, _, _ = obj.kernels
        kernels = (fid, mat, vec, np.ascontiguousarray(P), x0.copy())
    return RestrictedObjective(
        dim=obj.dim, value=value, gradient=gradient, analytic_hessian=hessian, L1=float(ell),
        L2=obj.L2, delta_bound=obj.delta_bound, x0=x0, name=f"{obj.name}|restricted",
        kernels=kernels, info={"eigenvalues": dec.eigenvalues}, parent=obj, Pi_small=P,
        anchor=x0,
    )


def reduction_to_unbounded(obj, delta, eps, n_H, mode, *, ell=None, scale=1.0, rng=None,
                           ledger=None, max_iterations=None, max_grad_queries=None,
                           record_trace=True, check_invariants=True) -> SolverReport:
    """Find an eps-critical point without relying on a gradient Lipschitz constant.

    Directions whose estimated curvature exceeds ``ell`` in magnitude are frozen
    while restarted AGD solves the rest to accuracy eps/2; one Newton step on
    the frozen directions then clears their gradient.
    """
    if int(n_H) < 1:
        raise InvalidParameterError("the Hessian budget n_H must be at least 1")
    if delta < 0:
        raise InvalidParameterError("delta must be nonnegative")
    L2, Delta = obj.L2, obj.delta_bound
    if not eps > 0:
        raise RegimeError("eps must be positive")
    limit = Delta ** (2.0 / 3.0) * L2 ** (1.0 / 3.0)
    if eps > limit:
        raise RegimeError(f"eps={eps:.6g} exceeds Delta^(2/3) L2^(1/3) = {limit:.6g}")
    if mode.certified_delta(obj) > delta:
        raise ContractError(
            f"oracle mode guarantees accuracy {mode.certified_delta(obj):.6g}, above delta={delta:.6g}")
    params = ReductionParams.from_problem(L2, Delta, delta, eps, n_H, obj.L1)
    ell = params.ell if ell is None else float(ell)
    if rng is None:
        rng = np.random.default_rng(mode.seed)
    ledger = ledger if ledger is not None else QueryLedger()
    x0 = np.array(obj.x0, dtype=float)

    with ledger.phase("restricted_solve"):
        before = ledger.grad_count
        H = obj.hessian_estimate(x0, mode, ledger, rng)
        init_cost = ledger.grad_count - before
    restricted = build_restricted(obj, x0, H, ell)
    P = restricted.Pi_small
    H_small = HessianEstimate(0.5 * (P @ H.matrix @ P + (P @ H.matrix @ P).T), x0, H.delta)
    sub = restarted_agd(
        restricted, delta, eps / 2.0, n_H, mode, scale=scale, rng=rng, ledger=ledger,
        initial_hessian=H_small, max_iterations=max_iterations,
        max_grad_queries=max_grad_queries, record_trace=record_trace,
        check_invariants=check_invariants, phase="restricted_solve")
    x_out = sub.x_out

    P_big = np.eye(obj.dim) - P
    extra_grads = 0
    with ledger.phase("newton_correction"):
        g_out = np.asarray(obj.gradient(x_out), dtype=float)
        ledger.charge(grad=1)
        extra_grads += 1
        step = pinv_on_subspace(H.matrix, P_big) @ g_out
        y = x_out - step
    with ledger.phase("final_check"):
        g_y = np.asarray(obj.gradient(y), dtype=float)
        f_y = float(obj.value(y))
        ledger.charge(grad=1, value=1)
        extra_grads += 1

    f0 = float(obj.value(x0))
    f_out = float(obj.value(x_out))
    move = float(np.linalg.norm(x_out - x0))
    delta_at_out = delta + L2 * move
    step_cap = 2.0 * math.sqrt(3.0 * params.Delta_out / ell)
    big_cap = 2.0 * delta_at_out * math.sqrt(3.0 * params.Delta_out / ell) \
        + 6.0 * L2 * params.Delta_out / ell
    grad_norm = float(np.linalg.norm(g_y))
    hypotheses = (sub.terminated == "eps_critical" and move <= params.R_out
                  and f_out - f0 + Delta <= params.Delta_out and ell >= params.required_ell)
    checks = {
        "newton_step_norm": float(np.linalg.norm(step)),
        "newton_step_cap": step_cap,
        "large_subspace_grad": float(np.linalg.norm(P_big @ g_y)),
        "large_subspace_grad_cap": big_cap,
        "theorem_hypotheses": bool(hypotheses),
        "small_subspace_rank": int(round(np.trace(P))),
        "grad_query_ceiling": sub.checks.get("grad_query_ceiling"),
    }
    if sub.terminated != "eps_critical":
        terminated = sub.terminated
    elif grad_norm <= eps:
        terminated = "eps_critical"
    else:
        terminated = "not_critical"
    report = SolverReport(
        x_out=y, grad_norm_final=grad_norm, f_final=f_y, ledger=ledger,
        iterations=sub.iterations, terminated=terminated, method="reduction", trace=sub.trace,
        params=params, agd_params=sub.agd_params, checks=checks,
        hess_events=[(0, init_cost)], extra_grad_queries=extra_grads,
        extra={"subreport": sub, "ell": ell, "x_restricted": x_out},
    )
    if check_invariants and hypotheses:
        problems = []
        if checks["newton_step_norm"] > step_cap:
            problems.append("Newton step longer than its ceiling")
        if checks["large_subspace_grad"] > big_cap:
            problems.append("stiff-subspace gradient above its ceiling")
        if grad_norm > eps:
            problems.append("final point is not eps-critical")
        if problems:
            err = InvariantViolation("; ".join(problems))
            err.report = report
            raise err
    return report
