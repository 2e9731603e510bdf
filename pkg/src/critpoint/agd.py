"""Critical-or-Progress: accelerated gradient descent in the reshaped Hessian norm."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, InvalidParameterError, InvariantViolation, NumericError
from .kernels import AVERAGED, BUDGET, NONFINITE, TRIGGERED, bind
from .spectral import build_norm_operator, p_max_for

ETA = 0.25
MOVEMENT_FACTOR = 7.0
OUTCOMES = {TRIGGERED: "triggered_progress", AVERAGED: "averaged_output", BUDGET: "query_cap"}


@dataclass(frozen=True)
class AGDParams:
    p_max: int
    eps_tilde: float
    eta: float
    B: float
    K: int
    theta: float
    scale: float
    threshold: float

    @classmethod
    def from_problem(cls, delta, eps, L1, L2, scale=1.0):
        if not 0 < scale <= 1:
            raise InvalidParameterError("scale must lie in (0, 1]")
        pm = p_max_for(L1, delta)
        eps_tilde = eps / (scale * pm ** 8)
        B = math.sqrt(eps_tilde / L2) / 3.0
        K = max(1, math.ceil(math.sqrt(delta) / (eps_tilde * L2) ** 0.25))
        threshold = 12.0 * delta * (scale * pm) * B * B
        return cls(pm, eps_tilde, ETA, B, K, 1.0 / K, float(scale), threshold)

    def progress_bound(self, L2):
        """Decrease L2^{-1/2} eps_tilde^{3/2} promised when the output is not eps-critical."""
        return self.eps_tilde ** 1.5 / math.sqrt(L2)


@dataclass(eq=False)
class AGDResult:
    x_out: np.ndarray
    outcome: str
    k_stop: int
    movement: float
    params: AGDParams
    grad_queries: int
    trace: Optional[dict] = None
    iterates: Optional[np.ndarray] = None
    averaged_until: int = -1
    extra: dict = field(default_factory=dict)

    @property
    def movement_bound_applies(self):
        """The 7B movement guarantee is only established once the loop ran two steps."""
        return self.outcome == "averaged_output" or self.k_stop >= 2


def check_cop_preconditions(delta, eps, L1, L2):
    if not delta > 0:
        raise ContractError("Critical-or-Progress needs delta > 0")
    if not delta <= L1:
        raise ContractError(f"Critical-or-Progress needs delta <= L1 (delta={delta:.6g}, L1={L1:.6g})")
    if not 0 < eps <= delta * delta / L2 * (1 + 1e-12):
        raise ContractError(f"Critical-or-Progress needs eps <= delta^2/L2 = {delta * delta / L2:.6g}")


def critical_or_progress(x0, H, delta, eps, L1, L2, obj, ledger, *, scale=1.0, g0=None,
                         record_trace=True, record_iterates=False, norm_op=None,
                         grad_budget=None, check_invariants=True) -> AGDResult:
    """Run Critical-or-Progress from ``x0`` with the Hessian estimate ``H``.

    Returns either the iterate at which the movement trigger fired or the
    average of the second-half momentum points up to the smallest late step.
    ``g0`` may supply an already paid-for gradient at ``x0``.
    """
    check_cop_preconditions(delta, eps, L1, L2)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (obj.dim,):
        raise InvalidParameterError(f"x0 has shape {x0.shape}, expected ({obj.dim},)")
    params = AGDParams.from_problem(delta, eps, L1, L2, scale)
    op = norm_op or build_norm_operator(H, delta, L1)
    loop, _, eval_args, context = bind(obj)
    K = params.K
    trace = np.zeros((K + 1, 4)) if record_trace else np.zeros((0, 4))
    iterates = np.zeros((2 * (K + 2), obj.dim)) if record_iterates else np.zeros((0, obj.dim))
    have_g0 = g0 is not None
    g0_arr = np.asarray(g0, dtype=float) if have_g0 else np.zeros(obj.dim)
    budget = np.iinfo(np.int64).max if grad_budget is None else int(grad_budget)
    with context:
        x_out, code, k_stop, n_grad, n_val, k0 = loop(
            *eval_args, x0, g0_arr, have_g0, np.ascontiguousarray(op.eigenvectors),
            op.phi_values, params.eta, params.theta, K, params.threshold, budget, trace, iterates)
    ledger.charge(grad=n_grad, value=n_val)
    rows = k_stop + 1 if record_trace else 0
    trace_dict = None
    if record_trace:
        t = trace[:rows]
        trace_dict = {
            "k": np.arange(rows),
            "f_y": t[:, 0].copy(),
            "grad_norm_y": t[:, 1].copy(),
            "step_hnorm": t[:, 2].copy(),
            "trigger_lhs": t[:, 3].copy(),
        }
    if code == NONFINITE:
        raise NumericError(f"non-finite value at inner iteration {k_stop}", trace=trace_dict,
                           iterations=k_stop)
    movement = float(np.linalg.norm(x_out - x0))
    result = AGDResult(
        x_out=x_out, outcome=OUTCOMES[code], k_stop=int(k_stop), movement=movement,
        params=params, grad_queries=int(n_grad), trace=trace_dict,
        iterates=iterates[: 2 * (k_stop + 1)] if record_iterates else None,
        averaged_until=int(k0) if code == AVERAGED else -1,
        extra={"norm_operator": op},
    )
    if check_invariants and result.movement_bound_applies and code != BUDGET:
        if movement > MOVEMENT_FACTOR * params.B + 1e-9:
            raise InvariantViolation(
                f"movement {movement:.6g} exceeds 7B = {MOVEMENT_FACTOR * params.B:.6g}")
    return result
