"""Top-level entry: pick restarted AGD or the bounded-smoothness reduction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, RegimeError
from .oracle import HessianMode
from .reduction import reduction_to_unbounded
from .restarted import c_delta, log2_pow, restarted_agd

BRANCHES = ("restarted", "reduction")


def dispatch_threshold(L2, Delta, delta, eps):
    """L2^2 Delta^3/eps^4 + Delta delta/eps^2 + delta: restarted AGD runs when L1 is at most this."""
    return L2 ** 2 * Delta ** 3 / eps ** 4 + Delta * delta / eps ** 2 + delta


def c_ell(L1, L2, Delta, delta, eps):
    cap = L2 ** 2 * Delta ** 3 / eps ** 4 + Delta * delta ** 2 / eps ** 2 + delta
    return min(L1 if L1 is not None else math.inf, cap)


def predicted_ceiling(L1, L2, Delta, delta, eps, n_H, log_factor=True):
    """Delta L2^{1/4} c_delta^{1/2} eps^{-7/4}, times log2^18(c_ell/c_delta + 16) unless disabled."""
    cd = c_delta(L1, L2, Delta, delta, eps, n_H)
    core = Delta * L2 ** 0.25 * math.sqrt(cd) * eps ** -1.75
    if not log_factor:
        return core
    return core * log2_pow(c_ell(L1, L2, Delta, delta, eps) / cd + 16.0, 18)


@dataclass(frozen=True)
class DispatchDecision:
    branch: str
    threshold_value: float
    c_delta: float
    c_ell: float
    predicted_grad_ceiling: float
    rule: str = "proof"


def check_regime(L1, L2, Delta, eps):
    if not eps > 0:
        raise RegimeError("eps must be positive")
    limit = Delta ** (2.0 / 3.0) * L2 ** (1.0 / 3.0)
    if eps > limit:
        raise RegimeError(f"eps={eps:.6g} exceeds Delta^(2/3) L2^(1/3) = {limit:.6g}")
    if L1 is not None and eps > L1 * L1 / L2:
        raise RegimeError(f"eps={eps:.6g} exceeds L1^2/L2 = {L1 * L1 / L2:.6g}")


def decide(obj, delta, eps, n_H, rule="proof") -> DispatchDecision:
    """Choose a branch without running it.

    ``rule="proof"`` compares L1 against the dispatch threshold (which carries
    Delta delta/eps^2); ``rule="c_ell"`` compares against the c_ell cap (which
    carries Delta delta^2/eps^2). A callable ``rule(obj, delta, eps, n_H)`` may
    return a branch name directly.
    """
    L1, L2, Delta = obj.L1, obj.L2, obj.delta_bound
    thr = dispatch_threshold(L2, Delta, delta, eps)
    cd = c_delta(L1, L2, Delta, delta, eps, n_H)
    cl = c_ell(L1, L2, Delta, delta, eps)
    ceiling = predicted_ceiling(L1, L2, Delta, delta, eps, n_H)
    if callable(rule):
        branch = rule(obj, delta, eps, n_H)
        label = getattr(rule, "__name__", "custom")
        if branch not in BRANCHES:
            raise InvalidParameterError(f"dispatch rule returned {branch!r}")
        if branch == "restarted" and L1 is None:
            raise InvalidParameterError("the restarted branch needs a gradient Lipschitz constant")
    else:
        if rule == "proof":
            limit = thr
        elif rule == "c_ell":
            limit = L2 ** 2 * Delta ** 3 / eps ** 4 + Delta * delta ** 2 / eps ** 2 + delta
        else:
            raise InvalidParameterError(f"unknown dispatch rule {rule!r}")
        label = rule
        branch = "restarted" if L1 is not None and L1 <= limit else "reduction"
    return DispatchDecision(branch, thr, cd, cl, ceiling, label)


def find_critical_point(obj, delta, eps, n_H, mode, *, rule="proof", **kwargs):
    """Return ``(report, decision)`` for an eps-critical point found with at most ``n_H`` Hessian queries.

    Extra keyword arguments go to the selected solver.
    """
    if int(n_H) < 1:
        raise InvalidParameterError("the Hessian budget n_H must be at least 1")
    check_regime(obj.L1, obj.L2, obj.delta_bound, eps)
    decision = decide(obj, delta, eps, n_H, rule)
    if decision.branch == "restarted":
        report = restarted_agd(obj, delta, eps, n_H, mode, **kwargs)
    else:
        report = reduction_to_unbounded(obj, delta, eps, n_H, mode, **kwargs)
    report.extra["decision"] = decision
    return report, decision


def fd_predicted_total(d, L1, L2, Delta, delta, eps, n_H, log_factor=False):
    return predicted_ceiling(L1, L2, Delta, delta, eps, n_H, log_factor) + 2.0 * d * n_H


def choose_fd_budget(d, L1, L2, Delta, delta, eps, log_factor=False, upper=None):
    """Minimise predicted gradients plus 2d per finite-difference Hessian over n_H.

    Scans n_H in {1, ..., upper} with ``upper`` defaulting to 64 ceil(d^(2/3)).
    Returns ``(n_H, predicted_total)``.
    """
    if upper is None:
        upper = 64 * math.ceil(d ** (2.0 / 3.0))
    n = np.arange(1, int(upper) + 1, dtype=float)
    cd = np.minimum(L1 if L1 is not None else np.inf, delta + Delta * L2 / (n * eps))
    total = Delta * L2 ** 0.25 * np.sqrt(cd) * eps ** -1.75
    if log_factor:
        total = total * np.log2(c_ell(L1, L2, Delta, delta, eps) / cd + 16.0) ** 18
    total = total + 2.0 * d * n
    best = int(np.argmin(total))
    return best + 1, float(total[best])


def fd_pipeline(obj, eps, n_H_opt=None, *, delta=None, log_factor=False, rule="proof", **kwargs):
    """Solve with a finite-difference Hessian oracle, choosing n_H when it is not given.

    ``delta`` defaults to ``eps``. The 2d gradients of every Hessian build are
    charged to the same ledger as the solver's own gradients.
    """
    delta = float(eps if delta is None else delta)
    if not delta > 0:
        raise InvalidParameterError("finite-difference oracle needs delta > 0")
    check_regime(obj.L1, obj.L2, obj.delta_bound, eps)
    if n_H_opt is None:
        n_H, predicted = choose_fd_budget(obj.dim, obj.L1, obj.L2, obj.delta_bound, delta, eps,
                                          log_factor)
    else:
        n_H = int(n_H_opt)
        predicted = fd_predicted_total(obj.dim, obj.L1, obj.L2, obj.delta_bound, delta, eps, n_H,
                                       log_factor)
    mode = HessianMode.finite_difference(delta)
    report, decision = find_critical_point(obj, delta, eps, n_H, mode, rule=rule, **kwargs)
    report.extra["fd_budget"] = {"n_H": n_H, "predicted_total": predicted,
                                 "log_factor": bool(log_factor)}
    return report
