"""Closed-form gradient-query counts for critical-point methods, O-constants set to 1."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, RegimeError
from .restarted import c_delta

METHODS = ("vavasis", "li_lin", "nesterov_polyak", "doikov", "jiang", "ours_cor13", "ours_thm12")
NEEDS_L1 = {"vavasis", "li_lin", "jiang"}
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
TRADEOFF_CONSTANT = math.sqrt(GOLDEN)
LOG_POWER = 18


@dataclass(frozen=True)
class ComplexityInputs:
    d: float
    L1: Optional[float]
    L2: float
    Delta: float
    eps: float
    n_H: int = 1
    delta: float = 0.0

    def __post_init__(self):
        for name in ("d", "L2", "Delta", "eps"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.L1 is not None and not self.L1 > 0:
            raise InvalidParameterError("L1 must be positive")
        if int(self.n_H) < 1:
            raise InvalidParameterError("n_H must be at least 1")
        if self.delta < 0:
            raise InvalidParameterError("delta must be nonnegative")


def _check_regime(method, x):
    cap = x.Delta ** (2.0 / 3.0) * x.L2 ** (1.0 / 3.0)
    if method != "vavasis" and x.eps > cap:
        raise RegimeError(f"{method}: eps={x.eps:.6g} exceeds Delta^(2/3) L2^(1/3) = {cap:.6g}")
    if x.L1 is None:
        if method in NEEDS_L1:
            raise InvalidParameterError(f"{method} needs L1")
        return
    if method != "vavasis" and x.eps > x.L1 ** 2 / x.L2:
        raise RegimeError(f"{method}: eps={x.eps:.6g} exceeds L1^2/L2 = {x.L1 ** 2 / x.L2:.6g}")
    if method == "jiang" and x.eps > x.Delta * x.L2 / x.L1:
        raise RegimeError(f"jiang: eps={x.eps:.6g} exceeds Delta L2/L1 = {x.Delta * x.L2 / x.L1:.6g}")


def predicted_queries(method, inputs: ComplexityInputs, log_factor=True) -> float:
    """Gradient queries predicted for ``method`` with every O-constant equal to 1.

    ``ours_thm12`` keeps the literal log2^18(L1/c_delta + 16) factor unless
    ``log_factor`` is off; without L1 the ratio uses c_ell instead.
    """
    if method not in METHODS:
        raise InvalidParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    x = inputs
    _check_regime(method, x)
    d, L1, L2, D, e = float(x.d), x.L1, x.L2, x.Delta, x.eps
    if method == "vavasis":
        return 2.0 ** d + e ** (-2.0 * d / (d + 2.0))
    if method == "li_lin":
        return math.sqrt(L1) * L2 ** 0.25 * D * e ** -1.75
    if method == "nesterov_polyak":
        return d * math.sqrt(L2) * D * e ** -1.5
    if method == "doikov":
        return math.sqrt(d * L2) * D * e ** -1.5 + d
    if method == "jiang":
        return d ** 0.25 * L1 ** 0.25 * L2 ** 0.375 * D * e ** -1.625
    if method == "ours_cor13":
        return d ** (1.0 / 3.0) * math.sqrt(L2) * D * e ** -1.5 + d
    cd = c_delta(L1, L2, D, x.delta, e, x.n_H)
    core = D * L2 ** 0.25 * math.sqrt(cd) * e ** -1.75
    if not log_factor or cd == 0.0:
        return core
    top = L1 if L1 is not None else L2 ** 2 * D ** 3 / e ** 4 + D * x.delta ** 2 / e ** 2 + x.delta
    return core * math.log2(top / cd + 16.0) ** LOG_POWER


def comparison_table(inputs: ComplexityInputs):
    """Rows of (method, value or None, note) for every method."""
    rows = []
    for method in METHODS:
        try:
            rows.append((method, predicted_queries(method, inputs), ""))
        except (RegimeError, InvalidParameterError) as exc:
            rows.append((method, None, str(exc)))
    return rows


def tradeoff_ratio(d, L1, L2, Delta, eps):
    """min{sqrt(d L2) Delta eps^-3/2 + d, L1^1/2 L2^1/4 Delta eps^-7/4} over d^1/4 L1^1/4 L2^3/8 Delta eps^-13/8."""
    d, L1, L2, Delta, eps = (np.asarray(v, dtype=float) for v in (d, L1, L2, Delta, eps))
    A = np.sqrt(d * L2) * Delta * eps ** -1.5
    B = np.sqrt(L1) * L2 ** 0.25 * Delta * eps ** -1.75
    G = d ** 0.25 * L1 ** 0.25 * L2 ** 0.375 * Delta * eps ** -1.625
    return np.minimum(A + d, B) / G


def admissible_eps_cap(L1, L2, Delta):
    return np.minimum(np.minimum(L1 ** 2 / L2, Delta ** (2.0 / 3.0) * L2 ** (1.0 / 3.0)), Delta * L2 / L1)


def sample_tradeoff_inputs(n, rng, log10_span=6.0, eps_span=6.0):
    """Log-uniform (d, L1, L2, Delta) with eps drawn log-uniformly below its admissible cap.

    ``d`` is a positive real, as in the lemma's hypothesis.
    """
    L1, L2, Delta = 10.0 ** rng.uniform(-log10_span / 2, log10_span / 2, size=(3, n))
    d = 10.0 ** rng.uniform(-2.0, log10_span, size=n)
    eps = admissible_eps_cap(L1, L2, Delta) * 10.0 ** -rng.uniform(0.0, eps_span, size=n)
    return d, L1, L2, Delta, eps


def balancing_point(L2=1.0, Delta=1.0):
    """Inputs where every regime constraint is tight and the ratio reaches sqrt(golden ratio)."""
    L1 = Delta ** (1.0 / 3.0) * L2 ** (2.0 / 3.0)
    eps = Delta ** (2.0 / 3.0) * L2 ** (1.0 / 3.0)
    # phi = sqrt(L1) / (sqrt(d) L2^1/4 eps^1/4) equals the golden ratio
    d = (math.sqrt(L1) / (GOLDEN * L2 ** 0.25 * eps ** 0.25)) ** 2
    return d, L1, L2, Delta, eps


def verify_tradeoff_lemma(trials=100_000, seed=0, probe=True):
    """Monte Carlo check that the min-over-methods ratio never exceeds sqrt((1+sqrt 5)/2).

    Returns a dict with ``max_ratio``, ``pass``, the argmax inputs and, when
    ``probe`` is set, the ratio at and around the balancing point.
    """
    if int(trials) < 1:
        raise InvalidParameterError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    d, L1, L2, Delta, eps = sample_tradeoff_inputs(int(trials), rng)
    ratios = tradeoff_ratio(d, L1, L2, Delta, eps)
    worst = int(np.argmax(ratios))
    out = {
        "trials": int(trials),
        "max_ratio": float(ratios[worst]),
        "argmax": {"d": float(d[worst]), "L1": float(L1[worst]), "L2": float(L2[worst]),
                   "Delta": float(Delta[worst]), "eps": float(eps[worst])},
        "constant": TRADEOFF_CONSTANT,
    }
    if probe:
        bd, bL1, bL2, bD, be = balancing_point()
        factors = np.exp(rng.uniform(-0.05, 0.05, size=(3, 2000)))
        pd, pL1 = bd * factors[0], bL1 * factors[1]
        pe = np.minimum(be * factors[2], admissible_eps_cap(pL1, bL2, bD))
        near = tradeoff_ratio(pd, pL1, bL2, bD, pe)
        out["balancing_ratio"] = float(tradeoff_ratio(bd, bL1, bL2, bD, be))
        out["probe_max_ratio"] = float(near.max())
        out["max_ratio"] = max(out["max_ratio"], out["balancing_ratio"], out["probe_max_ratio"])
    out["pass"] = bool(out["max_ratio"] <= TRADEOFF_CONSTANT + 1e-9)
    return out
