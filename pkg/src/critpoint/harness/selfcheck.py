"""Property suites bundled into one pass/fail gate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bounds import TRADEOFF_CONSTANT, verify_tradeoff_lemma
from ..errors import CritpointError
from ..families import make_test_objective
from ..oracle import HessianMode, QueryLedger, _base_hessian_estimate
from ..spectral import (
    PHI_FLOOR, BandConstants, davis_kahan_check, p_max_for, phi, pinv_on_subspace,
    project_interval, sym_eigendecomp,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SelfcheckReport:
    suites: tuple

    @property
    def passed(self):
        return all(s.passed for s in self.suites)

    def lines(self):
        return [f"{'PASS' if s.passed else 'FAIL'}  {s.name:<18} {s.detail}" for s in self.suites]


def _random_scales(rng, n):
    delta = 10.0 ** rng.uniform(-4, 0, size=n)
    L1 = delta * 2.0 ** rng.uniform(1, 20, size=n)
    return delta, L1


def _band_edges(delta, L1):
    top = int(np.ceil(np.log2(L1 / delta))) + 1
    k = np.arange(0, top + 1)
    edges = delta * 2.0 ** k
    return np.concatenate((edges, edges * (1 + 1e-9), edges * (1 - 1e-9)))


def suite_phi_monotonicity(phi_fn, rng, n=50, grid=2000):
    worst = 0.0
    for delta, L1 in zip(*_random_scales(rng, n)):
        lam = np.sort(np.concatenate((np.linspace(-L1, L1, grid), _band_edges(delta, L1),
                                      -_band_edges(delta, L1))))
        lam = lam[np.abs(lam) <= L1]
        ratio = lam / phi_fn(lam, delta, L1)
        drop = float(np.max(-(np.diff(ratio)) / np.maximum(np.abs(ratio[1:]), 1e-300), initial=0.0))
        worst = max(worst, drop)
    return SuiteResult("phi_monotonicity", worst <= 1e-12, f"largest relative drop {worst:.2e}")


def suite_bands(phi_fn, rng, n=50, per_band=40):
    failures = 0
    checked = 0
    for delta, L1 in zip(*_random_scales(rng, n)):
        pm = p_max_for(L1, delta)
        for p in range(1, pm + 1):
            lo, hi = 2.0 ** p * delta, 2.0 ** (p + 1) * delta
            lam = np.concatenate((rng.uniform(lo, hi, per_band), [hi, lo * (1 + 1e-9)]))
            lam = lam * rng.choice((-1.0, 1.0), size=lam.size)
            ratio = np.abs(lam) / phi_fn(lam, delta, L1)
            c = BandConstants.at(p, pm)
            bad = (ratio <= c.l_p) | (ratio > c.r_p * (1 + 1e-12))
            failures += int(bad.sum())
            checked += lam.size
    return SuiteResult("bands", failures == 0, f"{failures} of {checked} points outside (l_p, r_p]")


def suite_hhat_floor(phi_fn, rng, n=50, grid=4000):
    worst = np.inf
    for delta, L1 in zip(*_random_scales(rng, n)):
        pm = p_max_for(L1, delta)
        lam = np.concatenate((np.linspace(0.0, 4 * L1, grid), _band_edges(delta, 4 * L1)))
        worst = min(worst, float(np.min(phi_fn(lam, delta, L1)) / (delta * pm)))
        # also through an assembled operator with a random basis
        d = 8
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        eig = rng.choice(lam, size=d)
        H = (Q * eig) @ Q.T
        vals = phi_fn(sym_eigendecomp(0.5 * (H + H.T)).eigenvalues, delta, L1)
        H_hat = (Q * np.sort(vals)) @ Q.T
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (H_hat + H_hat.T))[0]) / (delta * pm))
    ok = worst >= PHI_FLOOR * (1 - 1e-9)
    return SuiteResult("hhat_floor", ok, f"min phi / (delta p_max) = {worst:.6f} (floor {PHI_FLOOR})")


def _dk_instance(rng):
    d = int(rng.integers(2, 21))
    lam = np.sort(rng.uniform(-5, 5, d))
    i, j = sorted(rng.choice(d, size=2, replace=True))
    a, b = lam[i], lam[j]
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    M = (Q * lam) @ Q.T
    outside = np.concatenate((lam[:i], lam[j + 1:]))
    gap = np.min(np.minimum(np.abs(outside - a), np.abs(outside - b))) if outside.size else 5.0
    gamma = rng.uniform(0.2, 0.9) * gap
    E = rng.standard_normal((d, d))
    E = 0.5 * (E + E.T)
    xi_target = rng.uniform(0.01, 0.9) * gamma
    E *= xi_target / np.linalg.norm(E, 2)
    return 0.5 * (M + M.T), 0.5 * (M + M.T) + E, a, b, gamma


def suite_davis_kahan(rng, n=200):
    """The bound is asserted only when no M eigenvalue sits within gamma + xi outside [a, b]."""
    used = failures = 0
    attempts = 0
    while used < n and attempts < 20 * n:
        attempts += 1
        M, Mt, a, b, gamma = _dk_instance(rng)
        rep = davis_kahan_check(M, Mt, a, b, gamma)
        lam = np.linalg.eigvalsh(M)
        near = ((lam >= a - gamma - rep.xi) & (lam < a)) | ((lam > b) & (lam <= b + gamma + rep.xi))
        if not rep.admissible or np.any(near):
            continue
        used += 1
        failures += int(not rep.passed)
    ok = failures == 0 and used == n
    return SuiteResult("davis_kahan", ok, f"{failures} failures in {used} separated instances")


def suite_fd_accuracy(fd_builder, rng):
    worst = 0.0
    cost_ok = True
    cases = [("quad_cos", 5, {}), ("quad_cos", 12, {}), ("random_cubic_reg", 6, {"x0_scale": 1.0})]
    try:
        for family, d, params in cases:
            obj = make_test_objective(family, d, params, seed=int(rng.integers(1 << 30)))
            for delta in (1e-2, 1e-1):
                x = obj.x0 + rng.standard_normal(d)
                ledger = QueryLedger()
                H = _base_hessian_estimate(obj, x, HessianMode.finite_difference(delta), ledger, None,
                                           fd_builder=fd_builder)
                err = np.linalg.norm(H.matrix - obj.analytic_hessian(x), 2) / delta
                worst = max(worst, float(err))
                cost_ok &= ledger.grad_count == 2 * d and ledger.hess_count == 1
    except CritpointError as exc:
        return SuiteResult("fd_accuracy", False, f"{type(exc).__name__}: {exc}")
    ok = worst <= 1.0 and cost_ok
    return SuiteResult("fd_accuracy", ok, f"max error/delta = {worst:.3e}, 2d gradients per build: {cost_ok}")


def suite_tradeoff(rng, trials=20000):
    rep = verify_tradeoff_lemma(trials, seed=int(rng.integers(1 << 30)))
    return SuiteResult("tradeoff_lemma", rep["pass"],
                       f"max ratio {rep['max_ratio']:.6f} vs {TRADEOFF_CONSTANT:.6f}")


def suite_projectors(rng, n=50):
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(1, 15))
        A = rng.standard_normal((d, d))
        H = 0.5 * (A + A.T)
        dec = sym_eigendecomp(H)
        ell = rng.uniform(0.1, 2.0)
        P = project_interval(dec, 0.0, ell, abs_mode=True)
        Q = np.eye(d) - P
        rank = int(np.sum(np.abs(dec.eigenvalues) <= ell))
        worst = max(worst, np.linalg.norm(P @ P - P), np.linalg.norm(P - P.T),
                    abs(np.trace(P) - rank), np.linalg.norm(P @ H - H @ P))
        X = pinv_on_subspace(H, Q)
        B = Q @ H @ Q
        worst = max(worst, np.linalg.norm(B @ X @ B - B) / max(1.0, np.linalg.norm(B)),
                    np.linalg.norm(X @ B @ X - X) / max(1.0, np.linalg.norm(X)),
                    np.linalg.norm(X @ P))
    return SuiteResult("projectors", worst <= 1e-9, f"largest identity residual {worst:.2e}")


def selfcheck(phi_fn=None, fd_builder=None, seed=0, davis_kahan_instances=200):
    """Run every suite. ``phi_fn`` and ``fd_builder`` may be swapped for mutation testing."""
    phi_fn = phi_fn or phi
    rng = np.random.default_rng(seed)
    suites = (
        suite_phi_monotonicity(phi_fn, rng),
        suite_bands(phi_fn, rng),
        suite_hhat_floor(phi_fn, rng),
        suite_davis_kahan(rng, davis_kahan_instances),
        suite_fd_accuracy(fd_builder, rng),
        suite_tradeoff(rng),
        suite_projectors(rng),
    )
    return SelfcheckReport(suites)
