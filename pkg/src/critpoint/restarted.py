"""Restarted accelerated gradient descent with lazily refreshed Hessian estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agd import MOVEMENT_FACTOR, AGDParams, check_cop_preconditions
from .errors import ContractError, InvalidParameterError, InvariantViolation, NumericError, RegimeError
from .kernels import (
    AVERAGED, SEG_BUDGET, SEG_EPS_CRITICAL, SEG_ITER_CAP, SEG_NEED_REFRESH, SEG_NONFINITE,
    SEG_TRACE_FULL, STEP_INNER, STEP_NEGATIVE_CURVATURE, STEP_TERMINAL, TRACE_COLS,
    T_DIST, T_F, T_GNORM, T_GRADS, T_HESS, T_KIND, T_KSTOP, T_MOVE, T_OUTCOME, TRIGGERED,
    bind,
)
from .oracle import QueryLedger
from .spectral import build_norm_operator, sym_eigendecomp

INT_CAP = 2 ** 62
CHUNK_ROWS = 65536
DECREASE_TOL = 1e-12

STEP_NAMES = {STEP_INNER: "inner_agd", STEP_NEGATIVE_CURVATURE: "negative_curvature",
              STEP_TERMINAL: "terminal"}

TRACE_DTYPE = np.dtype([
    ("t", np.int64), ("kind", np.int8), ("f", np.float64), ("grad_norm", np.float64),
    ("dist_ref", np.float64), ("hess_count", np.int32), ("grad_queries", np.int64),
    ("k_stop", np.int64), ("outcome", np.int8), ("movement", np.float64),
])


def log2_pow(x, power):
    return math.log2(x) ** power


@dataclass(frozen=True)
class RestartParams:
    n_H: int
    R: float
    delta_tilde: float
    p_tilde: int
    iter_cap: int

    @classmethod
    def from_problem(cls, L1, L2, Delta, delta, eps, n_H):
        if int(n_H) < 1:
            raise InvalidParameterError("the Hessian budget n_H must be at least 1")
        c = 3.0 * Delta / (n_H * eps)
        R = c * log2_pow(L1 / (delta + L2 * c) + 16.0, 8)
        delta_tilde = min(delta + L2 * R, 2.0 * L1)
        p_tilde = max(math.ceil(math.log2(L1 / delta_tilde)), 16)
        iter_cap = math.ceil(p_tilde ** 12 * Delta * math.sqrt(L2 / eps ** 3)) + 1
        return cls(int(n_H), R, delta_tilde, p_tilde, iter_cap)

    def decrease(self, eps, L2):
        """Per-iteration decrease p~^{-12} sqrt(eps^3/L2) guaranteed before termination."""
        return self.p_tilde ** -12 * math.sqrt(eps ** 3 / L2)


def c_delta(L1, L2, Delta, delta, eps, n_H):
    return min(L1 if L1 is not None else math.inf, delta + Delta * L2 / (n_H * eps))


def restarted_query_ceiling(L1, L2, Delta, delta, eps, n_H):
    """2 Delta L2^{1/4} c_delta^{1/2} eps^{-7/4} log2^18(L1/c_delta + 16)."""
    cd = c_delta(L1, L2, Delta, delta, eps, n_H)
    return 2.0 * Delta * L2 ** 0.25 * math.sqrt(cd) * eps ** -1.75 * log2_pow(L1 / cd + 16.0, 18)


def output_bounds(L1, L2, Delta, delta, eps, n_H):
    """Movement and suboptimality ceilings for the output point."""
    cd = c_delta(L1, L2, Delta, delta, eps, n_H)
    lg = log2_pow(L1 / cd + 16.0, 8)
    return 3.0 * Delta / eps * lg, 54.0 * cd * eps / L2 * lg + eps ** 1.5 / (6.0 * math.sqrt(L2))


@dataclass(eq=False)
class SolverReport:
    x_out: np.ndarray
    grad_norm_final: float
    f_final: float
    ledger: QueryLedger
    iterations: int
    terminated: str
    method: str = "restarted"
    trace: Optional[np.ndarray] = None
    params: Optional[object] = None
    agd_params: Optional[AGDParams] = None
    checks: dict = field(default_factory=dict)
    hess_events: list = field(default_factory=list)
    extra_grad_queries: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def step_kinds(self):
        if self.trace is None:
            return None
        return [STEP_NAMES[int(k)] for k in self.trace["kind"] if k != STEP_TERMINAL]

    def replayed_grad_count(self):
        """Gradient queries reconstructed from the trace and the recorded side costs."""
        total = self.extra_grad_queries + sum(cost for _, cost in self.hess_events)
        if "subreport" in self.extra:
            # the trace is the subroutine's own and is replayed there
            return total + self.extra["subreport"].replayed_grad_count()
        if self.trace is not None:
            total += int(self.trace["grad_queries"].sum())
        else:
            total += int(self.checks.get("trace_grad_queries", 0))
        return total


def check_eps_range(L1, L2, Delta, eps):
    if not eps > 0:
        raise RegimeError("eps must be positive")
    limit = Delta ** (2.0 / 3.0) * L2 ** (1.0 / 3.0)
    if eps > limit:
        raise RegimeError(f"eps={eps:.6g} exceeds Delta^(2/3) L2^(1/3) = {limit:.6g}")
    if L1 is not None and eps > L1 * L1 / L2:
        raise RegimeError(f"eps={eps:.6g} exceeds L1^2/L2 = {L1 * L1 / L2:.6g}")


class _TraceAccumulator:
    """Consumes trace chunks, keeping the full trace only on request."""

    def __init__(self, keep, B, decrease):
        self.keep = keep
        self.B = B
        self.decrease = decrease
        self.chunks = []
        self.prev = None  # (kind, f) of the last row of the previous chunk
        self.worst_decrease_margin = -math.inf
        self.max_move_ratio_bounded = 0.0
        self.max_move_ratio_first_step = 0.0
        self.grad_queries = 0
        self.rows = 0
        self.kind_counts = {name: 0 for name in STEP_NAMES.values()}

    def consume(self, buf, n, t_first):
        if n == 0:
            return
        rows = buf[:n]
        kind = rows[:, T_KIND].astype(np.int8)
        f = rows[:, T_F]
        if self.prev is not None:
            kind = np.concatenate(([self.prev[0]], kind))
            f = np.concatenate(([self.prev[1]], f))
        # per-iteration decrease between consecutive rows whose end point is not terminal
        active = (kind[:-1] != STEP_TERMINAL) & (kind[1:] != STEP_TERMINAL)
        if np.any(active):
            margin = np.max((f[1:] - f[:-1])[active]) + self.decrease
            self.worst_decrease_margin = max(self.worst_decrease_margin, float(margin))
        inner = rows[:, T_KIND] == STEP_INNER
        ratio = rows[:, T_MOVE] / self.B
        bounded = inner & ((rows[:, T_OUTCOME] == AVERAGED) | (rows[:, T_KSTOP] >= 2))
        first = inner & (rows[:, T_OUTCOME] == TRIGGERED) & (rows[:, T_KSTOP] < 2)
        if np.any(bounded):
            self.max_move_ratio_bounded = max(self.max_move_ratio_bounded, float(ratio[bounded].max()))
        if np.any(first):
            self.max_move_ratio_first_step = max(self.max_move_ratio_first_step, float(ratio[first].max()))
        self.grad_queries += int(rows[:, T_GRADS].sum())
        for code, name in STEP_NAMES.items():
            self.kind_counts[name] += int(np.sum(rows[:, T_KIND] == code))
        self.prev = (int(rows[-1, T_KIND]), float(rows[-1, T_F]))
        if self.keep:
            out = np.empty(n, dtype=TRACE_DTYPE)
            out["t"] = np.arange(t_first, t_first + n)
            out["kind"] = rows[:, T_KIND]
            out["f"] = rows[:, T_F]
            out["grad_norm"] = rows[:, T_GNORM]
            out["dist_ref"] = rows[:, T_DIST]
            out["hess_count"] = rows[:, T_HESS]
            out["grad_queries"] = rows[:, T_GRADS]
            out["k_stop"] = rows[:, T_KSTOP]
            out["outcome"] = rows[:, T_OUTCOME]
            out["movement"] = rows[:, T_MOVE]
            self.chunks.append(out)
        self.rows += n

    def trace(self):
        if not self.keep:
            return None
        if not self.chunks:
            return np.empty(0, dtype=TRACE_DTYPE)
        return np.concatenate(self.chunks)


def restarted_agd(obj, delta, eps, n_H, mode, *, scale=1.0, inner_factor=4.0, rng=None,
                  ledger=None, initial_hessian=None, max_iterations=None,
                  max_grad_queries=None, record_trace=True, check_invariants=True,
                  phase="restarted", chunk_rows=CHUNK_ROWS) -> SolverReport:
    """Find an eps-critical point with at most ``n_H`` Hessian-oracle queries.

    The estimate is refreshed whenever the iterate drifts a distance ``R`` from
    the point where it was taken. Strong negative curvature triggers a step of
    length ``R`` along the bottom eigenvector; otherwise Critical-or-Progress
    runs with accuracy ``inner_factor * delta_tilde``.
    """
    if obj.L1 is None:
        raise ContractError("restarted_agd needs a gradient Lipschitz constant")
    if delta < 0:
        raise InvalidParameterError("delta must be nonnegative")
    if mode.certified_delta(obj) > delta:
        raise ContractError(
            f"oracle mode guarantees accuracy {mode.certified_delta(obj):.6g}, above delta={delta:.6g}")
    L1, L2, Delta = obj.L1, obj.L2, obj.delta_bound
    check_eps_range(L1, L2, Delta, eps)
    params = RestartParams.from_problem(L1, L2, Delta, delta, eps, n_H)
    delta_eff = inner_factor * params.delta_tilde
    L1_eff = max(L1, delta_eff)
    check_cop_preconditions(delta_eff, eps, L1_eff, L2)
    agd = AGDParams.from_problem(delta_eff, eps, L1_eff, L2, scale)
    decrease = params.decrease(eps, L2)
    if rng is None:
        rng = np.random.default_rng(mode.seed)
    ledger = ledger if ledger is not None else QueryLedger()

    _, segment, eval_args, context = bind(obj)

    t_max = min(params.iter_cap, INT_CAP)
    if max_iterations is not None:
        t_max = min(t_max, int(max_iterations))
    acc = _TraceAccumulator(record_trace, agd.B, decrease)
    hess_events = []

    with ledger.phase(phase), context:
        x = np.array(obj.x0, dtype=float)
        if initial_hessian is None:
            before = ledger.grad_count
            H = obj.hessian_estimate(x, mode, ledger, rng)
            hess_events.append((0, ledger.grad_count - before))
        else:
            H = initial_hessian
        xbar = x.copy()

        def prepare(H):
            dec = sym_eigendecomp(H.matrix)
            nc = bool(dec.eigenvalues[0] < -3.0 * params.delta_tilde)
            v = np.ascontiguousarray(dec.eigenvectors[:, 0])
            if nc:
                return nc, v, np.ascontiguousarray(dec.eigenvectors), np.ones(obj.dim)
            op = build_norm_operator(H, delta_eff, L1_eff, decomposition=dec)
            return nc, v, np.ascontiguousarray(op.eigenvectors), op.phi_values

        nc, v_nc, V, phi_vals = prepare(H)
        buf = np.zeros((chunk_rows, TRACE_COLS))
        g = np.zeros(obj.dim)
        have_g = False
        carry = 0
        t = 0
        row = 0
        t_chunk = 0
        terminated = None
        while terminated is None:
            budget = INT_CAP if max_grad_queries is None else max(0, max_grad_queries - ledger.grad_count)
            status, t, x, g, have_g, n_grad, n_val, row = segment(
                *eval_args, x, g, have_g, xbar, params.R, nc, v_nc,
                V, phi_vals, agd.eta, agd.theta, agd.K, agd.threshold, eps, t, t_max,
                budget, ledger.hess_count, buf, row, carry)
            ledger.charge(grad=n_grad, value=n_val)
            carry = 0
            if status == SEG_TRACE_FULL:
                acc.consume(buf, row, t_chunk)
                t_chunk += row
                row = 0
            elif status == SEG_NEED_REFRESH:
                if ledger.hess_count >= n_H:
                    terminated = "budget_breach"
                    break
                carry = int(buf[row, T_GRADS])
                before = ledger.grad_count
                H = obj.hessian_estimate(x, mode, ledger, rng)
                hess_events.append((t, ledger.grad_count - before))
                xbar = x.copy()
                nc, v_nc, V, phi_vals = prepare(H)
            elif status == SEG_EPS_CRITICAL:
                terminated = "eps_critical"
            elif status == SEG_ITER_CAP:
                terminated = "iter_cap"
            elif status == SEG_BUDGET:
                terminated = "query_cap"
            elif status == SEG_NONFINITE:
                acc.consume(buf, row, t_chunk)
                raise NumericError(f"non-finite value at outer iteration {t}", trace=acc.trace(),
                                   iterations=t)
        acc.consume(buf, row, t_chunk)

        extra_grads = 0
        if not have_g:
            g = np.asarray(obj.gradient(x), dtype=float)
            ledger.charge(grad=1)
            extra_grads = 1
        f_final = float(obj.value(x))
        ledger.charge(value=1)

    f0 = float(obj.value(obj.x0))
    move_cap, subopt_cap = output_bounds(L1, L2, Delta, delta, eps, n_H)
    checks = {
        "decrease_required": decrease,
        "worst_decrease_margin": acc.worst_decrease_margin,
        "max_movement_over_B": acc.max_move_ratio_bounded,
        "max_first_step_movement_over_B": acc.max_move_ratio_first_step,
        "output_movement": float(np.linalg.norm(x - obj.x0)),
        "output_movement_cap": move_cap,
        "output_increase": f_final - f0,
        "output_increase_cap": subopt_cap,
        "grad_query_ceiling": restarted_query_ceiling(L1, L2, Delta, delta, eps, n_H),
        "trace_grad_queries": acc.grad_queries,
        "step_counts": dict(acc.kind_counts),
    }
    report = SolverReport(
        x_out=x, grad_norm_final=float(np.linalg.norm(g)), f_final=f_final, ledger=ledger,
        iterations=int(t), terminated=terminated, method="restarted", trace=acc.trace(),
        params=params, agd_params=agd, checks=checks, hess_events=hess_events,
        extra_grad_queries=extra_grads,
        extra={"delta_eff": delta_eff, "L1_eff": L1_eff, "f0": f0},
    )
    if check_invariants:
        _assert_invariants(report, eps)
    return report


def _assert_invariants(report, eps):
    c = report.checks
    problems = []
    if c["worst_decrease_margin"] > DECREASE_TOL:
        problems.append(f"per-iteration decrease missed by {c['worst_decrease_margin']:.3e}")
    if c["max_movement_over_B"] > MOVEMENT_FACTOR + 1e-9 / report.agd_params.B:
        problems.append(f"inner movement reached {c['max_movement_over_B']:.3f} B")
    if report.terminated == "eps_critical":
        if report.grad_norm_final > eps:
            problems.append("eps_critical exit with a large gradient")
        if c["output_movement"] > c["output_movement_cap"]:
            problems.append("output moved beyond its ceiling")
        if c["output_increase"] > c["output_increase_cap"] + DECREASE_TOL:
            problems.append("output suboptimality above its ceiling")
    if problems:
        err = InvariantViolation("; ".join(problems))
        err.report = report
        raise err
