"""Inner loops shared by the solvers.

Everything here sticks to the subset of numpy that numba compiles, so the
same source runs compiled or interpreted (see ``_accel``).
"""
import contextlib
import threading

import numpy as np

from ._accel import interpreted, kernel
from .families import (
    CUSTOM, QUAD_COS, SADDLE_BAND, SEPARABLE_QUARTIC, cubic_grad, cubic_value, quad_cos_grad,
    quad_cos_value, quartic_grad, quartic_value, saddle_grad, saddle_value,
)

# Critical-or-Progress outcomes.
TRIGGERED = 0
AVERAGED = 1
BUDGET = 2
NONFINITE = 3

# Restarted segment exits.
SEG_EPS_CRITICAL = 0
SEG_NEED_REFRESH = 1
SEG_TRACE_FULL = 2
SEG_ITER_CAP = 3
SEG_BUDGET = 4
SEG_NONFINITE = 5

STEP_INNER = 0
STEP_NEGATIVE_CURVATURE = 1
STEP_TERMINAL = 2

# Columns of the restarted trace buffer.
T_KIND, T_F, T_GNORM, T_DIST, T_HESS, T_GRADS, T_KSTOP, T_OUTCOME, T_MOVE = range(9)
TRACE_COLS = 9

# Columns of the Critical-or-Progress trace buffer.
A_F, A_GNORM, A_STEP, A_TRIGGER = range(4)


@kernel
def jacobi_eigh(M, max_sweeps, rel_tol):
    """Cyclic Jacobi eigensolver.

    A rotation is skipped once ``|a_pq| <= rel_tol * sqrt(|a_pp a_qq|)``, so
    small eigenvalues keep relative accuracy next to huge ones. Returns
    ``(eigenvalues, eigenvectors, sweeps, converged)``.
    """
    a = M.copy()
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    converged = n < 2
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                if abs(apq) <= rel_tol * np.sqrt(abs(app) * abs(aqq)) or abs(apq) < 1e-300:
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        if not rotated:
            converged = True
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    order = np.argsort(w, kind="mergesort")
    return w[order], v[:, order], sweeps, converged


@kernel
def family_value(fid, x, mat, vec):
    if fid == QUAD_COS:
        return quad_cos_value(x, mat, vec)
    if fid == SEPARABLE_QUARTIC:
        return quartic_value(x, mat, vec)
    if fid == SADDLE_BAND:
        return saddle_value(x, mat, vec)
    return cubic_value(x, mat, vec)


@kernel
def family_grad(fid, x, mat, vec):
    if fid == QUAD_COS:
        return quad_cos_grad(x, mat, vec)
    if fid == SEPARABLE_QUARTIC:
        return quartic_grad(x, mat, vec)
    if fid == SADDLE_BAND:
        return saddle_grad(x, mat, vec)
    return cubic_grad(x, mat, vec)


@kernel
def eval_value(fid, x, mat, vec, proj, anchor):
    """Family value, optionally at the projected point anchor + proj (x - anchor)."""
    if proj.shape[0] == 0:
        return family_value(fid, x, mat, vec)
    return family_value(fid, anchor + proj @ (x - anchor), mat, vec)


@kernel
def eval_grad(fid, x, mat, vec, proj, anchor):
    if proj.shape[0] == 0:
        return family_grad(fid, x, mat, vec)
    return proj @ family_grad(fid, anchor + proj @ (x - anchor), mat, vec)


@kernel
def _all_finite(v):
    for i in range(v.shape[0]):
        if not np.isfinite(v[i]):
            return False
    return True


@kernel
def cop_loop(fid, mat, vec, proj, anchor, x0, g0, have_g0, V, phi, eta, theta, K,
             threshold, grad_budget, trace, iterates):
    """Critical-or-Progress iterations in the eigenbasis of the Hessian estimate.

    ``trace`` has either K+1 rows (filled) or zero rows (skipped); ``iterates``
    likewise stores x^(k) and y^(k) when it has 2(K+2) rows. Returns
    ``(x_out, outcome, k_stop, grad_queries, value_queries, k0)``.
    """
    d = x0.shape[0]
    record = trace.shape[0] > 0
    keep_iterates = iterates.shape[0] > 0
    mom = 1.0 - theta
    x_prev = x0.copy()
    x = x0.copy()
    x_next = np.empty(d)
    y = np.empty(d)
    coef = np.empty(d)
    lo = K // 2
    lo3 = (3 * K) // 4
    run_sum = np.zeros(d)
    best_sum = np.zeros(d)
    first_y = np.zeros(d)
    best_step = np.inf
    k0 = -1
    acc = 0.0
    n_grad = 0
    n_val = 0
    for k in range(K + 1):
        finite = True
        for i in range(d):
            y[i] = x[i] + mom * (x[i] - x_prev[i])
            if not np.isfinite(y[i]):
                finite = False
        if not finite:
            return y.copy(), NONFINITE, k, n_grad, n_val, k0
        if k == 0 and have_g0:
            gy = g0
        else:
            if n_grad >= grad_budget:
                return x.copy(), BUDGET, k, n_grad, n_val, k0
            gy = eval_grad(fid, y, mat, vec, proj, anchor)
            n_grad += 1
        if not _all_finite(gy):
            return y.copy(), NONFINITE, k, n_grad, n_val, k0
        # x_next = y - eta * V diag(1/phi) V' gy
        for j in range(d):
            c = 0.0
            for i in range(d):
                c += V[i, j] * gy[i]
            coef[j] = c / phi[j]
        for i in range(d):
            c = 0.0
            for j in range(d):
                c += V[i, j] * coef[j]
            x_next[i] = y[i] - eta * c
        lhs = k * acc
        if keep_iterates:
            iterates[2 * k, :] = x
            iterates[2 * k + 1, :] = y
        if record:
            trace[k, A_F] = eval_value(fid, y, mat, vec, proj, anchor)
            n_val += 1
            trace[k, A_GNORM] = np.sqrt(np.dot(gy, gy))
            trace[k, A_TRIGGER] = lhs
        if k >= lo:
            for i in range(d):
                run_sum[i] += y[i]
            if k == lo:
                first_y[:] = y
        if lhs >= threshold:
            return x.copy(), TRIGGERED, k, n_grad, n_val, k0
        step2 = 0.0
        for j in range(d):
            c = 0.0
            for i in range(d):
                c += V[i, j] * (x_next[i] - x[i])
            step2 += phi[j] * c * c
        step = np.sqrt(step2)
        if record:
            trace[k, A_STEP] = step
        if k >= lo3 and k <= K - 1 and step < best_step:
            best_step = step
            k0 = k
            best_sum[:] = run_sum
        acc += step2
        tmp = x_prev
        x_prev = x
        x = x_next
        x_next = tmp
    if k0 < lo:
        k0 = lo
        best_sum[:] = first_y
    return best_sum / (k0 - lo + 1), AVERAGED, K, n_grad, n_val, k0


@kernel
def restarted_segment(fid, mat, vec, proj, anchor, x, g, have_g, xbar, R,
                      nc_active, v_nc, V, phi, eta, theta, K, threshold, eps,
                      t0, t_max, grad_budget, hess_count, trace, row0, carry):
    """Run restarted outer iterations until something needs the caller.

    Exits on an eps-critical point, a pending Hessian refresh, a full trace
    buffer, the iteration cap, the gradient budget, or a non-finite value.
    ``carry`` is the number of gradient queries already spent on ``g`` that
    belong to the first row (a refresh interrupts an iteration after its
    gradient was computed). Returns
    ``(status, t, x, g, have_g, grad_queries, value_queries, rows)``.
    """
    d = x.shape[0]
    n_grad = 0
    n_val = 0
    row = row0
    t = t0
    empty_trace = np.zeros((0, 4))
    empty_iter = np.zeros((0, d))
    while True:
        grads_here = carry
        carry = 0
        if not have_g:
            if n_grad >= grad_budget:
                return SEG_BUDGET, t, x, g, have_g, n_grad, n_val, row
            g = eval_grad(fid, x, mat, vec, proj, anchor)
            n_grad += 1
            grads_here = 1
            have_g = True
        if not _all_finite(g):
            return SEG_NONFINITE, t, x, g, have_g, n_grad, n_val, row
        fx = eval_value(fid, x, mat, vec, proj, anchor)
        n_val += 1
        gnorm = np.sqrt(np.dot(g, g))
        diff = x - xbar
        dist = np.sqrt(np.dot(diff, diff))
        trace[row, T_F] = fx
        trace[row, T_GNORM] = gnorm
        trace[row, T_DIST] = dist
        trace[row, T_HESS] = hess_count
        trace[row, T_GRADS] = grads_here
        trace[row, T_KSTOP] = -1
        trace[row, T_OUTCOME] = -1
        trace[row, T_MOVE] = 0.0
        if gnorm <= eps:
            trace[row, T_KIND] = STEP_TERMINAL
            return SEG_EPS_CRITICAL, t, x, g, have_g, n_grad, n_val, row + 1
        if dist >= R:
            # The row is rewritten after the refresh; the caller carries its gradient.
            return SEG_NEED_REFRESH, t, x, g, have_g, n_grad, n_val, row
        if nc_active:
            direction = v_nc.copy()
            if np.dot(direction, g) > 0.0:
                direction = -direction
            x_new = x + R * direction
            trace[row, T_KIND] = STEP_NEGATIVE_CURVATURE
        else:
            x_new, outcome, k_stop, ng, nv, k0 = cop_loop(
                fid, mat, vec, proj, anchor, x, g, True, V, phi, eta, theta, K,
                threshold, grad_budget - n_grad, empty_trace, empty_iter)
            n_grad += ng
            n_val += nv
            trace[row, T_GRADS] += ng
            trace[row, T_KSTOP] = k_stop
            trace[row, T_OUTCOME] = outcome
            trace[row, T_KIND] = STEP_INNER
            if outcome == BUDGET:
                return SEG_BUDGET, t, x, g, have_g, n_grad, n_val, row + 1
            if outcome == NONFINITE:
                return SEG_NONFINITE, t, x, g, have_g, n_grad, n_val, row + 1
        step = x_new - x
        trace[row, T_MOVE] = np.sqrt(np.dot(step, step))
        if not _all_finite(x_new):
            return SEG_NONFINITE, t, x, g, have_g, n_grad, n_val, row + 1
        x = x_new
        have_g = False
        t += 1
        row += 1
        if t >= t_max:
            return SEG_ITER_CAP, t, x, g, have_g, n_grad, n_val, row
        if row >= trace.shape[0]:
            return SEG_TRACE_FULL, t, x, g, have_g, n_grad, n_val, row


_callbacks = threading.local()


def _callback_value(fid, x, mat, vec, proj, anchor):
    return float(_callbacks.obj.value(x))


def _callback_grad(fid, x, mat, vec, proj, anchor):
    return np.asarray(_callbacks.obj.gradient(x), dtype=float)


_cop_callback = interpreted(cop_loop, eval_value=_callback_value, eval_grad=_callback_grad)
_segment_callback = interpreted(restarted_segment, eval_value=_callback_value,
                                eval_grad=_callback_grad, cop_loop=_cop_callback)


@contextlib.contextmanager
def _bound(obj):
    previous = getattr(_callbacks, "obj", None)
    _callbacks.obj = obj
    try:
        yield
    finally:
        _callbacks.obj = previous


def bind(obj):
    """Pick loop implementations for ``obj``.

    Returns ``(cop, segment, eval_args, context)``. Objectives with family
    kernels use the compiled loops; anything else runs the interpreted loops
    calling back into ``obj.value`` / ``obj.gradient`` inside ``context``.
    """
    if obj.kernels is not None:
        return cop_loop, restarted_segment, tuple(obj.kernels), contextlib.nullcontext()
    args = (CUSTOM, np.zeros((1, 1)), np.zeros(1), np.zeros((0, 0)), np.zeros(0))
    return _cop_callback, _segment_callback, args, _bound(obj)
