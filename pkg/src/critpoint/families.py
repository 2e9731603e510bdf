"""Built-in test objectives with analytic smoothness constants.

Every family exposes its value and gradient as kernels with the signature
``(x, mat, vec)``; an objective's ``kernels`` tuple names the family by an
integer id so the compiled solver loops can dispatch to them.

quad_cos
    ``0.5 x'Ax + beta * sum(cos(x_i))`` with ``A`` PSD. ``L2 = beta`` and
    ``L1 = ||A|| + beta``. An optional stiff axis prepends one large
    eigenvalue to ``A``.
separable_quartic
    ``sum(h(x_i)) - mu/2 ||x||^2`` where ``h(t) = t^4/12`` on ``|t| <= 1``,
    continued outside so that ``h''(t) = 2|t| - 1``. ``L2 = 2``, no ``L1``.
saddle_band
    In rotated coordinates ``z = Q'x``: ``kappa sigma^2 cos(z_0/sigma)`` plus
    ``a_i z_i^2 / 2`` with dyadic ``a_i``. The start has ``z_0 = 0`` so the
    Hessian there has eigenvalue ``-kappa``. ``L2 = kappa/sigma``.
random_cubic_reg
    ``g'x + 0.5 x'Ax + M/6 ||x||^3`` with indefinite ``A``. ``L2 = M``, no
    ``L1``. The infimum is found from the secular equation.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ._accel import kernel
from .errors import InvalidParameterError
from .oracle import Objective

FAMILIES = ("quad_cos", "separable_quartic", "saddle_band", "random_cubic_reg")

# Integer ids used by the compiled loops to pick a family.
CUSTOM, QUAD_COS, SEPARABLE_QUARTIC, SADDLE_BAND, RANDOM_CUBIC_REG = range(5)
NO_PROJ = np.zeros((0, 0))
NO_ANCHOR = np.zeros(0)


@kernel
def quad_cos_value(x, mat, vec):
    return 0.5 * np.dot(x, mat @ x) + vec[0] * np.sum(np.cos(x))


@kernel
def quad_cos_grad(x, mat, vec):
    return mat @ x - vec[0] * np.sin(x)


@kernel
def _quartic_h(t):
    a = abs(t)
    if a <= 1.0:
        return t ** 4 / 12.0
    return a ** 3 / 3.0 - a * a / 2.0 + a / 3.0 - 1.0 / 12.0


@kernel
def _quartic_dh(t):
    a = abs(t)
    if a <= 1.0:
        return t ** 3 / 3.0
    return np.sign(t) * (a * a - a + 1.0 / 3.0)


@kernel
def quartic_value(x, mat, vec):
    total = 0.0
    for i in range(x.shape[0]):
        total += _quartic_h(x[i]) - 0.5 * vec[0] * x[i] * x[i]
    return total


@kernel
def quartic_grad(x, mat, vec):
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        g[i] = _quartic_dh(x[i]) - vec[0] * x[i]
    return g


@kernel
def saddle_value(x, mat, vec):
    z = mat.T @ x
    kappa = vec[0]
    sigma = vec[1]
    total = kappa * sigma * sigma * np.cos(z[0] / sigma)
    for i in range(1, z.shape[0]):
        total += 0.5 * vec[i + 1] * z[i] * z[i]
    return total


@kernel
def saddle_grad(x, mat, vec):
    z = mat.T @ x
    gz = np.empty_like(z)
    gz[0] = -vec[0] * vec[1] * np.sin(z[0] / vec[1])
    for i in range(1, z.shape[0]):
        gz[i] = vec[i + 1] * z[i]
    return mat @ gz


@kernel
def cubic_value(x, mat, vec):
    r = np.sqrt(np.dot(x, x))
    return np.dot(vec[1:], x) + 0.5 * np.dot(x, mat @ x) + vec[0] / 6.0 * r ** 3


@kernel
def cubic_grad(x, mat, vec):
    r = np.sqrt(np.dot(x, x))
    return vec[1:] + mat @ x + 0.5 * vec[0] * r * x


def random_orthogonal(d, rng):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def _bind(value_kernel, grad_kernel, mat, vec):
    def value(x):
        return float(value_kernel(np.asarray(x, dtype=float), mat, vec))

    def gradient(x):
        return grad_kernel(np.asarray(x, dtype=float), mat, vec)

    return value, gradient


def _quad_cos(d, params, rng):
    beta = float(params.get("beta", 0.5))
    if not beta > 0:
        raise InvalidParameterError("quad_cos needs beta > 0")
    stiff = params.get("stiff")
    soft_d = d - 1 if stiff is not None else d
    if "A" in params:
        A = np.array(params["A"], dtype=float)
        if A.shape != (d, d):
            raise InvalidParameterError(f"A must be {d}x{d}")
    else:
        a_max = float(params.get("a_max", 4.0))
        eigs = rng.uniform(0.0, a_max, size=soft_d)
        Q = random_orthogonal(soft_d, rng) if soft_d > 0 else np.zeros((0, 0))
        A_soft = (Q * eigs) @ Q.T
        A_soft = 0.5 * (A_soft + A_soft.T)
        if stiff is not None:
            A = np.zeros((d, d))
            A[0, 0] = float(stiff)
            A[1:, 1:] = A_soft
        else:
            A = A_soft
    if np.max(np.abs(A - A.T)) > 0:
        raise InvalidParameterError("A must be symmetric")
    eig = np.linalg.eigvalsh(A)
    if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
        raise InvalidParameterError("A must be positive semidefinite")

    if "x0" in params:
        x0 = np.array(params["x0"], dtype=float)
    else:
        x0 = float(params.get("x0_scale", 1.0)) * rng.standard_normal(d)
        if stiff is not None:
            x0[0] = float(params.get("stiff_offset", 0.0))
    mat = np.ascontiguousarray(A)
    vec = np.array([beta])
    value, gradient = _bind(quad_cos_value, quad_cos_grad, mat, vec)

    def hessian(x):
        return mat - beta * np.diag(np.cos(np.asarray(x, dtype=float)))

    return Objective(
        dim=d, value=value, gradient=gradient, analytic_hessian=hessian,
        L1=float(eig[-1]) + beta, L2=beta,
        delta_bound=max(value(x0) + beta * d, np.finfo(float).tiny), x0=x0,
        name="quad_cos", kernels=(QUAD_COS, mat, vec, NO_PROJ, NO_ANCHOR),
        info={"inf_lower": -beta * d},
    )


def _separable_quartic(d, params, rng):
    mu = float(params.get("mu", 0.25))
    if not 0.0 <= mu <= 1.0 / 3.0:
        raise InvalidParameterError("separable_quartic needs 0 <= mu <= 1/3")
    if "x0" in params:
        x0 = np.array(params["x0"], dtype=float)
    else:
        x0 = float(params.get("x0_scale", 1.0)) * rng.standard_normal(d)
    mat = np.zeros((1, 1))
    vec = np.array([mu])
    value, gradient = _bind(quartic_value, quartic_grad, mat, vec)

    def hessian(x):
        a = np.abs(np.asarray(x, dtype=float))
        return np.diag(np.where(a <= 1.0, a * a, 2.0 * a - 1.0) - mu)

    inf_f = -0.75 * mu * mu * d
    return Objective(
        dim=d, value=value, gradient=gradient, analytic_hessian=hessian,
        L1=None, L2=2.0, delta_bound=max(value(x0) - inf_f, np.finfo(float).tiny),
        x0=x0, name="separable_quartic", kernels=(SEPARABLE_QUARTIC, mat, vec, NO_PROJ, NO_ANCHOR),
        info={"inf": inf_f},
    )


def _saddle_band(d, params, rng):
    kappa = float(params.get("kappa", 1.0))
    sigma = float(params.get("sigma", 1.0))
    base = float(params.get("band_base", 1.0))
    if not (kappa > 0 and sigma > 0 and base > 0):
        raise InvalidParameterError("saddle_band needs positive kappa, sigma, band_base")
    Q = random_orthogonal(d, rng)
    curv = base * 2.0 ** np.arange(d - 1)
    z0 = np.zeros(d)
    z0[1:] = float(params.get("x0_scale", 1.0)) * rng.standard_normal(d - 1)
    x0 = Q @ z0
    mat = np.ascontiguousarray(Q)
    vec = np.concatenate(([kappa, sigma], curv))
    value, gradient = _bind(saddle_value, saddle_grad, mat, vec)

    def hessian(x):
        z0_ = float(Q[:, 0] @ np.asarray(x, dtype=float))
        diag = np.concatenate(([-kappa * np.cos(z0_ / sigma)], curv))
        H = (Q * diag) @ Q.T
        return 0.5 * (H + H.T)

    inf_f = -kappa * sigma * sigma
    return Objective(
        dim=d, value=value, gradient=gradient, analytic_hessian=hessian,
        L1=max(kappa, float(curv.max()) if d > 1 else kappa), L2=kappa / sigma,
        delta_bound=max(value(x0) - inf_f, np.finfo(float).tiny), x0=x0,
        name="saddle_band", kernels=(SADDLE_BAND, mat, vec, NO_PROJ, NO_ANCHOR),
        info={"inf": inf_f, "rotation": Q},
    )


def cubic_model_minimum(g, A, M):
    """Global minimum value of ``g'x + x'Ax/2 + M/6 ||x||^3`` via the secular equation."""
    lam, U = np.linalg.eigh(A)
    gt = U.T @ g
    r_lo = max(0.0, -2.0 * lam[0] / M)

    def secular(r):
        return np.linalg.norm(gt / (lam + 0.5 * M * r)) - r

    lo = r_lo * (1 + 1e-12) + 1e-300
    if secular(lo) <= 0:
        r = lo
    else:
        hi = max(1.0, 2 * lo)
        while secular(hi) > 0:
            hi *= 2.0
        r = brentq(secular, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    x = -U @ (gt / (lam + 0.5 * M * r))
    val = g @ x + 0.5 * x @ A @ x + M / 6.0 * np.linalg.norm(x) ** 3
    return float(val), x


def _random_cubic_reg(d, params, rng):
    M = float(params.get("M", 1.0))
    if not M > 0:
        raise InvalidParameterError("random_cubic_reg needs M > 0")
    spread = float(params.get("a_spread", 1.0))
    eigs = rng.uniform(-spread, spread, size=d)
    Q = random_orthogonal(d, rng)
    A = (Q * eigs) @ Q.T
    A = 0.5 * (A + A.T)
    g = float(params.get("g_scale", 1.0)) * rng.standard_normal(d)
    if "x0" in params:
        x0 = np.array(params["x0"], dtype=float)
    else:
        x0 = float(params.get("x0_scale", 0.0)) * rng.standard_normal(d)
    mat = np.ascontiguousarray(A)
    vec = np.concatenate(([M], g))
    value, gradient = _bind(cubic_value, cubic_grad, mat, vec)

    def hessian(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        H = A + 0.5 * M * r * np.eye(d)
        if r > 0:
            H = H + 0.5 * M * np.outer(x, x) / r
        return 0.5 * (H + H.T)

    inf_f, _ = cubic_model_minimum(g, A, M)
    gap = value(x0) - inf_f
    return Objective(
        dim=d, value=value, gradient=gradient, analytic_hessian=hessian,
        L1=None, L2=M, delta_bound=max(gap + 1e-12 * (1 + abs(inf_f)), np.finfo(float).tiny),
        x0=x0, name="random_cubic_reg", kernels=(RANDOM_CUBIC_REG, mat, vec, NO_PROJ, NO_ANCHOR),
        info={"inf": inf_f},
    )


_BUILDERS = {
    "quad_cos": _quad_cos,
    "separable_quartic": _separable_quartic,
    "saddle_band": _saddle_band,
    "random_cubic_reg": _random_cubic_reg,
}


def make_test_objective(family, d, params=None, seed=0):
    """Build a reproducible instance of a named family."""
    if family not in _BUILDERS:
        raise InvalidParameterError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    d = int(d)
    if d < 1:
        raise InvalidParameterError("dimension must be positive")
    params = dict(params or {})
    if family == "quad_cos" and params.get("stiff") is not None and d < 2 and "A" not in params:
        raise InvalidParameterError("a stiff axis needs d >= 2")
    rng = np.random.default_rng(seed)
    obj = _BUILDERS[family](d, params, rng)
    if params.get("hide_L1"):
        obj = Objective(
            dim=obj.dim, value=obj.value, gradient=obj.gradient,
            analytic_hessian=obj.analytic_hessian, L1=None, L2=obj.L2,
            delta_bound=obj.delta_bound, x0=obj.x0, name=obj.name,
            kernels=obj.kernels, info=dict(obj.info, hidden_L1=obj.L1),
        )
    return obj


def hessian_lipschitz_ratio(obj, n_pairs, rng, radius=2.0):
    """Largest sampled ``||H(x) - H(y)|| / ||x - y||`` over random pairs near x0."""
    worst = 0.0
    for _ in range(n_pairs):
        x = obj.x0 + radius * rng.standard_normal(obj.dim)
        y = x + radius * rng.uniform(1e-3, 1.0) * rng.standard_normal(obj.dim)
        num = np.linalg.norm(obj.analytic_hessian(x) - obj.analytic_hessian(y), 2)
        worst = max(worst, num / np.linalg.norm(x - y))
    return worst
