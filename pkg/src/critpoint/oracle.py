"""Objectives, metered oracles and the four Hessian-estimate modes."""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionError,
    InvalidParameterError,
    InvariantViolation,
    UnsupportedModeError,
)

SYMMETRY_TOL = 1e-12


@dataclass(eq=False)
class QueryLedger:
    """Exact query counters, optionally attributed to named phases."""

    grad_count: int = 0
    hess_count: int = 0
    value_count: int = 0
    phase_tags: list = field(default_factory=list)
    current_phase: str = "main"

    def charge(self, grad=0, hess=0, value=0):
        if grad < 0 or hess < 0 or value < 0:
            raise InvalidParameterError("ledger counters can only increase")
        self.grad_count += int(grad)
        self.hess_count += int(hess)
        self.value_count += int(value)

    def counts(self):
        return {"grad": self.grad_count, "hess": self.hess_count, "value": self.value_count}

    @contextlib.contextmanager
    def phase(self, label):
        before = self.counts()
        previous, self.current_phase = self.current_phase, label
        try:
            yield self
        finally:
            self.current_phase = previous
            after = self.counts()
            self.phase_tags.append((label, {k: after[k] - before[k] for k in after}))

    def phase_totals(self):
        totals = {}
        for label, counts in self.phase_tags:
            acc = totals.setdefault(label, {"grad": 0, "hess": 0, "value": 0})
            for key, val in counts.items():
                acc[key] += val
        return totals

    def snapshot(self):
        return QueryLedger(self.grad_count, self.hess_count, self.value_count,
                           list(self.phase_tags), self.current_phase)


@dataclass(frozen=True, eq=False)
class HessianEstimate:
    """A symmetric matrix within operator-norm distance ``delta`` of the Hessian at ``ref_point``."""

    matrix: np.ndarray
    ref_point: np.ndarray
    delta: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"Hessian estimate must be square, got shape {m.shape}")
        if self.delta < 0:
            raise InvalidParameterError("Hessian accuracy must be nonnegative")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
        if asym > SYMMETRY_TOL * scale:
            raise InvariantViolation(f"Hessian estimate is not symmetric (max asymmetry {asym:.3e})")
        m = m.copy()
        m.setflags(write=False)
        ref = np.array(self.ref_point, dtype=float)
        ref.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "ref_point", ref)
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class HessianMode:
    """How a Hessian estimate is produced: exact, zero, noisy or finite_difference."""

    kind: str
    delta: float = 0.0
    seed: int = 0

    KINDS = ("exact", "zero", "noisy", "finite_difference")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidParameterError(f"unknown oracle mode {self.kind!r}")
        if self.delta < 0:
            raise InvalidParameterError("oracle accuracy must be nonnegative")

    @classmethod
    def exact(cls):
        return cls("exact", 0.0)

    @classmethod
    def zero(cls):
        return cls("zero", 0.0)

    @classmethod
    def noisy(cls, delta, seed=0):
        return cls("noisy", float(delta), int(seed))

    @classmethod
    def finite_difference(cls, delta):
        return cls("finite_difference", float(delta))

    @classmethod
    def parse(cls, name, delta=0.0, seed=0):
        aliases = {"fd": "finite_difference", "finite-difference": "finite_difference"}
        kind = aliases.get(name, name)
        if kind == "exact":
            return cls.exact()
        if kind == "zero":
            return cls.zero()
        if kind == "noisy":
            return cls.noisy(delta, seed)
        if kind == "finite_difference":
            return cls.finite_difference(delta)
        raise InvalidParameterError(f"unknown oracle mode {name!r}")

    def certified_delta(self, obj):
        """Accuracy guaranteed for estimates of ``obj`` produced in this mode."""
        if self.kind == "zero":
            if obj.L1 is None:
                raise UnsupportedModeError("zero mode needs a gradient Lipschitz constant")
            return float(obj.L1)
        return float(self.delta) if self.kind != "exact" else 0.0

    @property
    def label(self):
        return {"finite_difference": "fd"}.get(self.kind, self.kind)


@dataclass(frozen=True, eq=False)
class Objective:
    """A twice-differentiable function with certified smoothness constants.

    ``kernels`` optionally carries ``(family_id, mat, vec, proj, anchor)`` so the
    compiled solver loops can evaluate the function without calling back into
    Python (see ``kernels.eval_grad``).
    """

    dim: int
    value: Callable
    gradient: Callable
    L2: float
    delta_bound: float
    x0: np.ndarray
    analytic_hessian: Optional[Callable] = None
    L1: Optional[float] = None
    name: str = "custom"
    kernels: Optional[tuple] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidParameterError("dimension must be positive")
        if not self.L2 > 0:
            raise InvalidParameterError("Hessian Lipschitz constant must be positive")
        if not self.delta_bound > 0:
            raise InvalidParameterError("suboptimality bound must be positive")
        if self.L1 is not None and not self.L1 > 0:
            raise InvalidParameterError("gradient Lipschitz constant must be positive")
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (int(self.dim),):
            raise DimensionError(f"x0 has shape {x0.shape}, expected ({self.dim},)")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "L2", float(self.L2))
        object.__setattr__(self, "delta_bound", float(self.delta_bound))
        if self.L1 is not None:
            object.__setattr__(self, "L1", float(self.L1))

    def hessian_estimate(self, x, mode, ledger, rng=None):
        return _base_hessian_estimate(self, x, mode, ledger, rng)


def _check_point(obj, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (obj.dim,):
        raise DimensionError(f"point has shape {x.shape}, expected ({obj.dim},)")
    return x


def query_gradient(obj, x, ledger):
    x = _check_point(obj, x)
    ledger.charge(grad=1)
    return np.asarray(obj.gradient(x), dtype=float)


def query_value(obj, x, ledger):
    x = _check_point(obj, x)
    ledger.charge(value=1)
    return float(obj.value(x))


def query_hessian_estimate(obj, x, mode, ledger, rng=None):
    """Produce a HessianEstimate at ``x``; always costs one Hessian query."""
    return obj.hessian_estimate(x, mode, ledger, rng)


def fd_step(delta, dim, L2):
    return 2.0 * delta / (np.sqrt(dim) * L2)


def finite_difference_hessian(gradient, x, h, symmetrize=True):
    """Column-wise central differences of ``gradient`` (2d evaluations)."""
    d = x.shape[0]
    H = np.empty((d, d))
    e = np.zeros(d)
    for i in range(d):
        e[i] = h
        H[:, i] = (np.asarray(gradient(x + e)) - np.asarray(gradient(x - e))) / (2.0 * h)
        e[i] = 0.0
    if symmetrize:
        H = 0.5 * (H + H.T)
    return H


def goe_perturbation(dim, norm, rng):
    """Symmetric Gaussian matrix rescaled to the given operator norm."""
    X = rng.standard_normal((dim, dim))
    G = (X + X.T) / np.sqrt(2.0)
    g_norm = np.linalg.norm(G, 2)
    if g_norm == 0.0 or norm == 0.0:
        return np.zeros((dim, dim))
    E = G * (norm / g_norm)
    return 0.5 * (E + E.T)


def _base_hessian_estimate(obj, x, mode, ledger, rng, fd_builder=None):
    x = _check_point(obj, x)
    kind = mode.kind
    if kind == "exact":
        if obj.analytic_hessian is None:
            raise UnsupportedModeError("exact mode needs an analytic Hessian")
        ledger.charge(hess=1)
        return HessianEstimate(obj.analytic_hessian(x), x, 0.0)
    if kind == "zero":
        if obj.L1 is None:
            raise UnsupportedModeError("zero mode needs a gradient Lipschitz constant")
        ledger.charge(hess=1)
        return HessianEstimate(np.zeros((obj.dim, obj.dim)), x, obj.L1)
    if kind == "noisy":
        if obj.analytic_hessian is None:
            raise UnsupportedModeError("noisy mode needs an analytic Hessian")
        if rng is None:
            rng = np.random.default_rng(mode.seed)
        ledger.charge(hess=1)
        norm = mode.delta * rng.uniform(0.0, 1.0)
        H = np.asarray(obj.analytic_hessian(x), dtype=float)
        return HessianEstimate(H + goe_perturbation(obj.dim, norm, rng), x, mode.delta)
    if kind == "finite_difference":
        if not mode.delta > 0:
            raise InvalidParameterError("finite-difference mode needs delta > 0")
        h = fd_step(mode.delta, obj.dim, obj.L2)
        builder = fd_builder or finite_difference_hessian
        ledger.charge(hess=1, grad=2 * obj.dim)
        return HessianEstimate(builder(obj.gradient, x, h), x, mode.delta)
    raise UnsupportedModeError(f"unsupported oracle mode {kind!r}")


def gradient_fd_error(obj, x, h=1e-6):
    """Relative error between ``obj.gradient`` and central differences of ``obj.value``."""
    x = _check_point(obj, x)
    g = np.asarray(obj.gradient(x), dtype=float)
    fd = np.empty_like(g)
    e = np.zeros_like(x)
    for i in range(x.shape[0]):
        e[i] = h
        fd[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
        e[i] = 0.0
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1.0))
