import numpy as np
import pytest

from critpoint import Objective


def quadratic(A, x0, L2=1.0, delta_bound=None, L1="auto"):
    """f(x) = x'Ax/2 as an Objective with analytic Hessian."""
    A = np.array(A, dtype=float)
    x0 = np.array(x0, dtype=float)
    if L1 == "auto":
        L1 = max(float(np.max(np.abs(np.linalg.eigvalsh(A)))), 1e-12)
    if delta_bound is None:
        delta_bound = max(0.5 * x0 @ A @ x0, 1.0)
    return Objective(
        dim=A.shape[0], value=lambda x: 0.5 * float(x @ A @ x), gradient=lambda x: A @ x,
        analytic_hessian=lambda x: A.copy(), L1=L1, L2=L2, delta_bound=delta_bound, x0=x0,
        name="quadratic",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
