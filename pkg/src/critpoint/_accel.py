"""Optional numba acceleration.

Hot loops are written once in a numba-compatible subset of numpy. Setting
``CRITPOINT_NUMBA=0`` (or running without numba installed) leaves them as
plain Python functions, which is slower but otherwise identical.
"""
import os
import types

_FLAG = os.environ.get("CRITPOINT_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in {"0", "false", "off", "no"}


def kernel(fn):
    """Compile ``fn`` with ``numba.njit`` when acceleration is enabled."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(fn)
    return fn


def python_version(fn):
    """Return the uncompiled function behind a kernel."""
    return getattr(fn, "py_func", fn)


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"


def interpreted(fn, **overrides):
    """Uncompiled copy of ``fn`` whose global names in ``overrides`` are replaced."""
    py = python_version(fn)
    scope = dict(py.__globals__)
    scope.update(overrides)
    return types.FunctionType(py.__code__, scope, py.__name__, py.__defaults__, py.__closure__)
