"""Kernel backend selection.

The hot integration loops exist twice: a numba-compiled version and a
pure NumPy lockstep version with the same call contract.  The active
backend is chosen once at import time from the SLRECOVER_BACKEND
environment variable ("numba", "numpy", or "auto"; default auto, which
prefers numba and falls back to NumPy when numba is not importable).
`set_backend` switches at runtime, which the benchmark and the backend
parity tests use.
"""

import importlib
import os

BACKEND_ENV = "SLRECOVER_BACKEND"

_impl = None
_name = None


def _load(name):
    return importlib.import_module(f"slrecover.kernels.{name}_backend")


def set_backend(name: str) -> str:
    """Activate a backend by name ("numba", "numpy", or "auto")."""
    global _impl, _name
    if name == "auto":
        try:
            _impl, _name = _load("numba"), "numba"
        except ImportError:
            _impl, _name = _load("numpy"), "numpy"
    elif name in ("numba", "numpy"):
        _impl, _name = _load(name), name
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return _name


def backend_name() -> str:
    """Name of the active backend."""
    return _name


def phase_ends(q, dx, lams, S, theta0):
    return _impl.phase_ends(q, dx, lams, S, theta0)


def solve_batch(q, dx, S, theta0, target, seed, w0, rtol):
    return _impl.solve_batch(q, dx, S, theta0, target, seed, w0, rtol)


def ivp_batch(q, dx, lams, u0s, du0s, refine):
    return _impl.ivp_batch(q, dx, lams, u0s, du0s, refine)


set_backend(os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto")
