"""Backend selection: compiled solver loops when available, NumPy otherwise.

The environment variable DIPCA_BACKEND forces the choice: "compiled", "pure",
or "auto" (default).  Asking for the compiled backend when the extension was
not built raises ImportError at first use.
"""

from __future__ import annotations

import os

from . import _solve_loops_py

try:
    from . import _solve_loops_c
except ImportError:  # extension not built; pure loops only
    _solve_loops_c = None

HAVE_COMPILED = _solve_loops_c is not None

STATUS_CONVERGED = _solve_loops_py.STATUS_CONVERGED
STATUS_MAX_OUTER = _solve_loops_py.STATUS_MAX_OUTER
STATUS_DEGENERATE_DIRECTION = _solve_loops_py.STATUS_DEGENERATE_DIRECTION
STATUS_ZERO_DIRECTION = _solve_loops_py.STATUS_ZERO_DIRECTION
STATUS_OSCILLATION = _solve_loops_py.STATUS_OSCILLATION


def _env_choice() -> str:
    choice = os.environ.get("DIPCA_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "pure", "compiled"):
        raise ValueError(f"DIPCA_BACKEND must be auto, pure or compiled, got {choice!r}")
    return choice


def get_loops(backend: str | None = None):
    """Return the loop module for a backend name (None/auto picks the best built)."""
    choice = _env_choice() if backend is None else str(backend).strip().lower()
    if choice in ("auto", ""):
        return _solve_loops_c if HAVE_COMPILED else _solve_loops_py
    if choice == "pure":
        return _solve_loops_py
    if choice == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled solver loops requested but the extension is not built")
        return _solve_loops_c
    raise ValueError(f"unknown backend {choice!r} (expected auto, pure or compiled)")


def default_backend_name() -> str:
    return get_loops(None).BACKEND_NAME
