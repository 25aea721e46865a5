"""Kernel backend selection.

The compiled extension is used when it was built and ``CCSNI_PURE_PYTHON``
is unset; otherwise the pure-Python module is used.  Both expose
``tau_closure``, ``refine`` and ``gfp`` with identical results.
"""
from __future__ import annotations

import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("CCSNI_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend

BACKEND = backend.BACKEND
tau_closure = backend.tau_closure
refine = backend.refine
gfp = backend.gfp


def available() -> dict[str, object]:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out


def use(name: str) -> None:
    """Switch backend for this process ("python" or "cython")."""
    global backend, BACKEND, tau_closure, refine, gfp
    choices = available()
    if name not in choices:
        raise ValueError(f"kernel backend {name!r} is not available")
    backend = choices[name]
    BACKEND = backend.BACKEND
    tau_closure = backend.tau_closure
    refine = backend.refine
    gfp = backend.gfp
