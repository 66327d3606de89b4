"""Hot-loop simulation kernels.

The compiled extension is preferred; the pure-Python twin is selected when the
extension is missing or when ``QUADPIDA_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import os

from . import _pykernel

OK = _pykernel.OK
DIVERGED = _pykernel.DIVERGED
SINGULAR = _pykernel.SINGULAR

python_run_closed_loop = _pykernel.run_closed_loop

try:
    if os.environ.get("QUADPIDA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernel forced by environment")
    from ._ckernel import run_closed_loop as compiled_run_closed_loop
except ImportError:
    compiled_run_closed_loop = None

if compiled_run_closed_loop is not None:
    run_closed_loop = compiled_run_closed_loop
    BACKEND = "cython"
else:
    run_closed_loop = python_run_closed_loop
    BACKEND = "python"

__all__ = [
    "BACKEND",
    "DIVERGED",
    "OK",
    "SINGULAR",
    "compiled_run_closed_loop",
    "python_run_closed_loop",
    "run_closed_loop",
]
