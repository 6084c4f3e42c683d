"""Backend selection for the numerical kernels.

The compiled extension is preferred; set ``ASIAUDIT_PURE_PYTHON=1`` to force
the numpy fallback. ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("ASIAUDIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined,no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

compensated_sum = _impl.compensated_sum
compensated_dot = _impl.compensated_dot
householder = _impl.householder
betacf = _impl.betacf

__all__ = ["BACKEND", "compensated_sum", "compensated_dot", "householder", "betacf"]
