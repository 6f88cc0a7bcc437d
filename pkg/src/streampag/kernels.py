"""Backend selection for the hot numeric kernels.

At import time the compiled extension is preferred; the pure-Python
implementation is the fallback.  Set ``STREAMPAG_KERNELS=python`` or
``STREAMPAG_KERNELS=c`` to force a backend (forcing ``c`` raises if the
extension is not built).
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("STREAMPAG_KERNELS", "").strip().lower()

if _requested == "python":
    _impl = _kernels_py
elif _requested == "c":
    from . import _ckernels as _impl  # noqa: F401
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

partial_corr = _impl.partial_corr
solve_spd = _impl.solve_spd
welford_update = _impl.welford_update


def backend_name() -> str:
    """Name of the kernel backend selected at import ("c" or "python")."""
    return BACKEND
