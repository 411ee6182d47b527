"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
functionally identical.  Set ENTRATE_KERNEL=python or =compiled to force a
backend (the latter raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("ENTRATE_KERNEL", "").strip().lower()

if _requested == "python":
    _impl = _kernels_py
    BACKEND = "python"
elif _requested == "compiled":
    from . import _kernels as _impl  # type: ignore[no-redef]

    BACKEND = "compiled"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

ORD_INF = _impl.ORD_INF
decomp_sums = _impl.decomp_sums
word_stats = _impl.word_stats
mc_block = _impl.mc_block


def backend_module(name: str):
    """Explicit backend lookup, used by tests and the benchmark."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
