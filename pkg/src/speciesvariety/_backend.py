"""Selects the compiled kernels when available, NumPy fallback otherwise.

Set SPECIESVARIETY_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os

if os.environ.get("SPECIESVARIETY_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

COMPILED: bool = _impl.COMPILED
gfc_row_log = _impl.gfc_row_log
chain_counts_linear = _impl.chain_counts_linear
chain_counts_table = _impl.chain_counts_table
