"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set GROUNDWORK_PURE=1 to force the fallback (used by the benchmark and to
reproduce results without a compiler).
"""

from __future__ import annotations

import os

if os.environ.get("GROUNDWORK_PURE", "") not in ("", "0"):
    from groundwork import _kernels_py as _impl

    COMPILED = False
else:
    try:
        from groundwork import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from groundwork import _kernels_py as _impl

        COMPILED = False

rolling_median_mad = _impl.rolling_median_mad
dtw_cost = _impl.dtw_cost
