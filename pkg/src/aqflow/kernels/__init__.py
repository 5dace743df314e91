"""Hot-kernel dispatch.

Two interchangeable lanes provide wa_extent_grad, timing_batch and
astar_search: a compiled extension (_core, built from _core.pyx) and a
numpy/python reference (_pykernels).  The compiled lane is used when the
extension imported cleanly; set AQFLOW_PURE=1 to force the reference lane.
BACKEND names the active lane ("compiled" or "pure").
"""

import os

from . import _pykernels

if os.environ.get("AQFLOW_PURE", "") == "1":
    _impl = _pykernels
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "pure"

KEY_SHIFT = _pykernels.KEY_SHIFT
WRONG_WAY_MULT = _pykernels.WRONG_WAY_MULT

wa_extent_grad = _impl.wa_extent_grad
timing_batch = _impl.timing_batch
astar_search = _impl.astar_search
