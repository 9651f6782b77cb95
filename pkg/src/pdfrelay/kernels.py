"""Backend selection for the optimizer's inner loops.

The compiled extension is used when importable; set ``PDFRELAY_PURE_PYTHON=1``
to force the reference implementation.
"""
import os

from . import _pykernels

if os.environ.get("PDFRELAY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

OBJ_COROLLARY = _pykernels.OBJ_COROLLARY
OBJ_CUTSET = _pykernels.OBJ_CUTSET
ALLOC_BLOCKS = _pykernels.ALLOC_BLOCKS
CUTSET_BLOCKS = _pykernels.CUTSET_BLOCKS
COMBOS = _pykernels.COMBOS

corollary_terms = _impl.corollary_terms
corollary_rate = _impl.corollary_rate
combine = _impl.combine
cutset_cuts = _impl.cutset_cuts
cutset_value = _impl.cutset_value
project = _impl.project
pattern_search = _impl.pattern_search


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out
