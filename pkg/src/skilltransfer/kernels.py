"""Kernel backend selection.

The compiled ``_core`` extension is used when it was built; otherwise the
numpy implementations in ``_core_py`` are used. Setting the environment
variable ``SKILLTRANSFER_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _core_py

BACKENDS = {"python": _core_py}

try:
    from . import _core as _compiled
except ImportError:
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("SKILLTRANSFER_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _core_py

assign_labels = _impl.assign_labels
silhouette_samples = _impl.silhouette_samples
dh_frames = _impl.dh_frames
dh_jacobian = _impl.dh_jacobian
