"""Backend selection: compiled extension when available, pure Python otherwise.

Set GRAINSPECT_FORCE_PY=1 to force the pure-Python implementations (used by
the benchmark and by tests that exercise the fallback). Both backends are
bit-identical; only speed differs.
"""

import os

from . import kernels_py

if os.environ.get("GRAINSPECT_FORCE_PY") == "1":
    _impl = kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = kernels_py
        BACKEND = "python"

convolve_replicate = _impl.convolve_replicate
hysteresis_mask = _impl.hysteresis_mask
label_mask = _impl.label_mask

__all__ = ["BACKEND", "convolve_replicate", "hysteresis_mask", "label_mask", "kernels_py"]
