"""Numeric core with a compiled fast path and a NumPy fallback.

The active backend is chosen once at import time: the Cython extension
when it built, otherwise the NumPy reference implementation. Setting
KGOPT_BACKEND=numpy or KGOPT_BACKEND=compiled forces the choice;
requesting the compiled backend when the extension is unavailable is an
error rather than a silent downgrade.
"""

import os

from . import numpy_backend

try:
    from . import _fast as compiled_backend
except ImportError:
    compiled_backend = None

_requested = os.environ.get("KGOPT_BACKEND", "").strip().lower()
if _requested in ("numpy", "python"):
    active = numpy_backend
elif _requested == "compiled":
    if compiled_backend is None:
        raise ImportError(
            "KGOPT_BACKEND=compiled but the kgopt._kernels._fast extension "
            "is not built; reinstall the package with a C compiler available"
        )
    active = compiled_backend
elif _requested:
    raise ImportError(f"unknown KGOPT_BACKEND value: {_requested!r}")
else:
    active = compiled_backend if compiled_backend is not None else numpy_backend
