"""Select the compiled kernels when available, else the NumPy fallback.

Set ``SYMMSPEC_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SYMMSPEC_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

p1_triplets = _impl.p1_triplets
green_p_sum = _impl.green_p_sum


def get(name):
    """Return ``(python_impl, compiled_impl_or_None)`` for kernel ``name``."""
    try:
        from . import _kernels
    except ImportError:
        return getattr(_kernels_py, name), None
    return getattr(_kernels_py, name), getattr(_kernels, name)
