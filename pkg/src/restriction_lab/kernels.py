"""Backend selection for the hot extension-sum kernel.

The compiled Cython kernel is used when it imports; otherwise, or when the
environment variable ``RESTRICTION_LAB_PURE`` is set to a non-empty value, the
NumPy fallback is used.
"""
import os

from . import _kernels_py

_threads = 1

if os.environ.get("RESTRICTION_LAB_PURE"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def set_num_threads(n):
    global _threads
    _threads = max(1, int(n))


def get_num_threads():
    return _threads


def extension_sum(dens, a1, h1, a2, h2, jlo, jhi, points, backend=None):
    """Dispatch to the selected backend; ``backend`` forces one explicitly."""
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.extension_sum(dens, a1, h1, a2, h2, jlo, jhi, points, _threads)
    return _kernels_py.extension_sum(dens, a1, h1, a2, h2, jlo, jhi, points, _threads)
