"""Backend selection for the hot kernels.

The compiled Cython extension is used when it imported successfully; the
NumPy implementation is the fallback. Set ``PISTO_BACKEND=numpy`` or
``PISTO_BACKEND=compiled`` to force one (forcing ``compiled`` raises if the
extension is missing). Both backends implement the same functions; see
``benchmarks/backend_bench.py`` for a speed comparison.
"""
import os

from . import numpy_kernels

_requested = os.environ.get("PISTO_BACKEND", "").strip().lower()

if _requested == "numpy":
    kernels = numpy_kernels
elif _requested == "compiled":
    from . import _ckernels as kernels
elif _requested:
    raise ValueError(f"unknown PISTO_BACKEND {_requested!r}")
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = numpy_kernels


def backend_name() -> str:
    """Name of the kernel backend in use: 'compiled' or 'numpy'."""
    return kernels.BACKEND_NAME


def available_backends() -> dict:
    """All importable backends, keyed by name."""
    out = {"numpy": numpy_kernels}
    try:
        from . import _ckernels

        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out
