"""Kernel backend selection.

Hot inner loops exist twice: numba @njit versions in ``_kernels_numba`` and
vectorized numpy versions in ``_kernels_numpy``. The active backend is chosen
once at import time from the environment:

    MCWL_BACKEND=auto    use numba if importable, else numpy (default)
    MCWL_BACKEND=numba   require numba, fail loudly if missing
    MCWL_BACKEND=numpy   force the pure-numpy fallback

Both backends produce identical results for the integer-exact kernels (block
search, k-NN selection, scatter fill, grid upsampling); see
benchmarks/bench_backends.py for a side-by-side comparison.
"""
import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

_requested = os.environ.get("MCWL_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"MCWL_BACKEND must be auto|numba|numpy, got {_requested!r}")
if _requested == "numba" and not HAVE_NUMBA:
    raise RuntimeError("MCWL_BACKEND=numba but numba is not importable")

USE_NUMBA = HAVE_NUMBA and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"
