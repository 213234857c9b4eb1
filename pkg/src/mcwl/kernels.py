"""Backend dispatch for the hot kernels (see backend.py for the env flag)."""
from .backend import BACKEND, USE_NUMBA

if USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl

block_search = _impl.block_search
mesh_refine = _impl.mesh_refine
upsample_positions = _impl.upsample_positions
warp_bilinear = _impl.warp_bilinear
knn_select = _impl.knn_select
nn_fill = _impl.nn_fill
csr_matvec = _impl.csr_matvec

__all__ = [
    "BACKEND",
    "block_search",
    "mesh_refine",
    "upsample_positions",
    "warp_bilinear",
    "knn_select",
    "nn_fill",
    "csr_matvec",
]
