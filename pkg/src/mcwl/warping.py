"""Intensity-domain warping operators and their (approximate) inverses.

``warp`` is the prediction operator shared by the block and mesh paths; it
returns a float64 plane so the lifting step can apply its single floor. All
interpolation is edge-clamped. The block update inverse scatters values back
to where prediction read them and conceals unconnected pixels by
nearest-neighbor fill; the mesh update inverse warps with the negated grid,
accepting the approximation error that lifting tolerates by construction.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .motion import BlockMVF, DensePositionField, MeshMVF, block_to_dense, negate, upsample_grid


def warp(frame: np.ndarray, field: DensePositionField) -> np.ndarray:
    """Bilinear sample of ``frame`` at the field's subpixel positions."""
    if frame.shape != field.shape:
        raise ValueError("field dimensions do not match frame")
    return kernels.warp_bilinear(np.ascontiguousarray(frame, np.float64),
                                 field.x, field.y)


def inverse_warp_block(hp: np.ndarray, mvf: BlockMVF) -> np.ndarray:
    """Scatter each value to its motion-displaced source location.

    Targets are clamped to the frame (prediction read from clamped positions
    too); multiply-connected targets keep the last raster-order writer and
    unconnected ones are filled from the nearest connected pixel.
    """
    h, w = hp.shape
    field = block_to_dense(mvf, w, h)
    expected_rows = -(-h // mvf.block_size)
    expected_cols = -(-w // mvf.block_size)
    if mvf.vectors.shape[:2] != (expected_rows, expected_cols):
        raise ValueError("block grid does not match frame dimensions")
    targets = (field.yi.astype(np.int64) * w + field.xi.astype(np.int64)).ravel()
    values = hp.astype(np.float64).ravel()
    # keep the last raster-order writer per target: unique() reports first
    # occurrences, so scan the reversed target list
    uniq, first_in_rev = np.unique(targets[::-1], return_index=True)
    last_writer = targets.size - 1 - first_in_rev
    out = np.zeros(h * w, np.float64)
    out[uniq] = values[last_writer]
    written = np.zeros(h * w, bool)
    written[uniq] = True
    return kernels.nn_fill(out.reshape(h, w), written.reshape(h, w))


def inverse_warp_mesh(hp: np.ndarray, mvf: MeshMVF) -> np.ndarray:
    """Approximate inverse: warp with every grid-point vector negated."""
    h, w = hp.shape
    return warp(hp, upsample_grid(negate(mvf), w, h))
