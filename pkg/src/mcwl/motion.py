"""Block and quadrilateral-mesh motion estimation plus MVF serialization.

Both estimators return integer displacement fields with the convention
cur(p) ~ ref(p + v). Tie-breaking always prefers the zero/smaller vector so
results are reproducible across backends and runs.

MVF file format (little-endian):

    magic  4s  "MVF1"
    kind   u8  0 = block grid, 1 = mesh grid points
    cols   u16
    rows   u16
    cell   u8  block size / mesh grid size in pixels
    range  u8  search range the vectors were estimated under

followed by rows*cols (dx, dy) pairs of i8. The byte length depends only on
the grid dimensions, which is what makes the mesh and graph methods cost the
same motion bits.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels

MVF_MAGIC = b"MVF1"
_MVF_HEADER = struct.Struct("<4sBHHBB")

# Offsets tested around the current grid-point vector during refinement,
# spiral order from the center; earlier entries win SSD ties.
MESH_CANDIDATE_OFFSETS = np.array(
    [(0, 0), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)],
    dtype=np.int32,
)

DEFAULT_MESH_PASSES = 2


@dataclass(frozen=True)
class BlockMVF:
    block_size: int
    search_range: int
    vectors: np.ndarray  # (rows, cols, 2) int32 of (dx, dy) per block


@dataclass(frozen=True)
class MeshMVF:
    grid_size: int
    search_range: int
    vectors: np.ndarray  # (rows, cols, 2) int32 of (dx, dy) per grid point


@dataclass(frozen=True)
class DensePositionField:
    """Per-pixel compensated coordinates.

    ``x``/``y`` keep the raw subpixel positions (used for edge lengths and
    intensity warping); ``xi``/``yi`` are rounded half-away-from-zero and
    clamped to the frame, the referencing mechanism for graph construction.
    """

    x: np.ndarray   # float64 (h, w)
    y: np.ndarray   # float64 (h, w)
    xi: np.ndarray  # int32 (h, w)
    yi: np.ndarray  # int32 (h, w)

    @property
    def shape(self):
        return self.x.shape


def _candidate_shifts(search_range: int) -> np.ndarray:
    """All (dx, dy) in the search window sorted by |dx|+|dy|, then dy, then dx."""
    s = search_range
    cands = [(dx, dy) for dy in range(-s, s + 1) for dx in range(-s, s + 1)]
    cands.sort(key=lambda v: (abs(v[0]) + abs(v[1]), v[1], v[0]))
    return np.array(cands, dtype=np.int32).reshape(-1, 2)


def estimate_block_mvf(ref: np.ndarray, cur: np.ndarray, block_size: int,
                       search_range: int) -> BlockMVF:
    """Exhaustive SSD block matching with edge-clamped reference sampling."""
    h, w = cur.shape
    if ref.shape != cur.shape:
        raise ValueError("frame shapes differ")
    if block_size < 1 or block_size > min(h, w):
        raise ValueError(f"block_size {block_size} outside [1, {min(h, w)}]")
    if search_range < 0:
        raise ValueError("search_range must be >= 0")
    cands = _candidate_shifts(search_range)
    vectors = kernels.block_search(np.ascontiguousarray(ref, np.int32),
                                   np.ascontiguousarray(cur, np.int32),
                                   block_size, cands)
    return BlockMVF(block_size=block_size, search_range=search_range, vectors=vectors)


def mesh_grid_shape(width: int, height: int, grid_size: int) -> tuple[int, int]:
    """(rows, cols) of the grid-point lattice covering a width x height frame."""
    return height // grid_size + 1, width // grid_size + 1


def estimate_mesh_mvf(ref: np.ndarray, cur: np.ndarray, grid_size: int,
                      search_range: int, passes: int = DEFAULT_MESH_PASSES) -> MeshMVF:
    """Deformable-mesh estimation by local grid-point refinement.

    Grid points start from the block estimator's vector at their location
    (rejected when a quad would fold), then ``passes`` raster sweeps test
    single-pixel moves and keep strict SSD improvements over the incident
    quads, so the total SSD never increases and all deformed quads keep
    positive area.
    """
    h, w = cur.shape
    if ref.shape != cur.shape:
        raise ValueError("frame shapes differ")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if grid_size > w or grid_size > h:
        raise ValueError(f"grid_size {grid_size} larger than frame {w}x{h}")
    if passes < 1:
        raise ValueError("passes must be >= 1")
    block = estimate_block_mvf(ref, cur, grid_size, search_range)
    nby, nbx = block.vectors.shape[:2]
    rows, cols = mesh_grid_shape(w, h, grid_size)
    init = np.empty((rows, cols, 2), np.int32)
    for gy in range(rows):
        by = min(gy, nby - 1)
        for gx in range(cols):
            init[gy, gx] = block.vectors[by, min(gx, nbx - 1)]
    vectors = kernels.mesh_refine(np.ascontiguousarray(ref, np.int32),
                                  np.ascontiguousarray(cur, np.int32),
                                  init, grid_size, search_range, passes,
                                  MESH_CANDIDATE_OFFSETS)
    return MeshMVF(grid_size=grid_size, search_range=search_range, vectors=vectors)


def _round_half_away(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def _finish_field(sub_x: np.ndarray, sub_y: np.ndarray, width: int,
                  height: int) -> DensePositionField:
    xi = np.clip(_round_half_away(sub_x), 0, width - 1).astype(np.int32)
    yi = np.clip(_round_half_away(sub_y), 0, height - 1).astype(np.int32)
    return DensePositionField(x=sub_x, y=sub_y, xi=xi, yi=yi)


def upsample_grid(mvf: MeshMVF, width: int, height: int) -> DensePositionField:
    """Per-pixel positions from bilinear interpolation of grid-point vectors."""
    rows, cols = mesh_grid_shape(width, height, mvf.grid_size)
    if mvf.vectors.shape[:2] != (rows, cols):
        raise ValueError("mesh lattice does not match frame dimensions")
    sub_x, sub_y = kernels.upsample_positions(mvf.vectors, mvf.grid_size, width, height)
    return _finish_field(sub_x, sub_y, width, height)


def block_to_dense(mvf: BlockMVF, width: int, height: int) -> DensePositionField:
    """Constant per-block positions, for the uniform warping interface."""
    bs = mvf.block_size
    by = np.minimum(np.arange(height) // bs, mvf.vectors.shape[0] - 1)
    bx = np.minimum(np.arange(width) // bs, mvf.vectors.shape[1] - 1)
    v = mvf.vectors[np.ix_(by, bx)]
    sub_x = np.arange(width, dtype=np.float64)[None, :] + v[:, :, 0]
    sub_y = np.arange(height, dtype=np.float64)[:, None] + v[:, :, 1]
    return _finish_field(sub_x, sub_y, width, height)


def negate(mvf: MeshMVF) -> MeshMVF:
    return MeshMVF(grid_size=mvf.grid_size, search_range=mvf.search_range,
                   vectors=(-mvf.vectors.astype(np.int32)))


def deformed_node_positions(mvf: MeshMVF, width: int, height: int) -> DensePositionField:
    """Deformed odd-frame node positions overlaying the even frame.

    Stored grid-point vectors point from an even pixel to its odd-frame
    source (the warping convention), so the position each odd node takes on
    the even frame is its negated vector, upsampled. Graph construction uses
    these positions; the encoded motion field itself is unchanged.
    """
    return upsample_grid(negate(mvf), width, height)


def encode_mvf(mvf: BlockMVF | MeshMVF) -> bytes:
    """Fixed-length serialization; the length is a pure function of grid dims."""
    if isinstance(mvf, BlockMVF):
        kind, cell = 0, mvf.block_size
    elif isinstance(mvf, MeshMVF):
        kind, cell = 1, mvf.grid_size
    else:
        raise TypeError(f"cannot encode {type(mvf).__name__}")
    rows, cols = mvf.vectors.shape[:2]
    if not (0 <= mvf.search_range <= 127):
        raise ValueError("search_range must fit the i8 vector payload")
    if cell > 255:
        raise ValueError("cell size exceeds u8 header field")
    if np.abs(mvf.vectors).max(initial=0) > mvf.search_range:
        raise ValueError("vector exceeds declared search_range")
    header = _MVF_HEADER.pack(MVF_MAGIC, kind, cols, rows, cell, mvf.search_range)
    return header + mvf.vectors.astype("<i1").tobytes()


def decode_mvf(blob: bytes) -> BlockMVF | MeshMVF:
    if len(blob) < _MVF_HEADER.size:
        raise ValueError("MVF blob too short for header")
    magic, kind, cols, rows, cell, search_range = _MVF_HEADER.unpack_from(blob)
    if magic != MVF_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if kind not in (0, 1):
        raise ValueError(f"unknown MVF kind {kind}")
    expected = rows * cols * 2
    payload = blob[_MVF_HEADER.size:]
    if len(payload) != expected:
        raise ValueError(f"payload is {len(payload)} bytes, expected {expected}")
    vectors = np.frombuffer(payload, dtype="<i1").astype(np.int32).reshape(rows, cols, 2)
    if np.abs(vectors).max(initial=0) > search_range:
        raise ValueError("vector exceeds declared search_range")
    if kind == 0:
        return BlockMVF(block_size=cell, search_range=search_range, vectors=vectors)
    return MeshMVF(grid_size=cell, search_range=search_range, vectors=vectors)
