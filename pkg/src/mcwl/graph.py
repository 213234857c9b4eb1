"""Edge construction and sparse prediction/update matrices.

Every pixel of the even frame is linked to the k odd-frame nodes whose
rounded compensated positions lie nearest (ties to the smaller node id);
several odd nodes rounding into one cell all stay individual candidates, so
contractions concentrate references. Edge lengths are taken from the
retained subpixel positions by default; a ``distances="rounded"`` switch
exists for ablation.

Row-normalized weights are snapped to 32-bit fixed point with row sums of
exactly one. All matrix entries are then dyadic rationals, which makes the
matrix-vector products over integer frames exact in float64: lifting floors
see no rounding noise, constants are preserved bit-exactly, and both kernel
backends agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .motion import DensePositionField

_SNAP = 2 ** 32


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix with non-negative weights."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray   # int64, n_rows + 1
    indices: np.ndarray  # int32, nnz
    data: np.ndarray     # float64, nnz

    @classmethod
    def from_triplets(cls, rows, cols, weights, n_rows, n_cols) -> "SparseMatrix":
        rows = np.asarray(rows, np.int64)
        cols = np.asarray(cols, np.int64)
        weights = np.asarray(weights, np.float64)
        if rows.size != cols.size or rows.size != weights.size:
            raise ValueError("triplet arrays differ in length")
        if weights.size and (weights.min() < 0 or not np.all(np.isfinite(weights))):
            raise ValueError("weights must be finite and >= 0")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                          or cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("entry outside matrix shape")
        order = np.lexsort((cols, rows))
        rows, cols, weights = rows[order], cols[order], weights[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if np.any(dup):
                raise ValueError("duplicate (row, col) entry")
        indptr = np.zeros(n_rows + 1, np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n_rows=n_rows, n_cols=n_cols, indptr=indptr,
                   indices=cols.astype(np.int32), data=weights)

    @classmethod
    def eye(cls, n: int) -> "SparseMatrix":
        return cls(n_rows=n, n_cols=n, indptr=np.arange(n + 1, dtype=np.int64),
                   indices=np.arange(n, dtype=np.int32), data=np.ones(n))

    @property
    def nnz(self) -> int:
        return self.data.size

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr))

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.row_ids(), weights=self.data, minlength=self.n_rows)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, np.float64)
        if x.size != self.n_cols:
            raise ValueError(f"vector length {x.size} != {self.n_cols} columns")
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x, self.n_rows)

    def transpose(self) -> "SparseMatrix":
        """Entry-exact transpose (weights untouched)."""
        return SparseMatrix.from_triplets(self.indices, self.row_ids(), self.data,
                                          self.n_cols, self.n_rows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self.row_ids(), self.indices] = self.data
        return out


@dataclass(frozen=True)
class EdgeSet:
    """Columnar edge list between even-frame and odd-frame nodes.

    ``inter_len`` is the distance from the even pixel to the candidate's
    compensated position; ``intra_len``/``intra_len_comp`` measure the odd
    frame edge between the candidate and the node co-located with the even
    pixel, on the regular and on the compensated grid. A compensated length
    below the regular one marks a local contraction.
    """

    i: np.ndarray              # even node ids, int32
    j: np.ndarray              # odd node ids, int32
    inter_len: np.ndarray      # float64
    intra_len: np.ndarray      # float64
    intra_len_comp: np.ndarray # float64

    def __len__(self) -> int:
        return self.i.size


def build_edges(field: DensePositionField, k: int,
                distances: str = "subpixel") -> EdgeSet:
    """k nearest odd nodes per even pixel, selected on rounded positions."""
    h, w = field.shape
    n = h * w
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds node count {n}")
    if distances not in ("subpixel", "rounded"):
        raise ValueError(f"unknown distance mode {distances!r}")
    neigh = kernels.knn_select(field.xi, field.yi, k)
    i = np.repeat(np.arange(n, dtype=np.int64), k)
    j = neigh.astype(np.int64).ravel()
    if distances == "subpixel":
        pos_x = field.x.ravel()
        pos_y = field.y.ravel()
    else:
        pos_x = field.xi.ravel().astype(np.float64)
        pos_y = field.yi.ravel().astype(np.float64)
    even_x = np.tile(np.arange(w, dtype=np.float64), h)
    even_y = np.repeat(np.arange(h, dtype=np.float64), w)
    inter = np.hypot(pos_x[j] - even_x[i], pos_y[j] - even_y[i])
    # regular-grid coordinates of the odd candidate vs the co-located node
    intra = np.hypot((j % w) - even_x[i], (j // w) - even_y[i])
    intra_comp = np.hypot(pos_x[j] - pos_x[i], pos_y[j] - pos_y[i])
    return EdgeSet(i=i.astype(np.int32), j=j.astype(np.int32),
                   inter_len=inter, intra_len=intra, intra_len_comp=intra_comp)


def edge_weight(inter_len, intra_len, intra_len_comp):
    """Contraction-boosting edge weight.

    Uses the compensated intra length when it shrank below the regular one
    (unambiguous contraction), otherwise the inter-frame length:

        e = intra_comp if intra_comp < intra else inter
        w = exp(-(inter^2 + e^2) / 2) * exp(|inter - intra_comp|)

    Accepts scalars or arrays.
    """
    inter = np.asarray(inter_len, np.float64)
    intra = np.asarray(intra_len, np.float64)
    comp = np.asarray(intra_len_comp, np.float64)
    e = np.where(comp < intra, comp, inter)
    return np.exp(-0.5 * (inter * inter + e * e)) * np.exp(np.abs(inter - comp))


def build_adjacency(edges: EdgeSet, n_even: int, n_odd: int) -> SparseMatrix:
    """Raw (unnormalized) weighted adjacency from even to odd nodes."""
    w = edge_weight(edges.inter_len, edges.intra_len, edges.intra_len_comp)
    return SparseMatrix.from_triplets(edges.i, edges.j, w, n_even, n_odd)


def _snap_rows(m: SparseMatrix) -> SparseMatrix:
    """Quantize each row to 32-bit fixed point summing to exactly one."""
    data = m.data.copy()
    fixed = np.rint(data * _SNAP).astype(np.int64)
    for r in range(m.n_rows):
        lo, hi = m.indptr[r], m.indptr[r + 1]
        if hi == lo:
            continue
        row = fixed[lo:hi]
        row[np.argmax(row)] += _SNAP - row.sum()
        data[lo:hi] = row / _SNAP
    return SparseMatrix(n_rows=m.n_rows, n_cols=m.n_cols, indptr=m.indptr,
                        indices=m.indices, data=data)


def _row_normalize(m: SparseMatrix, allow_empty: bool) -> SparseMatrix:
    sums = m.row_sums()
    degrees = np.diff(m.indptr)
    if not allow_empty and np.any(degrees == 0):
        raise ValueError("zero row: node without any edge")
    data = m.data.copy()
    row_ids = m.row_ids()
    # rows whose weights all underflowed to zero fall back to uniform
    dead = (sums == 0) & (degrees > 0)
    if np.any(dead):
        data[dead[row_ids]] = 1.0
        sums = np.where(dead, degrees.astype(np.float64), sums)
    safe = np.where(sums == 0, 1.0, sums)
    data = data / safe[row_ids]
    return SparseMatrix(n_rows=m.n_rows, n_cols=m.n_cols, indptr=m.indptr,
                        indices=m.indices, data=data)


def transition_matrix(adj: SparseMatrix) -> SparseMatrix:
    """Random-walk normalization: divide every row by its degree sum."""
    return _row_normalize(adj, allow_empty=False)


def build_prediction_matrix(edges: EdgeSet, n_even: int, n_odd: int) -> SparseMatrix:
    """Row-stochastic prediction matrix from weighted edges.

    Raises on even nodes without edges (a defective k-NN pass). Rows sum to
    exactly one after fixed-point snapping.
    """
    adj = build_adjacency(edges, n_even, n_odd)
    if np.any(np.diff(adj.indptr) == 0):
        raise ValueError("isolated even node: zero prediction row")
    return _snap_rows(_row_normalize(adj, allow_empty=False))


def update_from_prediction(jp: SparseMatrix) -> SparseMatrix:
    """Update matrix as the entry-exact transpose of the prediction matrix."""
    return jp.transpose()


def eq5_update_matrix(adj: SparseMatrix) -> SparseMatrix:
    """Update variant that row-normalizes the transposed raw adjacency.

    Odd nodes nobody references keep an empty row (their update term is
    zero), which the lifting inversion reproduces exactly.
    """
    return _snap_rows(_row_normalize(adj.transpose(), allow_empty=True))


def pair_matrices(field: DensePositionField, k: int,
                  update_variant: str = "transpose",
                  distances: str = "subpixel") -> tuple[SparseMatrix, SparseMatrix]:
    """Prediction/update matrices for one compensated frame pair."""
    h, w = field.shape
    n = h * w
    edges = build_edges(field, k, distances)
    jp = build_prediction_matrix(edges, n, n)
    if update_variant == "transpose":
        ku = update_from_prediction(jp)
    elif update_variant == "eq5":
        ku = eq5_update_matrix(build_adjacency(edges, n, n))
    else:
        raise ValueError(f"unknown update variant {update_variant!r}")
    return jp, ku


def dump_triplets(m: SparseMatrix, path) -> None:
    """Debug dump as 'row col weight' lines for cross-implementation diffing."""
    rows = m.row_ids()
    with open(path, "w", newline="\n") as f:
        for r, c, wgt in zip(rows, m.indices, m.data):
            f.write(f"{int(r)} {int(c)} {float(wgt)!r}\n")
