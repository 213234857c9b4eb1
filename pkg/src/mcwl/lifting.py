"""Bit-exact invertible Haar lifting over frame pairs.

One temporal decomposition level. Each pair (odd, even) yields a highpass
plane ``even - floor(predict(odd))`` and a lowpass plane
``odd + floor(update(hp) / 2)``; the inverse replays the identical operators
on the identical inputs, so reconstruction is exact for any predictor,
including the approximate mesh inverse. Floors are toward minus infinity.

Methods:
    none    identity predictor/updater (plain integer Haar)
    block   block MVF, intensity warp, scatter + nearest-neighbor inverse
    mesh    mesh MVF, dense bilinear warp, negated-grid inverse
    graph   same mesh MVF, prediction by sparse row-stochastic matrix on the
            flattened frames, update by its transpose (or the row-normalized
            transposed adjacency when update_variant="eq5")
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import graph, motion, warping
from .graph import SparseMatrix
from .motion import BlockMVF, MeshMVF
from .volume import Volume

METHODS = ("none", "block", "mesh", "graph")


@dataclass(frozen=True)
class LiftingParams:
    grid_size: int = 8
    block_size: int = 8
    search_range: int = 8
    knn: int = 25
    update_variant: str = "transpose"  # transpose | eq5
    distances: str = "subpixel"        # subpixel | rounded
    mesh_passes: int = motion.DEFAULT_MESH_PASSES

    def __post_init__(self):
        if self.update_variant not in ("transpose", "eq5"):
            raise ValueError(f"unknown update_variant {self.update_variant!r}")
        if self.distances not in ("subpixel", "rounded"):
            raise ValueError(f"unknown distances mode {self.distances!r}")


@dataclass(frozen=True)
class SubbandPair:
    """LP/HP planes of one frame pair plus whatever inverts them."""

    lp: np.ndarray
    hp: np.ndarray
    method: str
    block_mvf: BlockMVF | None = None
    mesh_mvf: MeshMVF | None = None
    jp: SparseMatrix | None = field(default=None, repr=False)
    ku: SparseMatrix | None = field(default=None, repr=False)


def _floor_int(values: np.ndarray) -> np.ndarray:
    return np.floor(values).astype(np.int64)


def haar_lift(f_odd: np.ndarray, f_even: np.ndarray, predictor=None, updater=None):
    """One compensated Haar step; identity operators give plain integer Haar.

    Returns (hp, lp) int32 planes.
    """
    if f_odd.shape != f_even.shape:
        raise ValueError("frame shapes differ")
    odd = f_odd.astype(np.int64)
    even = f_even.astype(np.int64)
    pred = odd if predictor is None else _floor_int(predictor(f_odd))
    hp = even - pred
    upd = hp if updater is None else updater(hp.astype(np.int32))
    lp = odd + _floor_int(np.asarray(upd, np.float64) * 0.5)
    return hp.astype(np.int32), lp.astype(np.int32)


def haar_unlift(hp: np.ndarray, lp: np.ndarray, predictor=None, updater=None):
    """Invert one compensated Haar step; returns (f_odd, f_even) int32."""
    if hp.shape != lp.shape:
        raise ValueError("subband shapes differ")
    hp64 = hp.astype(np.int64)
    upd = hp64 if updater is None else updater(hp.astype(np.int32))
    odd = lp.astype(np.int64) - _floor_int(np.asarray(upd, np.float64) * 0.5)
    odd32 = odd.astype(np.int32)
    pred = odd if predictor is None else _floor_int(predictor(odd32))
    even = hp64 + pred
    return odd32, even.astype(np.int32)


def graph_lift(x_even: np.ndarray, x_odd: np.ndarray, jp: SparseMatrix,
               ku: SparseMatrix):
    """Graph Haar step on flattened node vectors; returns (h, l) int64."""
    x_even = np.asarray(x_even).ravel().astype(np.int64)
    x_odd = np.asarray(x_odd).ravel().astype(np.int64)
    if jp.n_rows != x_even.size or jp.n_cols != x_odd.size:
        raise ValueError("prediction matrix does not match vector lengths")
    if ku.n_rows != x_odd.size or ku.n_cols != x_even.size:
        raise ValueError("update matrix does not match vector lengths")
    h = x_even - _floor_int(jp.matvec(x_odd.astype(np.float64)))
    l = x_odd + _floor_int(0.5 * ku.matvec(h.astype(np.float64)))
    return h, l


def graph_unlift(h: np.ndarray, l: np.ndarray, jp: SparseMatrix, ku: SparseMatrix):
    """Invert the graph Haar step; returns (x_even, x_odd) int64."""
    h = np.asarray(h).ravel().astype(np.int64)
    l = np.asarray(l).ravel().astype(np.int64)
    x_odd = l - _floor_int(0.5 * ku.matvec(h.astype(np.float64)))
    x_even = h + _floor_int(jp.matvec(x_odd.astype(np.float64)))
    return x_even, x_odd


def _warp_operators(pair: SubbandPair):
    """Predictor/updater closures matching a pair's stored motion artifacts."""
    if pair.method == "none":
        return None, None
    if pair.method == "block":
        mvf = pair.block_mvf
        h, w = pair.hp.shape
        fld = motion.block_to_dense(mvf, w, h)
        return (lambda f: warping.warp(f, fld)), (lambda hp: warping.inverse_warp_block(hp, mvf))
    if pair.method == "mesh":
        mvf = pair.mesh_mvf
        h, w = pair.hp.shape
        fld = motion.upsample_grid(mvf, w, h)
        return (lambda f: warping.warp(f, fld)), (lambda hp: warping.inverse_warp_mesh(hp, mvf))
    raise ValueError(f"no warp operators for method {pair.method!r}")


def decompose_pair(f_odd: np.ndarray, f_even: np.ndarray, method: str,
                   params: LiftingParams) -> SubbandPair:
    h, w = f_odd.shape
    if method == "none":
        hp, lp = haar_lift(f_odd, f_even)
        return SubbandPair(lp=lp, hp=hp, method="none")
    if method == "block":
        mvf = motion.estimate_block_mvf(f_odd, f_even, params.block_size,
                                        params.search_range)
        fld = motion.block_to_dense(mvf, w, h)
        hp, lp = haar_lift(f_odd, f_even,
                           predictor=lambda f: warping.warp(f, fld),
                           updater=lambda hp_: warping.inverse_warp_block(hp_, mvf))
        return SubbandPair(lp=lp, hp=hp, method="block", block_mvf=mvf)
    if method in ("mesh", "graph"):
        mvf = motion.estimate_mesh_mvf(f_odd, f_even, params.grid_size,
                                       params.search_range, params.mesh_passes)
        if method == "mesh":
            fld = motion.upsample_grid(mvf, w, h)
            hp, lp = haar_lift(f_odd, f_even,
                               predictor=lambda f: warping.warp(f, fld),
                               updater=lambda hp_: warping.inverse_warp_mesh(hp_, mvf))
            return SubbandPair(lp=lp, hp=hp, method="mesh", mesh_mvf=mvf)
        fld = motion.deformed_node_positions(mvf, w, h)
        jp, ku = graph.pair_matrices(fld, params.knn, params.update_variant,
                                     params.distances)
        hvec, lvec = graph_lift(f_even, f_odd, jp, ku)
        return SubbandPair(lp=lvec.reshape(h, w).astype(np.int32),
                           hp=hvec.reshape(h, w).astype(np.int32),
                           method="graph", mesh_mvf=mvf, jp=jp, ku=ku)
    raise ValueError(f"unknown method {method!r}")


def compose_pair(pair: SubbandPair) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct (f_odd, f_even) bit-exactly from a subband pair."""
    if pair.method == "graph":
        if pair.jp is None or pair.ku is None:
            raise ValueError("graph pair lacks its matrices")
        x_even, x_odd = graph_unlift(pair.hp.ravel(), pair.lp.ravel(),
                                     pair.jp, pair.ku)
        h, w = pair.hp.shape
        return x_odd.reshape(h, w).astype(np.int32), x_even.reshape(h, w).astype(np.int32)
    predictor, updater = _warp_operators(pair)
    return haar_unlift(pair.hp, pair.lp, predictor, updater)


def rebuild_pair(lp: np.ndarray, hp: np.ndarray, method: str, params: LiftingParams,
                 mvf: BlockMVF | MeshMVF | None) -> SubbandPair:
    """Reassemble an invertible SubbandPair from stored planes and MVF.

    The graph matrices are rebuilt deterministically from the mesh MVF, so a
    decoded MVF file is all the motion side information a decoder needs.
    """
    pair = SubbandPair(lp=np.asarray(lp, np.int32), hp=np.asarray(hp, np.int32),
                       method=method)
    if method == "none":
        return pair
    if method == "block":
        if not isinstance(mvf, BlockMVF):
            raise ValueError("block method needs a BlockMVF")
        return replace(pair, block_mvf=mvf)
    if not isinstance(mvf, MeshMVF):
        raise ValueError(f"{method} method needs a MeshMVF")
    if method == "mesh":
        return replace(pair, mesh_mvf=mvf)
    if method == "graph":
        h, w = pair.hp.shape
        fld = motion.deformed_node_positions(mvf, w, h)
        jp, ku = graph.pair_matrices(fld, params.knn, params.update_variant,
                                     params.distances)
        return replace(pair, mesh_mvf=mvf, jp=jp, ku=ku)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class DecomposeResult:
    lp: Volume
    hp: Volume
    pairs: list[SubbandPair]
    method: str
    params: LiftingParams

    def encoded_mvfs(self) -> list[bytes]:
        """Serialized per-pair motion side information (empty for none)."""
        out = []
        for pair in self.pairs:
            if pair.method == "block":
                out.append(motion.encode_mvf(pair.block_mvf))
            elif pair.method in ("mesh", "graph"):
                out.append(motion.encode_mvf(pair.mesh_mvf))
        return out


def decompose_volume(vol: Volume, method: str,
                     params: LiftingParams = LiftingParams()) -> DecomposeResult:
    """One temporal Haar level over consecutive frame pairs."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if vol.frame_count < 2 or vol.frame_count % 2 != 0:
        raise ValueError("decomposition needs an even frame count >= 2")
    pairs = []
    for t in range(vol.frame_count // 2):
        pairs.append(decompose_pair(vol.frame(2 * t), vol.frame(2 * t + 1),
                                    method, params))
    lp = Volume(data=np.stack([p.lp for p in pairs]), bit_depth=vol.bit_depth,
                signed=True, axis_label=vol.axis_label)
    hp = Volume(data=np.stack([p.hp for p in pairs]), bit_depth=vol.bit_depth,
                signed=True, axis_label=vol.axis_label)
    return DecomposeResult(lp=lp, hp=hp, pairs=pairs, method=method, params=params)


def compose_volume(result: DecomposeResult, bit_depth: int | None = None) -> Volume:
    """Bit-exact inverse of decompose_volume."""
    frames = []
    for pair in result.pairs:
        f_odd, f_even = compose_pair(pair)
        frames.append(f_odd)
        frames.append(f_even)
    return Volume(data=np.stack(frames),
                  bit_depth=bit_depth if bit_depth is not None else result.lp.bit_depth,
                  axis_label=result.lp.axis_label)
