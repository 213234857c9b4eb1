"""Evaluation metrics: lowpass PSNR, highpass energy, entropy proxy.

The entropy figure is a zeroth-order histogram estimate standing in for an
external subband coder; it is reported in bits and bytes. Infinite PSNR is
kept as math.inf and rendered as the string "inf" in reports, never as a
placeholder number.
"""
from __future__ import annotations

import math

import numpy as np

from .volume import Volume


def psnr(a: np.ndarray, b: np.ndarray, bit_depth: int) -> float:
    """10*log10(peak^2 / MSE) with peak = 2^bit_depth - 1; inf when a == b."""
    if a.shape != b.shape:
        raise ValueError("frame shapes differ")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    peak = float(2 ** bit_depth - 1)
    return 10.0 * math.log10(peak * peak / mse)


def mean_energy(band: np.ndarray | Volume) -> float:
    """Arithmetic mean of squared coefficients."""
    data = band.data if isinstance(band, Volume) else np.asarray(band)
    if data.size == 0:
        raise ValueError("empty band")
    sq = data.astype(np.float64)
    return float(np.mean(sq * sq))


def entropy_bits(band: np.ndarray | Volume) -> tuple[float, float]:
    """Zeroth-order empirical entropy of the sample histogram.

    Returns (total bits, total bytes) for coding all samples at the
    per-symbol entropy rate.
    """
    data = band.data if isinstance(band, Volume) else np.asarray(band)
    if data.size == 0:
        raise ValueError("empty band")
    _, counts = np.unique(data.ravel(), return_counts=True)
    p = counts / data.size
    bits_per_sample = float(-np.sum(p * np.log2(p)))
    bits = bits_per_sample * data.size
    return bits, bits / 8.0


def lp_quality(lp: Volume, original: Volume) -> tuple[list[float], float]:
    """PSNR of each lowpass frame against the pair's original odd frame.

    Returns (per-pair PSNRs, arithmetic mean in dB). The reference for pair t
    is input frame 2t, the first frame of the pair.
    """
    if original.frame_count != 2 * lp.frame_count:
        raise ValueError("pair count does not match original frame count")
    per_pair = [psnr(lp.frame(t), original.frame(2 * t), original.bit_depth)
                for t in range(lp.frame_count)]
    return per_pair, mean_db(per_pair)


def mean_db(values: list[float]) -> float:
    if not values:
        raise ValueError("no values to average")
    if any(math.isinf(v) for v in values):
        return math.inf
    return sum(values) / len(values)


def format_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"
