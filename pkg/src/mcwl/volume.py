"""Volume data model, binary I/O and synthetic deformable phantoms.

Frames are plain 2-D int32 arrays (row-major); a Volume stacks them into one
(frames, height, width) int32 array plus metadata. One signed container
serves raw input frames, highpass and lowpass coefficient planes alike.

File format (little-endian):

    magic   4s   "MCWL"
    version u8   1
    width   u16
    height  u16
    frames  u16
    depth   u8   bit depth of the original samples
    flags   u8   bit0: payload stored as i16 instead of u16

followed by frames*height*width samples, row-major within a frame,
frame-major overall. ``axis_label`` is in-memory metadata only (temporal and
spatially stacked sequences behave identically).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .kernels import warp_bilinear

MAGIC = b"MCWL"
VERSION = 1
_HEADER = struct.Struct("<4sBHHHBB")


@dataclass(frozen=True)
class Volume:
    data: np.ndarray  # (frames, height, width) int32
    bit_depth: int = 12
    signed: bool = False  # coefficient volumes use the signed container
    axis_label: str = "temporal"

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("volume data must be (frames, height, width)")
        if self.data.dtype != np.int32:
            object.__setattr__(self, "data", self.data.astype(np.int32))

    @property
    def frame_count(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def frame(self, t: int) -> np.ndarray:
        return self.data[t]


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of the synthetic contracting-blob sequence."""

    width: int = 128
    height: int = 128
    frame_count: int = 4
    blob_count: int = 16
    contraction_amplitude: float = 3.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    bit_depth: int = field(default=12, repr=False)

    def __post_init__(self):
        if self.contraction_amplitude < 0 or self.contraction_amplitude > 8:
            raise ValueError("contraction_amplitude must be in [0, 8] to stay "
                             "inside the motion search range")
        if self.frame_count < 2 or self.frame_count % 2 != 0:
            raise ValueError("frame_count must be even and >= 2")
        if self.width < 2 or self.height < 2:
            raise ValueError("phantom frames must be at least 2x2")


def save_volume(vol: Volume, path) -> int:
    """Write a volume; returns the byte count. Deterministic bytes."""
    if not (1 <= vol.bit_depth <= 16):
        raise ValueError(f"bit_depth {vol.bit_depth} outside [1, 16]")
    if vol.frame_count < 1 or vol.width < 1 or vol.height < 1:
        raise ValueError("cannot save an empty volume")
    for dim in (vol.width, vol.height, vol.frame_count):
        if dim > 0xFFFF:
            raise ValueError("dimension exceeds u16 header field")
    if vol.signed:
        lo, hi = -(2 ** 15), 2 ** 15 - 1
        payload_dtype = "<i2"
    else:
        lo, hi = 0, 2 ** vol.bit_depth - 1
        payload_dtype = "<u2"
    dmin = int(vol.data.min())
    dmax = int(vol.data.max())
    if dmin < lo or dmax > hi:
        raise ValueError(f"sample range [{dmin}, {dmax}] exceeds container [{lo}, {hi}]")
    header = _HEADER.pack(MAGIC, VERSION, vol.width, vol.height,
                          vol.frame_count, vol.bit_depth, 1 if vol.signed else 0)
    payload = vol.data.astype(payload_dtype).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
    return len(header) + len(payload)


def load_volume(path) -> Volume:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for volume header")
    magic, version, width, height, frames, bit_depth, flags = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    if width == 0 or height == 0 or frames == 0:
        raise ValueError("zero dimension in header")
    if bit_depth > 16 or bit_depth == 0:
        raise ValueError(f"bit_depth {bit_depth} outside [1, 16]")
    signed = bool(flags & 1)
    expected = frames * height * width * 2
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise ValueError(f"payload is {len(payload)} bytes, expected {expected}")
    dtype = "<i2" if signed else "<u2"
    data = np.frombuffer(payload, dtype=dtype).astype(np.int32)
    data = data.reshape(frames, height, width)
    if not signed and data.max(initial=0) >= 2 ** bit_depth:
        raise ValueError("sample exceeds declared bit depth")
    return Volume(data=data, bit_depth=bit_depth, signed=signed)


def _blob_image(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    """Smooth strictly textured base frame: one broad dome plus random blobs.

    Contrast is deliberately soft (a raised base level with blobs a few
    percent of full scale), mimicking soft-tissue CT: it keeps the subband
    energy proportions of the compensation methods in the regime the real
    sequences exhibit instead of an over-contrasted cartoon.
    """
    w, h = spec.width, spec.height
    maxval = float(2 ** spec.bit_depth - 1)
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    img = np.full((h, w), 0.25 * maxval)
    # broad dome keeps a usable gradient everywhere, including corners
    cx = rng.uniform(0.3 * w, 0.7 * w)
    cy = rng.uniform(0.3 * h, 0.7 * h)
    sigma = 0.75 * min(w, h)
    img += rng.uniform(0.08, 0.12) * maxval * np.exp(
        -((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma * sigma))
    for _ in range(spec.blob_count):
        cx = rng.uniform(-0.05 * w, 1.05 * w)
        cy = rng.uniform(-0.05 * h, 1.05 * h)
        sigma = rng.uniform(min(w, h) / 16.0, min(w, h) / 6.0)
        amp = rng.uniform(0.03, 0.10) * maxval
        img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma * sigma))
    return np.clip(img, 0.0, maxval)


def generate_phantom(spec: PhantomSpec) -> tuple[Volume, np.ndarray]:
    """Deterministic contracting/expanding blob sequence with ground truth.

    Frame t resamples frame 0 under the radial displacement
    amplitude * sin(pi*t/T) * (p - center) / r_max, so motion peaks mid
    sequence and every per-frame displacement stays within the amplitude.

    Returns the volume and per-pair correspondence fields of shape
    (frames/2, height, width, 2) holding (dx, dy) such that
    even_frame(p) ~ odd_frame(p + v(p)). Because the radial field is linear
    in p, that field has the closed form
    amplitude * (s_even - s_odd) / (1 + amplitude * s_odd / r_max) * (p - c) / r_max
    and is itself bounded by the amplitude.
    """
    rng = np.random.default_rng(spec.rng_seed)
    w, h, T = spec.width, spec.height, spec.frame_count
    maxval = 2 ** spec.bit_depth - 1
    base = _blob_image(spec, rng)

    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    r_max = float(np.hypot(cx, cy))
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    ux = np.broadcast_to((xs - cx) / r_max, (h, w))
    uy = np.broadcast_to((ys - cy) / r_max, (h, w))

    amp = spec.contraction_amplitude
    scales = amp * np.sin(np.pi * np.arange(T) / T)
    frames = np.empty((T, h, w), np.int32)
    for t in range(T):
        if scales[t] == 0.0:
            warped = base.copy()
        else:
            warped = warp_bilinear(base, np.ascontiguousarray(xs + scales[t] * ux),
                                   np.ascontiguousarray(ys + scales[t] * uy))
        if spec.noise_sigma > 0:
            warped = warped + rng.normal(0.0, spec.noise_sigma, size=(h, w))
        frames[t] = np.clip(np.rint(warped), 0, maxval).astype(np.int32)

    truth = np.empty((T // 2, h, w, 2), np.float64)
    for pair in range(T // 2):
        s_odd = scales[2 * pair]
        s_even = scales[2 * pair + 1]
        gain = (s_even - s_odd) / (1.0 + s_odd / r_max)
        truth[pair, :, :, 0] = gain * ux
        truth[pair, :, :, 1] = gain * uy
    return Volume(data=frames, bit_depth=spec.bit_depth), truth
