import numpy as np
import pytest

from mcwl.motion import BlockMVF, MeshMVF, upsample_grid
from mcwl.volume import PhantomSpec, generate_phantom
from mcwl.warping import inverse_warp_block, inverse_warp_mesh, warp


def _identity_field(w, h):
    grid = max(2, min(w, h) // 2)
    rows = h // grid + 1
    cols = w // grid + 1
    return upsample_grid(MeshMVF(grid, 0, np.zeros((rows, cols, 2), np.int32)), w, h)


def _ramp(w, h):
    return np.broadcast_to(np.arange(w, dtype=np.int32), (h, w)).copy()


def test_warp_identity_is_exact():
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 4096, size=(12, 12)).astype(np.int32)
    out = warp(frame, _identity_field(12, 12))
    assert np.array_equal(out, frame.astype(np.float64))


def test_warp_constant_shift_on_ramp():
    vec = np.zeros((3, 3, 2), np.int32)
    vec[:, :, 0] = 1
    field = upsample_grid(MeshMVF(4, 2, vec), 8, 8)
    out = warp(_ramp(8, 8), field)
    assert np.array_equal(out[:, :-1], np.broadcast_to(np.arange(1.0, 8.0), (8, 7)))
    assert np.all(out[:, -1] == 7.0)  # clamped at the border


def test_warp_subpixel_bilinear_value():
    # hand evaluation: ramp I(x, y) = x sampled at x = 2.5 gives 2.5
    frame = _ramp(8, 8)
    vec = np.zeros((3, 3, 2), np.int32)
    vec[:, 0, 0] = 1  # left column of grid points shifted by (1, 0)
    field = upsample_grid(MeshMVF(4, 2, vec), 8, 8)
    assert field.x[3, 2] == 2.5
    out = warp(frame, field)
    assert out[3, 2] == 2.5


def test_warp_stays_in_value_range():
    rng = np.random.default_rng(1)
    frame = rng.integers(100, 200, size=(16, 16)).astype(np.int32)
    vec = rng.integers(-3, 4, size=(3, 3, 2)).astype(np.int32)
    out = warp(frame, upsample_grid(MeshMVF(8, 3, vec), 16, 16))
    assert out.min() >= 100 and out.max() <= 199


def test_warp_dimension_mismatch():
    with pytest.raises(ValueError):
        warp(np.zeros((4, 4), np.int32), _identity_field(8, 8))


def scatter_fill_oracle(hp, mvf):
    """Independent scatter + brute-force nearest-neighbor fill."""
    h, w = hp.shape
    bs = mvf.block_size
    out = np.zeros((h, w))
    written = np.zeros((h, w), bool)
    for y in range(h):
        for x in range(w):
            dx, dy = mvf.vectors[min(y // bs, mvf.vectors.shape[0] - 1),
                                 min(x // bs, mvf.vectors.shape[1] - 1)]
            tx = min(max(x + int(dx), 0), w - 1)
            ty = min(max(y + int(dy), 0), h - 1)
            out[ty, tx] = hp[y, x]
            written[ty, tx] = True
    for y in range(h):
        for x in range(w):
            if written[y, x]:
                continue
            best, bestd = None, None
            for cy in range(h):
                for cx in range(w):
                    if not written[cy, cx]:
                        continue
                    d = (cy - y) ** 2 + (cx - x) ** 2
                    if bestd is None or d < bestd:
                        bestd, best = d, (cy, cx)
            out[y, x] = out[best]
    return out


def test_inverse_block_zero_is_identity():
    rng = np.random.default_rng(2)
    hp = rng.integers(-100, 100, size=(8, 8)).astype(np.int32)
    mvf = BlockMVF(4, 0, np.zeros((2, 2, 2), np.int32))
    assert np.array_equal(inverse_warp_block(hp, mvf), hp.astype(np.float64))


def test_inverse_block_single_shifted_block():
    rng = np.random.default_rng(3)
    hp = rng.integers(-50, 50, size=(16, 16)).astype(np.int32)
    vec = np.zeros((2, 2, 2), np.int32)
    vec[0, 0] = (8, 0)
    mvf = BlockMVF(8, 8, vec)
    got = inverse_warp_block(hp, mvf)
    want = scatter_fill_oracle(hp, mvf)
    assert np.array_equal(got, want)


def test_inverse_block_uniform_translation():
    rng = np.random.default_rng(4)
    hp = rng.integers(-50, 50, size=(12, 12)).astype(np.int32)
    vec = np.full((3, 3, 2), 0, np.int32)
    vec[:, :, 0] = 2
    vec[:, :, 1] = -1
    mvf = BlockMVF(4, 4, vec)
    got = inverse_warp_block(hp, mvf)
    assert np.array_equal(got, scatter_fill_oracle(hp, mvf))
    # away from clamped borders this is a plain shifted copy
    assert np.array_equal(got[0:10, 3:11], hp[1:11, 1:9].astype(np.float64))


def test_inverse_block_random_fuzz_vs_oracle():
    rng = np.random.default_rng(5)
    for _ in range(4):
        hp = rng.integers(-30, 30, size=(12, 12)).astype(np.int32)
        vec = rng.integers(-4, 5, size=(3, 3, 2)).astype(np.int32)
        mvf = BlockMVF(4, 4, vec)
        assert np.array_equal(inverse_warp_block(hp, mvf), scatter_fill_oracle(hp, mvf))


def test_inverse_mesh_zero_is_identity():
    rng = np.random.default_rng(6)
    hp = rng.integers(-100, 100, size=(16, 16)).astype(np.int32)
    mvf = MeshMVF(8, 0, np.zeros((3, 3, 2), np.int32))
    assert np.array_equal(inverse_warp_mesh(hp, mvf), hp.astype(np.float64))


def test_inverse_mesh_constant_field_negates_shift():
    vec = np.zeros((3, 3, 2), np.int32)
    vec[:, :, 0] = 1
    mvf = MeshMVF(8, 2, vec)
    out = inverse_warp_mesh(_ramp(16, 16), mvf)
    # shift by (-1, 0): value x-1, clamped on the left edge
    assert np.all(out[:, 0] == 0.0)
    assert np.array_equal(out[:, 1:], np.broadcast_to(np.arange(0.0, 15.0), (16, 15)))


def test_inverse_mesh_roundtrip_deviation_reported():
    # the negated-grid inverse is an approximation by design; report the
    # deviation on a smooth deformed pair and only bound it loosely
    spec = PhantomSpec(width=48, height=48, frame_count=2, blob_count=8,
                       contraction_amplitude=4.0, noise_sigma=0.0, rng_seed=13)
    vol, _ = generate_phantom(spec)
    from mcwl.motion import estimate_mesh_mvf
    mvf = estimate_mesh_mvf(vol.frame(0), vol.frame(1), 8, 8)
    field = upsample_grid(mvf, 48, 48)
    fwd = warp(vol.frame(0), field)
    back = inverse_warp_mesh(np.rint(fwd).astype(np.int32), mvf)
    dev = float(np.abs(back - vol.frame(0)).max())
    print(f"mesh warp/inverse max deviation: {dev:.2f} intensity units")
    assert dev < 2000.0
