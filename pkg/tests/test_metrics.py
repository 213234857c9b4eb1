import math

import numpy as np
import pytest

from mcwl.metrics import entropy_bits, format_db, lp_quality, mean_db, mean_energy, psnr
from mcwl.volume import Volume


def test_psnr_identical_frames_is_inf():
    f = np.arange(64, dtype=np.int32).reshape(8, 8)
    assert math.isinf(psnr(f, f, 12))


def test_psnr_unit_mse_12bit():
    a = np.zeros((8, 8), np.int32)
    b = np.ones((8, 8), np.int32)
    want = 10.0 * math.log10(4095.0 ** 2)  # 72.2451 dB; peak is 2^12 - 1
    assert psnr(a, b, 12) == pytest.approx(want, rel=1e-12)


def test_psnr_symmetry():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 4096, size=(8, 8)).astype(np.int32)
    b = rng.integers(0, 4096, size=(8, 8)).astype(np.int32)
    assert psnr(a, b, 12) == psnr(b, a, 12)


def test_psnr_monotone_in_mse():
    a = np.zeros((8, 8), np.int32)
    values = [psnr(a, np.full((8, 8), k, np.int32), 12) for k in (1, 2, 5, 9)]
    for hi, lo in zip(values, values[1:]):
        assert hi > lo


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2), np.int32), np.zeros((3, 3), np.int32), 12)


def test_mean_energy_basics():
    assert mean_energy(np.zeros((4, 4), np.int32)) == 0.0
    band = np.full((4, 4), 2, np.int32)
    band[::2] = -2
    assert mean_energy(band) == 4.0


def test_mean_energy_matches_two_pass_oracle():
    rng = np.random.default_rng(1)
    band = rng.integers(-500, 500, size=(17, 13)).astype(np.int32)
    total = 0.0
    for v in band.ravel().tolist():
        total += float(v) * float(v)
    want = total / band.size
    assert mean_energy(band) == pytest.approx(want, rel=1e-9)


def test_mean_energy_quadratic_scaling():
    rng = np.random.default_rng(2)
    band = rng.integers(-20, 20, size=(6, 6)).astype(np.int32)
    assert mean_energy(band * 3) == pytest.approx(9 * mean_energy(band), rel=1e-12)


def test_mean_energy_empty_rejected():
    with pytest.raises(ValueError):
        mean_energy(np.zeros((0,), np.int32))


def test_entropy_constant_band():
    bits, nbytes = entropy_bits(np.full((8, 8), 42, np.int32))
    assert bits == 0.0 and nbytes == 0.0


def test_entropy_two_symbols():
    band = np.zeros(64, np.int32)
    band[::2] = 7
    bits, nbytes = entropy_bits(band)
    assert bits == pytest.approx(64.0, rel=1e-12)
    assert nbytes == pytest.approx(8.0, rel=1e-12)


def test_entropy_uniform_eight_symbols():
    rng = np.random.default_rng(3)
    band = rng.integers(0, 8, size=20000).astype(np.int32)
    bits, _ = entropy_bits(band)
    assert abs(bits / band.size - 3.0) < 0.05


def test_entropy_upper_bound():
    rng = np.random.default_rng(4)
    band = rng.integers(-37, 12, size=(25, 25)).astype(np.int32)
    bits, _ = entropy_bits(band)
    distinct = np.unique(band).size
    assert bits <= band.size * math.ceil(math.log2(distinct)) + 1e-9


def test_lp_quality_references_odd_frames():
    rng = np.random.default_rng(5)
    frames = rng.integers(0, 4096, size=(4, 6, 6)).astype(np.int32)
    original = Volume(data=frames)
    lp = Volume(data=frames[0::2].copy(), signed=True)
    per, avg = lp_quality(lp, original)
    assert all(math.isinf(p) for p in per)
    assert math.isinf(avg)


def test_lp_quality_single_and_mean():
    rng = np.random.default_rng(6)
    frames = rng.integers(100, 200, size=(4, 6, 6)).astype(np.int32)
    original = Volume(data=frames)
    lp_data = frames[0::2] + np.array([1, 2], np.int32)[:, None, None]
    lp = Volume(data=lp_data, signed=True)
    per, avg = lp_quality(lp, original)
    assert len(per) == 2
    want = [psnr(lp_data[t], frames[2 * t], 12) for t in range(2)]
    assert per == pytest.approx(want, rel=1e-12)
    assert avg == pytest.approx((want[0] + want[1]) / 2, rel=1e-12)


def test_lp_quality_count_mismatch():
    original = Volume(data=np.zeros((4, 4, 4), np.int32))
    lp = Volume(data=np.zeros((3, 4, 4), np.int32), signed=True)
    with pytest.raises(ValueError):
        lp_quality(lp, original)


def test_mean_db_and_format():
    assert mean_db([1.0, 3.0]) == 2.0
    assert math.isinf(mean_db([1.0, math.inf]))
    assert format_db(math.inf) == "inf"
    assert format_db(1.5) == "1.500000"
