import numpy as np
import pytest

from mcwl.graph import SparseMatrix, pair_matrices
from mcwl.lifting import (LiftingParams, compose_pair, compose_volume,
                          decompose_pair, decompose_volume, graph_lift,
                          graph_unlift, haar_lift, haar_unlift, rebuild_pair)
from mcwl.motion import decode_mvf, deformed_node_positions
from mcwl.volume import PhantomSpec, Volume, generate_phantom

SMALL = LiftingParams(grid_size=8, block_size=8, search_range=4, knn=9)


def test_haar_scalar_cases():
    ten = np.full((4, 4), 10, np.int32)
    thirteen = np.full((4, 4), 13, np.int32)
    hp, lp = haar_lift(ten, thirteen)
    assert np.all(hp == 3) and np.all(lp == 11)
    hp, lp = haar_lift(thirteen, ten)
    assert np.all(hp == -3) and np.all(lp == 11)  # floor(-1.5) = -2
    hp, lp = haar_lift(ten, ten)
    assert not hp.any() and np.all(lp == 10)


def test_haar_identity_roundtrip_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(20):
        odd = rng.integers(0, 4096, size=(9, 7)).astype(np.int32)
        even = rng.integers(0, 4096, size=(9, 7)).astype(np.int32)
        hp, lp = haar_lift(odd, even)
        back_odd, back_even = haar_unlift(hp, lp)
        assert np.array_equal(back_odd, odd)
        assert np.array_equal(back_even, even)


def test_textbook_haar_equivalence():
    rng = np.random.default_rng(1)
    odd = rng.integers(0, 4096, size=(6, 6)).astype(np.int32)
    even = rng.integers(0, 4096, size=(6, 6)).astype(np.int32)
    hp, lp = haar_lift(odd, even)
    want_hp = even.astype(np.int64) - odd.astype(np.int64)
    want_lp = odd.astype(np.int64) + np.floor(want_hp / 2.0).astype(np.int64)
    assert np.array_equal(hp, want_hp.astype(np.int32))
    assert np.array_equal(lp, want_lp.astype(np.int32))


def test_graph_lift_identity_matrices_is_plain_haar():
    rng = np.random.default_rng(2)
    odd = rng.integers(0, 4096, size=36).astype(np.int64)
    even = rng.integers(0, 4096, size=36).astype(np.int64)
    eye = SparseMatrix.eye(36)
    h, l = graph_lift(even, odd, eye, eye)
    hp, lp = haar_lift(odd.reshape(6, 6).astype(np.int32),
                       even.reshape(6, 6).astype(np.int32))
    assert np.array_equal(h, hp.ravel().astype(np.int64))
    assert np.array_equal(l, lp.ravel().astype(np.int64))


def test_graph_lift_constant_annihilation():
    eye_like = SparseMatrix.from_triplets([0, 0, 1, 1], [0, 1, 0, 1],
                                          [0.5, 0.5, 0.25, 0.75], 2, 2)
    c = np.full(2, 937, np.int64)
    h, l = graph_lift(c, c, eye_like, eye_like.transpose())
    assert not h.any()
    assert np.array_equal(l, c)


def test_graph_lift_handbuilt_two_edge_matrix():
    # 2x2 frames; prediction rows built by hand, update = transpose
    jp = SparseMatrix.from_triplets(
        [0, 0, 1, 1, 2, 3], [0, 1, 1, 2, 2, 3],
        [0.25, 0.75, 0.5, 0.5, 1.0, 1.0], 4, 4)
    ku = jp.transpose()
    odd = np.array([100, 200, 300, 400], np.int64)
    even = np.array([150, 250, 350, 450], np.int64)
    jd, kd = jp.to_dense(), ku.to_dense()
    want_h = even - np.floor(jd @ odd)
    want_l = odd + np.floor(0.5 * (kd @ want_h))
    h, l = graph_lift(even, odd, jp, ku)
    assert np.array_equal(h, want_h.astype(np.int64))
    assert np.array_equal(l, want_l.astype(np.int64))
    be, bo = graph_unlift(h, l, jp, ku)
    assert np.array_equal(be, even) and np.array_equal(bo, odd)


def test_graph_roundtrip_fuzz_both_variants():
    rng = np.random.default_rng(3)
    for variant in ("transpose", "eq5"):
        for _ in range(5):
            spec = PhantomSpec(width=12, height=12, frame_count=2, blob_count=4,
                               contraction_amplitude=2.0, noise_sigma=3.0,
                               rng_seed=int(rng.integers(1 << 30)))
            vol, _ = generate_phantom(spec)
            from mcwl.motion import estimate_mesh_mvf
            mvf = estimate_mesh_mvf(vol.frame(0), vol.frame(1), 4, 2)
            field = deformed_node_positions(mvf, 12, 12)
            jp, ku = pair_matrices(field, 6, variant)
            odd = rng.integers(0, 4096, size=144).astype(np.int64)
            even = rng.integers(0, 4096, size=144).astype(np.int64)
            h, l = graph_lift(even, odd, jp, ku)
            be, bo = graph_unlift(h, l, jp, ku)
            assert np.array_equal(be, even) and np.array_equal(bo, odd)


def _phantom(width=32, height=32, frames=4, amp=3.0, noise=2.0, seed=42):
    spec = PhantomSpec(width=width, height=height, frame_count=frames,
                       blob_count=8, contraction_amplitude=amp,
                       noise_sigma=noise, rng_seed=seed)
    return generate_phantom(spec)[0]


@pytest.mark.parametrize("method", ["none", "block", "mesh", "graph"])
def test_roundtrip_all_methods_on_phantom(method):
    vol = _phantom()
    res = decompose_volume(vol, method, SMALL)
    back = compose_volume(res, bit_depth=vol.bit_depth)
    assert np.array_equal(back.data, vol.data)


def test_decompose_validations():
    vol = _phantom()
    with pytest.raises(ValueError):
        decompose_volume(vol, "fancy", SMALL)
    odd_vol = Volume(data=vol.data[:3])
    with pytest.raises(ValueError):
        decompose_volume(odd_vol, "none", SMALL)


def test_static_volume_annihilates_warping_methods():
    vol = _phantom(amp=0.0, noise=0.0)
    for method in ("none", "block", "mesh"):
        res = decompose_volume(vol, method, SMALL)
        assert not res.hp.data.any(), method
        assert np.array_equal(res.lp.data, vol.data[0::2])


def test_none_equals_block_with_zero_search():
    vol = _phantom(seed=77)
    params0 = LiftingParams(grid_size=8, block_size=8, search_range=0, knn=9)
    r_none = decompose_volume(vol, "none", params0)
    r_block = decompose_volume(vol, "block", params0)
    assert np.array_equal(r_none.hp.data, r_block.hp.data)
    assert np.array_equal(r_none.lp.data, r_block.lp.data)


def test_mesh_and_graph_share_encoded_mvf_bytes():
    vol = _phantom(seed=5)
    r_mesh = decompose_volume(vol, "mesh", SMALL)
    r_graph = decompose_volume(vol, "graph", SMALL)
    assert r_mesh.encoded_mvfs() == r_graph.encoded_mvfs()
    assert len(r_mesh.encoded_mvfs()) == vol.frame_count // 2


def test_rebuild_pair_roundtrip_from_serialized_mvf():
    vol = _phantom(seed=8)
    for method in ("none", "block", "mesh", "graph"):
        res = decompose_volume(vol, method, SMALL)
        for t, pair in enumerate(res.pairs):
            mvf = None
            if method != "none":
                mvf = decode_mvf(res.encoded_mvfs()[t])
            rebuilt = rebuild_pair(pair.lp, pair.hp, method, SMALL, mvf)
            f_odd, f_even = compose_pair(rebuilt)
            assert np.array_equal(f_odd, vol.frame(2 * t))
            assert np.array_equal(f_even, vol.frame(2 * t + 1))


def test_decompose_pair_bad_method():
    vol = _phantom()
    with pytest.raises(ValueError):
        decompose_pair(vol.frame(0), vol.frame(1), "wavelets", SMALL)


def test_lifting_params_validation():
    with pytest.raises(ValueError):
        LiftingParams(update_variant="inverse")
    with pytest.raises(ValueError):
        LiftingParams(distances="exact")
