"""Dyadic trees and the butterfly factorization on oscillatory kernels."""
import io

import numpy as np
import pytest

from bfsht.butterfly import (ButterflyFactorization, build_trees, idbf_apply,
                             idbf_apply_transpose, idbf_factor,
                             load_factorization, save_factorization)
from bfsht.lowrank import (FunctionOracle, MatrixOracle, RankOverflowError,
                           SamplingConfig)


def dft_oracle(n):
    # a real DFT-like kernel: dense rank but rapidly compressible sub-blocks
    scale = 1.0 / np.sqrt(n)
    return FunctionOracle(lambda i, j: np.cos(2.0 * np.pi * i * j / n) * scale,
                          (n, n))


def dense_of(oracle):
    m, n = oracle.shape
    return oracle.block(np.arange(m, dtype=np.intp),
                        np.arange(n, dtype=np.intp))


def test_build_trees_depths():
    rt, ct = build_trees(16, 16, 2)
    assert rt.depth == 3 and ct.depth == 3
    assert [len(lv) for lv in rt.levels] == [1, 2, 4, 8]
    rt, ct = build_trees((0, 1), (0, 1), 4)
    assert rt.depth == 0
    # 10 over leaf 2 needs ceil(log2(5)) = 3 halvings, not floor
    rt, ct = build_trees(10, 13, 2)
    assert rt.depth == 3


def test_build_trees_levels_partition():
    rt, _ = build_trees((3, 29), (0, 26), 4)
    for level in rt.levels:
        assert level[0][0] == 3 and level[-1][1] == 29
        for (a0, a1), (b0, b1) in zip(level, level[1:]):
            assert a1 == b0
            assert a1 > a0 and b1 > b0


@pytest.mark.parametrize("n,leaf", [(8, 1), (9, 2), (40, 7), (33, 32),
                                    (64, 64), (65, 64)])
def test_build_trees_leaf_bound(n, leaf):
    rt, _ = build_trees(n, n, leaf)
    sizes = [b - a for a, b in rt.levels[-1]]
    assert max(sizes) <= leaf
    assert min(sizes) >= 1
    if rt.depth > 0:
        # one level shallower would overshoot the leaf bound
        assert n > leaf * 2 ** (rt.depth - 1)


def test_build_trees_never_splits_to_empty():
    # leaf_max=1 on a ragged size: the depth cap trades the leaf bound for
    # nonempty leaves
    rt, _ = build_trees(5, 5, 1)
    assert rt.depth == 2
    sizes = [b - a for a, b in rt.levels[-1]]
    assert min(sizes) >= 1
    assert max(sizes) == 2


def test_build_trees_validates():
    with pytest.raises(ValueError):
        build_trees((4, 4), 8, 2)
    with pytest.raises(ValueError):
        build_trees(8, 8, 0)


def test_small_matrix_stays_dense():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((12, 9))
    fac = idbf_factor(MatrixOracle(a), SamplingConfig())
    assert fac.levels == 0
    assert len(fac.factors) == 1
    assert fac.max_rank == 0
    x = rng.standard_normal(9)
    np.testing.assert_allclose(idbf_apply(fac, x), a @ x, atol=1e-14)


def test_dft_factorization_accuracy():
    n = 128
    oracle = dft_oracle(n)
    fac = idbf_factor(oracle, SamplingConfig(), leaf_max=16)
    dense = dense_of(oracle)
    got = idbf_apply(fac, np.eye(n))
    err = np.linalg.norm(got - dense) / np.linalg.norm(dense)
    assert err < 1e-8
    assert fac.levels == 3
    # at this size the chain is not yet smaller than dense; hold it to the
    # budget that scales with rank times leaf count instead
    assert fac.nnz <= 16 * n * fac.adaptive_rank
    assert fac.max_rank >= 1


def test_dft_adjoint_consistency():
    n = 64
    oracle = dft_oracle(n)
    fac = idbf_factor(oracle, SamplingConfig(), leaf_max=16)
    dense = dense_of(oracle)
    rng = np.random.default_rng(7)
    y = rng.standard_normal(n)
    np.testing.assert_allclose(idbf_apply_transpose(fac, y), dense.T @ y,
                               atol=1e-9)
    x = rng.standard_normal(n)
    lhs = np.dot(idbf_apply(fac, x), y)
    rhs = np.dot(x, idbf_apply_transpose(fac, y))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_smooth_kernel_compresses_hard():
    oracle = FunctionOracle(lambda i, j: np.cos(0.01 * i) * np.cos(0.02 * j),
                            (200, 170))
    fac = idbf_factor(oracle, SamplingConfig(), leaf_max=32)
    assert fac.max_rank <= 3
    dense = dense_of(oracle)
    err = np.linalg.norm(idbf_apply(fac, np.eye(170)) - dense)
    assert err / np.linalg.norm(dense) < 1e-10


def test_factorization_deterministic():
    oracle = dft_oracle(64)
    one = idbf_factor(oracle, SamplingConfig(), leaf_max=16)
    two = idbf_factor(oracle, SamplingConfig(), leaf_max=16)
    assert len(one.factors) == len(two.factors)
    for f, g in zip(one.factors, two.factors):
        assert f.shape == g.shape
        assert np.array_equal(f.rows, g.rows)
        assert np.array_equal(f.cols, g.cols)
        assert np.array_equal(f.vals, g.vals)


def test_noise_overflows_rank_cap():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((256, 256))
    cfg = SamplingConfig(adaptive_rank=2, oversampling=1)
    with pytest.raises(RankOverflowError,
                       match=r"butterfly ID overflow at level \d+, "
                             r"node pair \(\d+, \d+\)"):
        idbf_factor(MatrixOracle(a), cfg, leaf_max=64)


def test_apply_validates_length():
    fac = idbf_factor(dft_oracle(32), SamplingConfig(), leaf_max=8)
    with pytest.raises(ValueError, match="against shape"):
        idbf_apply(fac, np.zeros(31))
    with pytest.raises(ValueError, match="against shape"):
        idbf_apply_transpose(fac, np.zeros(33))


def test_apply_matrix_rhs():
    n = 32
    oracle = dft_oracle(n)
    fac = idbf_factor(oracle, SamplingConfig(), leaf_max=8)
    rng = np.random.default_rng(9)
    x = rng.standard_normal((n, 5))
    cols = np.stack([idbf_apply(fac, x[:, k]) for k in range(5)], axis=1)
    np.testing.assert_allclose(idbf_apply(fac, x), cols, atol=1e-13)


def test_save_load_roundtrip():
    fac = idbf_factor(dft_oracle(64), SamplingConfig(), leaf_max=16)
    buf = io.BytesIO()
    save_factorization(fac, buf)
    buf.seek(0)
    back = load_factorization(buf)
    assert isinstance(back, ButterflyFactorization)
    assert back.shape == fac.shape
    assert back.levels == fac.levels
    assert back.middle == fac.middle
    assert back.max_rank == fac.max_rank
    assert back.nnz == fac.nnz
    x = np.random.default_rng(3).standard_normal(64)
    assert np.array_equal(idbf_apply(back, x), idbf_apply(fac, x))


def test_load_rejects_bad_bytes():
    with pytest.raises(ValueError, match="bad magic"):
        load_factorization(io.BytesIO(b"NOPE" + b"\x00" * 64))
