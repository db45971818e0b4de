"""Quadrature and normalized Legendre evaluation against independent values.

Frozen references were computed with mpmath at 60 significant digits:
Gauss-Legendre nodes by Newton refinement of the mp-precision Legendre
polynomial, and function values from mpmath.legenp with the Condon-Shortley
phase stripped and the unit-L2 scaling sqrt((2k+1)/2 * (k-m)!/(k+m)!)
applied.
"""
import numpy as np
import pytest

from bfsht import (gauss_legendre, legendre_normalized,
                   legendre_normalized_column, turning_point)

# (k, m, x, value)
LEGENDRE_TABLE = [
    (0, 0, 0.3, 0.70710678118654752),
    (1, 0, 0.5, 0.61237243569579452),
    (1, 1, 0.0, 0.86602540378443865),
    (2, 2, 0.0, 0.96824583655185422),
    (3, 0, -0.2, 0.52383203414835179),
    (5, 3, -0.7, 1.0769735253494911),
    (7, 2, 0.5, -0.52393383009274995),
    (10, 10, 0.9, 0.00033679215998384554),
    (12, 5, 0.123, -0.82638676021472593),
    (40, 17, 0.8, -1.0213331545449112),
]

# deep-order column m=150 at x=0.95: (k, value); spans the underflow ramp,
# the turning region, and the oscillatory regime
DEEP_COLUMN = [
    (150, 3.9411520355690301e-76),
    (151, 6.5173059373715937e-75),
    (200, 8.1593311805313725e-47),
    (333, 5.2725096498998042e-14),
    (480, 1.8731326015855223),
    (600, -1.8121445173242905),
]

# Gauss-Legendre order 64: (index, node)
GL64_NODES = [
    (0, -0.999305041735772139),
    (20, -0.531279464019894546),
    (50, 0.783972358943341408),
]


def test_gauss_legendre_analytic_small_orders():
    one = gauss_legendre(1)
    assert one.nodes == pytest.approx([0.0], abs=1e-15)
    assert one.weights == pytest.approx([2.0], abs=1e-15)
    two = gauss_legendre(2)
    r = 1.0 / np.sqrt(3.0)
    assert two.nodes == pytest.approx([-r, r], abs=1e-15)
    assert two.weights == pytest.approx([1.0, 1.0], abs=1e-15)
    three = gauss_legendre(3)
    s = np.sqrt(3.0 / 5.0)
    assert three.nodes == pytest.approx([-s, 0.0, s], abs=1e-15)
    assert three.weights == pytest.approx([5 / 9, 8 / 9, 5 / 9], abs=1e-15)


def test_gauss_legendre_64_nodes_frozen():
    rule = gauss_legendre(64)
    for idx, want in GL64_NODES:
        assert abs(rule.nodes[idx] - want) < 5e-16


def test_gauss_legendre_moments_exact():
    # an order-n rule integrates monomials up to degree 2n-1 exactly
    rule = gauss_legendre(8)
    for k in range(16):
        got = np.sum(rule.weights * rule.nodes ** k)
        want = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert got == pytest.approx(want, abs=2e-15), k


@pytest.mark.parametrize("order", [33, 64])
def test_gauss_legendre_structure(order):
    rule = gauss_legendre(order)
    assert rule.nodes.shape == (order,)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert np.sum(rule.weights) == pytest.approx(2.0, abs=1e-14)
    # symmetric rule: nodes negate pairwise, weights match
    np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=1e-15)
    np.testing.assert_allclose(rule.weights, rule.weights[::-1], atol=1e-15)


@pytest.mark.parametrize("order", [0, -3])
def test_gauss_legendre_rejects_bad_order(order):
    with pytest.raises(ValueError):
        gauss_legendre(order)


def test_normalized_values_frozen():
    for k, m, x, want in LEGENDRE_TABLE:
        got = legendre_normalized(k, m, x)
        assert got == pytest.approx(want, rel=1e-13), (k, m, x)


def test_normalized_column_agrees_with_scalar():
    vals = legendre_normalized_column(5, 20, 0.37)
    assert vals.shape == (16,)
    for k in (5, 9, 14, 20):
        assert vals[k - 5] == pytest.approx(legendre_normalized(k, 5, 0.37),
                                            rel=1e-15)


def test_normalized_deep_column_frozen():
    vals = legendre_normalized_column(150, 600, 0.95)
    for k, want in DEEP_COLUMN:
        assert vals[k - 150] == pytest.approx(want, rel=1e-12), k


def test_normalized_underflow_ramp():
    # at x = 0.999 the m=200 seed is ~1e-260: representable, not flushed
    near = legendre_normalized_column(200, 210, 0.999)
    assert 0.0 < np.abs(near).max() < 1e-250
    # at x = 0.9999 the whole column is below the flush threshold
    far = legendre_normalized_column(200, 210, 0.9999)
    assert np.all(far == 0.0)


def test_normalized_peak_positive():
    # this normalization carries no Condon-Shortley sign: P_mm > 0
    for m in (1, 5, 17, 40):
        assert legendre_normalized(m, m, 0.3) > 0.0


def test_normalized_parity_reflection():
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = int(rng.integers(0, 30))
        m = int(rng.integers(0, k + 1))
        x = float(rng.uniform(0.02, 0.95))
        left = legendre_normalized(k, m, -x)
        right = (-1.0) ** (k + m) * legendre_normalized(k, m, x)
        assert left == pytest.approx(right, rel=1e-14, abs=1e-300)


def test_normalized_rejects_bad_degree_order():
    with pytest.raises(ValueError):
        legendre_normalized(3, 4, 0.5)
    with pytest.raises(ValueError):
        legendre_normalized(3, -1, 0.5)


def test_orthonormality_small():
    # 2N-node rule integrates products of degree <= 4N-1 exactly
    n = 16
    rule = gauss_legendre(2 * n)
    for m in (0, 3):
        table = np.stack([legendre_normalized_column(m, 2 * n - 1, x)
                          for x in rule.nodes])
        gram = table.T @ (rule.weights[:, None] * table)
        dev = np.abs(gram - np.eye(gram.shape[0])).max()
        assert dev < 1e-13, m


def test_turning_point_frozen():
    assert turning_point(100, 20) == pytest.approx(0.20027901501529138,
                                                   rel=1e-12)
    assert turning_point(1, 1) == pytest.approx(0.6154797086703873, rel=1e-12)
    assert turning_point(1000000, 1) == pytest.approx(8.660249707720614e-07,
                                                      rel=1e-9)


def test_turning_point_monotone_in_degree():
    angles = [turning_point(k, 40) for k in range(40, 400, 7)]
    assert np.all(np.diff(angles) < 0)


def test_turning_point_rejects_bad_args():
    with pytest.raises(ValueError):
        turning_point(10, 0)
    with pytest.raises(ValueError):
        turning_point(3, 5)
