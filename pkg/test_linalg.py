#!/usr/bin/env python3
"""
Tests for the matrix core: Haar sampling, compact SVD, Hermitian solves.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from mash_sim.linalg import (
    compact_svd,
    gaussian_matrix,
    haar_unitary,
    hermitian_part,
    hermitian_solve,
    principal_angles,
)
from mash_sim.utils import InvalidDimensionError, InvalidParameterError, InvalidShapeError, SingularSystemError


def test_haar_unitary_is_unitary():
    rng = np.random.default_rng(1)
    for n in (1, 4, 16, 100):
        q = haar_unitary(n, rng)
        assert q.shape == (n, n)
        assert_allclose(q.conj().T @ q, np.eye(n), atol=1e-12)


def test_haar_unitary_rejects_empty_dimension():
    with pytest.raises(InvalidDimensionError, match="at least 1"):
        haar_unitary(0, np.random.default_rng(0))


def test_haar_column_projection_is_beta_distributed():
    """|u^H q_1|^2 of a Haar column follows Beta(1, n - 1)."""
    rng = np.random.default_rng(2024)
    n = 16
    samples = np.array([np.abs(haar_unitary(n, rng)[0, 0]) ** 2 for _ in range(2000)])
    assert stats.kstest(samples, stats.beta(1, n - 1).cdf).pvalue > 0.01


def test_haar_distribution_is_right_invariant():
    rng = np.random.default_rng(7)
    n = 16
    fixed = haar_unitary(n, rng)
    plain = np.array([np.abs(haar_unitary(n, rng)[0, 0]) ** 2 for _ in range(2000)])
    rotated = np.array([np.abs((haar_unitary(n, rng) @ fixed)[0, 0]) ** 2 for _ in range(2000)])
    assert stats.ks_2samp(plain, rotated).pvalue > 0.01


def test_gaussian_matrix_variance():
    rng = np.random.default_rng(3)
    sample = gaussian_matrix(200, 200, 2.0, rng)
    assert sample.dtype == np.complex128
    assert abs(np.mean(np.abs(sample) ** 2) - 2.0) < 0.05 * 2.0
    assert abs(np.var(sample.real) - 1.0) < 0.05

    with pytest.raises(InvalidParameterError, match="non-negative"):
        gaussian_matrix(2, 2, -1.0, rng)


def test_compact_svd_truncates_to_numerical_rank():
    rng = np.random.default_rng(4)
    a = gaussian_matrix(10, 3, 1.0, rng) @ gaussian_matrix(3, 8, 1.0, rng)

    svd = compact_svd(a)
    assert svd.rank == 3
    assert svd.left.shape == (10, 3)
    assert svd.right.shape == (8, 3)
    assert np.all(np.diff(svd.singular_values) <= 0)
    assert_allclose(svd.reconstruct(), a, atol=1e-12)
    assert_allclose(svd.left.conj().T @ svd.left, np.eye(3), atol=1e-12)


def test_compact_svd_of_unit_outer_product():
    rng = np.random.default_rng(5)
    a = gaussian_matrix(6, 1, 1.0, rng)
    b = gaussian_matrix(9, 1, 1.0, rng)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)

    svd = compact_svd(a @ b.conj().T)
    assert svd.rank == 1
    assert abs(svd.singular_values[0] - 1.0) <= 1e-10
    assert abs(abs(svd.left[:, 0].conj() @ a[:, 0]) - 1.0) <= 1e-10


def test_compact_svd_of_zero_and_empty_matrices():
    zero = compact_svd(np.zeros((5, 4)))
    assert zero.rank == 0
    assert zero.left.shape == (5, 0)
    assert zero.right.shape == (4, 0)

    empty = compact_svd(np.zeros((3, 0)))
    assert empty.rank == 0

    with pytest.raises(InvalidShapeError):
        compact_svd(np.zeros(4))


def test_hermitian_solve_matches_dense_solver():
    rng = np.random.default_rng(5)
    g = gaussian_matrix(12, 12, 1.0, rng)
    a = hermitian_part(g @ g.conj().T) + np.eye(12)
    b = gaussian_matrix(12, 3, 1.0, rng)
    assert_allclose(hermitian_solve(a, b), np.linalg.solve(a, b), rtol=1e-10, atol=1e-12)


def test_hermitian_solve_errors():
    rng = np.random.default_rng(6)
    b = np.ones((4, 1), dtype=complex)

    with pytest.raises(SingularSystemError, match="not Hermitian"):
        hermitian_solve(gaussian_matrix(4, 4, 1.0, rng), b)

    with pytest.raises(SingularSystemError, match="positive definite"):
        hermitian_solve(np.zeros((4, 4)), b)

    with pytest.raises(InvalidShapeError):
        hermitian_solve(np.eye(4), np.ones((3, 1)))

    # Singular systems are still LinAlgErrors for callers using the numpy idiom
    with pytest.raises(np.linalg.LinAlgError):
        hermitian_solve(-np.eye(4), b)


def test_principal_angles():
    rng = np.random.default_rng(8)
    basis = np.linalg.qr(gaussian_matrix(6, 2, 1.0, rng))[0]
    mixed = basis @ gaussian_matrix(2, 2, 1.0, rng)
    assert np.max(principal_angles(basis, mixed)) < 1e-10

    e = np.eye(4)
    assert_allclose(principal_angles(e[:, :1], e[:, 1:2]), [np.pi / 2])
    assert principal_angles(e[:, :0], e[:, :1]).size == 0


def run_all_tests():
    """Run all tests."""
    print("=" * 60)
    print("MASH Simulator - Linear Algebra Tests")
    print("=" * 60)

    tests = [
        test_haar_unitary_is_unitary,
        test_haar_unitary_rejects_empty_dimension,
        test_haar_column_projection_is_beta_distributed,
        test_haar_distribution_is_right_invariant,
        test_gaussian_matrix_variance,
        test_compact_svd_truncates_to_numerical_rank,
        test_compact_svd_of_unit_outer_product,
        test_compact_svd_of_zero_and_empty_matrices,
        test_hermitian_solve_matches_dense_solver,
        test_hermitian_solve_errors,
        test_principal_angles,
    ]
    for test in tests:
        test()
        print(f"{test.__name__} ✓")

    print("All linear algebra tests passed! ✓")


if __name__ == "__main__":
    run_all_tests()
