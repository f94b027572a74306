"""
Dense complex linear algebra primitives shared by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128; the
factorizations come from ``scipy.linalg``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .utils import (
    ComputationError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidShapeError,
    SingularSystemError,
)

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class CompactSvd:
    """
    Compact SVD ``A = left @ diag(singular_values) @ right^H``.

    For an interference matrix ``JW`` the left factor is its spatial scope,
    the right factor its temporal extension and the singular values its
    energy profile.
    """
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    def reconstruct(self) -> np.ndarray:
        """Multiply the factors back together."""
        return (self.left * self.singular_values) @ self.right.conj().T


def gaussian_matrix(rows: int, cols: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """
    Draw i.i.d. circularly-symmetric complex Gaussian entries.

    Args:
        rows: Number of rows
        cols: Number of columns
        variance: Variance of each entry (real and imaginary parts get half)
        rng: Random stream

    Returns:
        rows x cols complex matrix
    """
    if variance < 0:
        raise InvalidParameterError(f"variance must be non-negative, got {variance}")

    scale = np.sqrt(variance / 2.0)
    real = rng.standard_normal((rows, cols))
    imag = rng.standard_normal((rows, cols))
    return scale * (real + 1j * imag)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Sample an n x n unitary matrix from the Haar measure.

    QR of a complex Ginibre matrix, with the phases of R's diagonal moved
    into Q; without that correction the QR output is not Haar distributed.
    """
    if n < 1:
        raise InvalidDimensionError(f"unitary dimension must be at least 1, got {n}")

    z = gaussian_matrix(n, n, 1.0, rng)
    q, r = scipy.linalg.qr(z)

    d = np.diag(r)
    magnitude = np.abs(d)
    phases = np.where(magnitude > 0, d / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    return q * phases


def compact_svd(a: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> CompactSvd:
    """
    Compact SVD truncated at a relative tolerance.

    Args:
        a: Finite M x N matrix
        rank_tol: Singular values at or below ``rank_tol * sigma_max`` are dropped

    Returns:
        CompactSvd with ``r`` = numerical rank of ``a``
    """
    if rank_tol < 0:
        raise InvalidParameterError(f"rank_tol must be non-negative, got {rank_tol}")

    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise InvalidShapeError(f"expected a matrix, got shape {a.shape}")

    m, n = a.shape
    if a.size == 0:
        return _empty_svd(m, n)

    try:
        u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver='gesdd')
    except (np.linalg.LinAlgError, ValueError):
        try:
            u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver='gesvd')
        except (np.linalg.LinAlgError, ValueError) as e:
            raise ComputationError(f"SVD did not converge: {e}") from e

    if s.size == 0 or s[0] <= 0:
        return _empty_svd(m, n)

    keep = s > rank_tol * s[0]
    return CompactSvd(left=u[:, keep], singular_values=s[keep], right=vh[keep].conj().T)


def _empty_svd(m: int, n: int) -> CompactSvd:
    return CompactSvd(
        left=np.zeros((m, 0), dtype=complex),
        singular_values=np.zeros(0),
        right=np.zeros((n, 0), dtype=complex),
    )


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Solve ``a @ x = b`` for Hermitian positive definite ``a`` (Cholesky).

    Raises:
        InvalidShapeError: shapes are not conformable
        SingularSystemError: ``a`` is not Hermitian or not positive definite
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise InvalidShapeError(f"cannot solve {a.shape} system with right-hand side {b.shape}")

    scale = max(1.0, np.linalg.norm(a))
    if np.linalg.norm(a - a.conj().T) > 1e-10 * scale:
        raise SingularSystemError("system matrix is not Hermitian")

    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"system matrix is not positive definite: {e}") from e

    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Symmetrize round-off out of a matrix that is Hermitian in exact arithmetic."""
    return 0.5 * (a + a.conj().T)


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians) between the column spaces of ``a`` and ``b``."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(a, b)
