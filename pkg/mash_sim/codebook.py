"""
Secret temporal subspace codebook.

Both ends derive the same Haar unitary ``C`` (L x L) from a shared secret.
The UEs embed a length-K signal into the row space of ``C_par`` and the
base station raises the received frame with ``C^H``: the first R columns
of the raised frame then carry only interference and noise, and any jammer
looks like a barrage jammer with unchanged spatial scope and energy profile.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import compact_svd, haar_unitary, principal_angles
from .utils import (
    DegenerateInputError,
    InvalidParameterError,
    InvalidPartitionError,
    InvalidShapeError,
    secret_stream,
)

_BLOB_HEADER = np.dtype('<u8')
_BLOB_ENTRY = np.dtype('<c16')


@dataclass(frozen=True)
class SecretCodebook:
    """
    Unitary codebook ``C = [C_orth; C_par]``.

    C_orth holds the first R rows (jammer training), C_par the last
    K = L - R rows (payload).
    """
    secret: bytes
    frame_len: int
    redundancy: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'matrix', np.array(self.matrix, dtype=complex))
        if self.matrix.shape != (self.frame_len, self.frame_len):
            raise InvalidShapeError(
                f"codebook matrix must be {self.frame_len}x{self.frame_len}, got {self.matrix.shape}")
        if not 0 <= self.redundancy < self.frame_len:
            raise InvalidPartitionError(
                f"redundancy must satisfy 0 <= R < L, got R={self.redundancy}, L={self.frame_len}")
        self.matrix.setflags(write=False)

    @property
    def payload_len(self) -> int:
        return self.frame_len - self.redundancy

    @property
    def c_orth(self) -> np.ndarray:
        return self.matrix[:self.redundancy]

    @property
    def c_par(self) -> np.ndarray:
        return self.matrix[self.redundancy:]

    def to_bytes(self) -> bytes:
        """Serialize as three little-endian uint64 (L, L, R) plus row-major complex128 entries."""
        header = np.array([self.frame_len, self.frame_len, self.redundancy], dtype=_BLOB_HEADER)
        body = np.ascontiguousarray(self.matrix, dtype=_BLOB_ENTRY)
        return header.tobytes() + body.tobytes(order='C')

    @classmethod
    def from_bytes(cls, blob: bytes, secret: bytes = b"") -> "SecretCodebook":
        """Inverse of ``to_bytes``."""
        header_size = 3 * _BLOB_HEADER.itemsize
        if len(blob) < header_size:
            raise InvalidShapeError("codebook blob is truncated")
        rows, cols, redundancy = (int(v) for v in np.frombuffer(blob[:header_size], dtype=_BLOB_HEADER))
        expected = header_size + rows * cols * _BLOB_ENTRY.itemsize
        if rows != cols or len(blob) != expected:
            raise InvalidShapeError(f"codebook blob does not describe a square {rows}x{cols} matrix")
        matrix = np.frombuffer(blob[header_size:], dtype=_BLOB_ENTRY).reshape(rows, cols)
        return cls(secret=secret, frame_len=rows, redundancy=redundancy, matrix=matrix)


def derive_codebook(secret: bytes, frame_len: int, redundancy: int,
                    frame_index: int = 0, allow_no_training: bool = False) -> SecretCodebook:
    """
    Derive the codebook both link ends agree on.

    Args:
        secret: Pre-shared secret
        frame_len: Frame length L
        redundancy: Redundancy R (number of training dimensions)
        frame_index: Selects the per-frame refresh of C
        allow_no_training: Permit R = 0 (no raising-based training)

    Returns:
        SecretCodebook whose matrix is Haar given a uniformly random secret
    """
    if redundancy >= frame_len or redundancy < 0 or (redundancy == 0 and not allow_no_training):
        raise InvalidPartitionError(
            f"redundancy must satisfy 1 <= R < L, got R={redundancy}, L={frame_len}")

    rng = secret_stream(secret, frame_index)
    return SecretCodebook(
        secret=bytes(secret),
        frame_len=frame_len,
        redundancy=redundancy,
        matrix=haar_unitary(frame_len, rng),
    )


def identity_codebook(frame_len: int, redundancy: int) -> SecretCodebook:
    """Codebook with ``C = I`` (no secrecy); embedding just prepends R zero columns."""
    return SecretCodebook(secret=b"", frame_len=frame_len, redundancy=redundancy,
                          matrix=np.eye(frame_len, dtype=complex))


def permutation_codebook(frame_len: int, redundancy: int, rng: np.random.Generator) -> SecretCodebook:
    """Random permutation codebook; unitary but not Haar (negative control)."""
    matrix = np.eye(frame_len, dtype=complex)[rng.permutation(frame_len)]
    return SecretCodebook(secret=b"", frame_len=frame_len, redundancy=redundancy, matrix=matrix)


def embed(signal: np.ndarray, codebook: SecretCodebook) -> np.ndarray:
    """
    Embed a U x K signal into the secret subspace: ``X = S @ C_par``.

    Row u of X depends only on row u of S, so each UE embeds on its own.
    """
    signal = np.asarray(signal)
    if signal.ndim != 2 or signal.shape[1] != codebook.payload_len:
        raise InvalidShapeError(
            f"signal must have K={codebook.payload_len} columns, got shape {signal.shape}")
    return signal @ codebook.c_par


def raise_frame(received: np.ndarray, codebook: SecretCodebook) -> np.ndarray:
    """Raise a B x L received frame: ``Y_bar = Y @ C^H``."""
    received = np.asarray(received)
    if received.ndim != 2 or received.shape[1] != codebook.frame_len:
        raise InvalidShapeError(
            f"frame must have L={codebook.frame_len} columns, got shape {received.shape}")
    return received @ codebook.matrix.conj().T


@dataclass
class TransformReport:
    """Comparison of the interference before and after raising."""
    sigma_original: np.ndarray
    sigma_transformed: np.ndarray
    angles: np.ndarray
    min_column_norm: float
    sigma_tolerance: float = 1e-10
    angle_tolerance: float = 1e-8

    @property
    def rank_original(self) -> int:
        return int(self.sigma_original.size)

    @property
    def rank_transformed(self) -> int:
        return int(self.sigma_transformed.size)

    @property
    def max_sigma_deviation(self) -> float:
        """Largest elementwise relative deviation of the singular values."""
        if self.rank_original != self.rank_transformed:
            return float('inf')
        deviation = np.abs(self.sigma_original - self.sigma_transformed) / self.sigma_original
        return float(np.max(deviation))

    @property
    def max_angle(self) -> float:
        return float(np.max(self.angles)) if self.angles.size else 0.0

    @property
    def passed(self) -> bool:
        return (self.max_sigma_deviation <= self.sigma_tolerance
                and self.max_angle <= self.angle_tolerance)


def verify_barrage_transform(jammer_channel: np.ndarray, waveform: np.ndarray,
                             codebook: SecretCodebook,
                             rank_tol: Optional[float] = None) -> TransformReport:
    """
    Check that raising keeps the spatial scope and energy profile of ``J @ W``.

    Args:
        jammer_channel: B x I jammer channel J
        waveform: I x L jammer waveform W
        codebook: Codebook used for raising
        rank_tol: Relative truncation for the two compact SVDs

    Returns:
        TransformReport with both singular value profiles and the principal
        angles between the two spatial scopes
    """
    if waveform.shape[1] != codebook.frame_len or jammer_channel.shape[1] != waveform.shape[0]:
        raise InvalidShapeError(
            f"J {jammer_channel.shape} and W {waveform.shape} do not match L={codebook.frame_len}")

    interference = jammer_channel @ waveform
    if not np.any(interference):
        raise DegenerateInputError("interference J @ W is zero; spatial scope is undefined")

    raised_waveform = waveform @ codebook.matrix.conj().T
    raised = jammer_channel @ raised_waveform

    tol = 1e-10 if rank_tol is None else rank_tol
    if tol < 0:
        raise InvalidParameterError(f"rank_tol must be non-negative, got {tol}")
    before = compact_svd(interference, tol)
    after = compact_svd(raised, tol)

    column_norms = np.linalg.norm(raised_waveform, axis=0)
    min_column_norm = float(np.min(column_norms) / np.linalg.norm(waveform))

    return TransformReport(
        sigma_original=before.singular_values,
        sigma_transformed=after.singular_values,
        angles=principal_angles(before.left, after.left),
        min_column_norm=min_column_norm,
    )
