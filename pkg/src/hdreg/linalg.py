"""Dense singular value decomposition with a deterministic sign convention.

Matrices are plain 2-D float64 numpy arrays. The factorization itself is
delegated to LAPACK through :func:`numpy.linalg.svd`; what this module adds is
input validation, the descending/sign normalization and the numerical rank.
"""

from dataclasses import dataclass

import numpy as np

from hdreg.errors import InvalidInputError, NumericalError

RANK_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class SingularSystem:
    """Orthonormal bases and singular values with ``K = U @ diag(sigmas) @ V.T``.

    Columns of ``u_basis`` are the u_j, columns of ``v_basis`` the v_j.
    """

    u_basis: np.ndarray
    v_basis: np.ndarray
    sigmas: np.ndarray
    numerical_rank: int

    @property
    def dim(self):
        return self.sigmas.shape[0]


def as_matrix(K):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise InvalidInputError("matrix has non-finite entries")
    return K


def numerical_rank(sigmas, rtol=RANK_RTOL):
    """Largest j (1-based) with ``sigmas[j] > rtol * sigmas[1]``; 0 for a zero spectrum."""
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.size == 0 or sigmas[0] <= 0:
        return 0
    above = np.nonzero(sigmas > rtol * sigmas[0])[0]
    return int(above[-1]) + 1


def svd(K):
    """Singular system of a square matrix.

    Singular values are returned in descending order and each pair
    (u_j, v_j) is flipped so that the first nonzero entry of v_j is positive.

    Raises
    ------
    InvalidInputError
        If ``K`` is not square with D >= 2, or has non-finite entries.
    NumericalError
        If LAPACK fails to converge.
    """
    K = as_matrix(K)
    D, cols = K.shape
    if D != cols:
        raise InvalidInputError(f"expected a square matrix, got {K.shape}")
    if D < 2:
        raise InvalidInputError("matrix dimension must be at least 2")
    try:
        U, s, Vt = np.linalg.svd(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    order = np.argsort(-s, kind="stable")
    U, s, V = U[:, order], s[order], Vt[order].T.copy()
    # first entry clearly above roundoff decides the sign of v_j
    tol = 1e-10 * np.max(np.abs(V), axis=0)
    lead = np.argmax(np.abs(V) > tol, axis=0)
    signs = np.where(V[lead, np.arange(D)] < 0, -1.0, 1.0)
    U = U * signs
    V = V * signs
    if not np.all(np.isfinite(U)) or not np.all(np.isfinite(V)):
        raise NumericalError("SVD produced non-finite factors")
    return SingularSystem(U, V, s, numerical_rank(s))


def reconstruction_residual(K, system):
    """Max-entry norm of ``K - U diag(sigma) V^T``."""
    approx = (system.u_basis * system.sigmas) @ system.v_basis.T
    return float(np.max(np.abs(np.asarray(K) - approx)))


def orthonormality_defect(B):
    B = np.asarray(B, dtype=float)
    return float(np.max(np.abs(B.T @ B - np.eye(B.shape[1]))))


def project_onto_columns(B, y):
    """Coefficients ``B^T y``, i.e. the inner products of ``y`` with each column of ``B``."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    if B.ndim != 2 or y.ndim != 1 or B.shape[0] != y.shape[0]:
        raise InvalidInputError(
            f"dimension mismatch: matrix {B.shape} against vector {y.shape}")
    return B.T @ y
