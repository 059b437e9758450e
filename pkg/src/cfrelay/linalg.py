"""
Small Hermitian matrix kernels

Conditional covariances via generalized Schur complements, simultaneous
diagonalization by congruence, numeric rank and projection onto the
trace-constrained PSD cone. Matrices are plain complex numpy arrays; the
helpers here validate and symmetrize them.

"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PreconditionError, SingularityError, NumericalError

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-9
PINV_RTOL = 1e-9
PD_RTOL = 1e-12
RANK_RTOL = 1e-9
CONGRUENCE_SLACK = 1e-9


@dataclass(frozen=True)
class GenEigSystem:
    """
    Congruence transform and generalized eigenvalues

    Attributes:
        transform (ndarray): Invertible C (r x r) with C^H A C = I and
            C^H B C = diag(eigenvalues)
        eigenvalues (ndarray): Real generalized eigenvalues, descending

    """

    transform: np.ndarray
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def inverse_transform(self) -> np.ndarray:
        """Inverse of the congruence transform"""

        return np.linalg.inv(self.transform)


def hermitian(M, name: str = 'matrix', psd: bool = False) -> np.ndarray:
    """
    Validate and symmetrize a Hermitian matrix

    Arguments:
        M (array_like): Square matrix

    Keyword arguments:
        name (str): Name used in error messages
        psd (bool): If set, also require positive semidefiniteness to
            within PSD_RTOL of the largest eigenvalue magnitude

    Returns:
        ndarray: Complex array (M + M^H) / 2

    Raises:
        PreconditionError: Not square, not Hermitian, or indefinite

    """

    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PreconditionError(f"{name} must be square, got {M.shape}")
    if M.size == 0:
        return M

    scale = np.abs(M).max()
    skew = np.abs(M - M.conj().T).max()
    if skew > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
        raise PreconditionError(
            f"{name} is not Hermitian (skew {skew:.3e}, scale {scale:.3e})"
        )

    M = 0.5 * (M + M.conj().T)
    if psd:
        w = np.linalg.eigvalsh(M)
        floor = -PSD_RTOL * np.abs(w).max()
        if w.min() < floor:
            raise PreconditionError(
                f"{name} is not PSD (min eigenvalue {w.min():.3e})"
            )
    return M


def conditional_covariance(
    joint,
    block_split: int,
    rel_tol: float = PINV_RTOL,
) -> np.ndarray:
    """
    Covariance of U given V for jointly Gaussian (U; V)

    Generalized Schur complement S_U - S_UV pinv(S_V) S_VU, with the
    pseudoinverse taken by eigenvalue thresholding.

    Arguments:
        joint (array_like): PSD covariance of the stacked vector (U; V)
        block_split (int): Number of leading coordinates belonging to U

    Keyword arguments:
        rel_tol (float): Relative eigenvalue threshold of the
            pseudoinverse

    Returns:
        ndarray: Conditional covariance of U, block_split x block_split

    """

    joint = hermitian(joint, 'joint covariance', psd=True)
    n = joint.shape[0]
    if not 0 <= block_split <= n:
        raise PreconditionError(
            f"block_split {block_split} outside [0, {n}]"
        )

    S_U = joint[:block_split, :block_split]
    if block_split == n:
        return S_U.copy()

    S_UV = joint[:block_split, block_split:]
    S_V = joint[block_split:, block_split:]
    if not np.any(S_V):
        return S_U.copy()

    S_V_pinv = scipy.linalg.pinvh(S_V, atol=0.0, rtol=rel_tol)
    cond = S_U - S_UV @ S_V_pinv @ S_UV.conj().T
    return 0.5 * (cond + cond.conj().T)


def simdiag_congruence(A, B) -> GenEigSystem:
    """
    Simultaneously diagonalize two Hermitian matrices by congruence

    Solves the pencil B v = lambda A v; eigenvectors are A-orthonormal so
    that C^H A C = I and C^H B C = diag(lambda).

    Arguments:
        A (array_like): Positive definite matrix
        B (array_like): Hermitian matrix with B - A PSD

    Returns:
        GenEigSystem: Transform and eigenvalues sorted descending,
            floored at one

    Raises:
        SingularityError: A is not positive definite
        PreconditionError: B - A is not PSD to within tolerance

    """

    A = hermitian(A, 'A')
    B = hermitian(B, 'B')
    if A.shape != B.shape:
        raise PreconditionError(f"Shape mismatch {A.shape} vs {B.shape}")

    w_A = np.linalg.eigvalsh(A)
    if w_A.size and w_A[0] <= PD_RTOL * max(w_A[-1], 0.0):
        raise SingularityError(
            f"A is not positive definite (eigenvalues {w_A[0]:.3e} .. "
            f"{w_A[-1]:.3e})"
        )

    w_diff = np.linalg.eigvalsh(B - A)
    if w_diff.size:
        scale = np.abs(np.linalg.eigvalsh(B)).max()
        if w_diff[0] < -CONGRUENCE_SLACK * scale:
            raise PreconditionError(
                f"B - A is not PSD (min eigenvalue {w_diff[0]:.3e})"
            )

    try:
        lam, C = scipy.linalg.eigh(B, A)
    except np.linalg.LinAlgError as err:
        raise SingularityError(f"Generalized eigensolver failed: {err}")

    order = np.argsort(-lam, kind='stable')
    lam = np.maximum(lam[order], 1.0)
    return GenEigSystem(transform=C[:, order], eigenvalues=lam)


def numeric_rank(M, rel_tol: float = RANK_RTOL, scale=None) -> int:
    """
    Number of eigenvalues above a relative threshold

    Arguments:
        M (array_like): Hermitian matrix

    Keyword arguments:
        rel_tol (float): Threshold relative to the reference magnitude
        scale (float): Reference magnitude; defaults to the largest
            eigenvalue magnitude of M. Pass the magnitude of the matrix
            M was computed from when M may be pure round-off.

    Returns:
        int

    """

    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0
    w = np.abs(np.linalg.eigvalsh(0.5 * (M + M.conj().T)))
    if scale is None:
        scale = w.max()
    if scale <= 0:
        return 0
    return int(np.count_nonzero(w > rel_tol * scale))


def _shrink_to_budget(w: np.ndarray, budget: float) -> np.ndarray:
    """
    max(w - theta, 0) with theta chosen so the entries sum to budget

    w is sorted descending. Levels are taken relative to w[0], where
    k = 1 always qualifies.

    """

    u = w - w[0]
    k = np.arange(1, w.size + 1)
    shift = (np.cumsum(u) - budget) / k
    # Largest k whose k-th entry stays above its level
    valid = u - shift > 0
    valid[0] = True
    idx = np.nonzero(valid)[0][-1]
    return np.clip(u - shift[idx], 0.0, None)


def project_trace_psd(M, P: float) -> np.ndarray:
    """
    Frobenius projection onto {S PSD, tr(S) <= P}

    Arguments:
        M (array_like): Hermitian matrix
        P (float): Trace budget, positive

    Returns:
        ndarray: Projected matrix sharing M's eigenvectors

    """

    if P <= 0:
        raise PreconditionError(f"Power budget must be positive, got {P}")
    M = np.asarray(M, dtype=complex)
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    if w.sum() > P:
        order = np.argsort(-w)
        shrunk = np.empty_like(w)
        shrunk[order] = _shrink_to_budget(w[order], P)
        w = shrunk
    S = (V * w) @ V.conj().T
    return 0.5 * (S + S.conj().T)


def sqrt_psd(M) -> np.ndarray:
    """Hermitian square root of a PSD matrix"""

    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return M
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def logdet2(M) -> float:
    """
    Base-2 log-determinant of a positive definite matrix via Cholesky

    Raises:
        NumericalError: M is not numerically positive definite

    """

    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(0.5 * (M + M.conj().T))
    except np.linalg.LinAlgError as err:
        logging.getLogger(__name__).debug("Cholesky failed: %s", err)
        raise NumericalError("log-determinant of a singular matrix")
    return 2.0 * float(np.sum(np.log2(np.real(np.diag(L)))))


def is_positive_definite(M) -> bool:
    """Whether M admits a Cholesky factorization"""

    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return True
    try:
        np.linalg.cholesky(0.5 * (M + M.conj().T))
    except np.linalg.LinAlgError:
        return False
    return True
