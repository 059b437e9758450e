import pytest

import numpy as np
from hypothesis import given, settings, strategies as st

from cfrelay import linalg
from cfrelay.errors import NumericalError, PreconditionError, SingularityError

from conftest import random_psd


def test_hermitian_rejects():
    with pytest.raises(PreconditionError):
        linalg.hermitian(np.ones((2, 3)))
    with pytest.raises(PreconditionError):
        linalg.hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(PreconditionError):
        linalg.hermitian(np.diag([1.0, -1.0]), psd=True)


def test_hermitian_symmetrizes():
    M = np.array([[1.0, 1j], [-1j, 2.0]])
    out = linalg.hermitian(M, psd=True)
    assert np.allclose(out, M)
    assert out.dtype == complex


def test_conditional_covariance_scalar():
    joint = np.array([[2.0, 1.0], [1.0, 1.0]])
    assert linalg.conditional_covariance(joint, 1)[0, 0].real == pytest.approx(1.0)


def test_conditional_covariance_singular_condition():
    # U equals V, observed twice
    joint = np.ones((3, 3))
    cond = linalg.conditional_covariance(joint, 1)
    assert abs(cond[0, 0]) == pytest.approx(0.0, abs=1e-12)


def test_conditional_covariance_zero_condition():
    joint = np.diag([3.0, 0.0])
    assert linalg.conditional_covariance(joint, 1)[0, 0].real == pytest.approx(3.0)


def test_conditional_covariance_bad_split():
    with pytest.raises(PreconditionError):
        linalg.conditional_covariance(np.eye(2), 3)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.integers(1, 6))
def test_simdiag_congruence(seed, r):
    rng = np.random.default_rng(seed)
    A = np.eye(r) + random_psd(rng, r, scale=r)
    B = A + random_psd(rng, r, scale=5.0 * r)

    ge = linalg.simdiag_congruence(A, B)
    C = ge.transform
    lam = ge.eigenvalues

    assert np.linalg.norm(C.conj().T @ A @ C - np.eye(r)) <= 1e-8 * r
    D = C.conj().T @ B @ C
    off = D - np.diag(np.diag(D))
    assert np.abs(off).max() <= 1e-8 * max(1.0, lam.max())
    assert np.allclose(np.diag(D).real, lam, rtol=1e-8, atol=1e-8)
    assert np.all(lam >= 1.0 - 1e-9)
    assert np.all(np.diff(lam) <= 0)


def test_simdiag_congruence_equal_pencil():
    ge = linalg.simdiag_congruence(np.eye(3), np.eye(3))
    assert np.allclose(ge.eigenvalues, 1.0)
    assert ge.dim == 3
    assert np.allclose(ge.inverse_transform() @ ge.transform, np.eye(3))


def test_simdiag_congruence_errors():
    with pytest.raises(SingularityError):
        linalg.simdiag_congruence(np.diag([1.0, 0.0]), np.eye(2))
    with pytest.raises(PreconditionError):
        linalg.simdiag_congruence(np.eye(2), 0.5 * np.eye(2))
    with pytest.raises(PreconditionError):
        linalg.simdiag_congruence(np.eye(2), np.eye(3))


def test_numeric_rank():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4, 2))
    assert linalg.numeric_rank(X @ X.T) == 2
    assert linalg.numeric_rank(np.zeros((3, 3))) == 0
    assert linalg.numeric_rank(1e-14 * np.eye(2), scale=1.0) == 0


def test_project_trace_psd():
    out = linalg.project_trace_psd(np.diag([3.0, 1.0]), 2.0)
    assert np.allclose(out, np.diag([2.0, 0.0]))

    out = linalg.project_trace_psd(np.diag([3.0, 2.0]), 3.0)
    assert np.allclose(out, np.diag([2.0, 1.0]))

    inside = np.diag([0.5, 0.25])
    assert np.allclose(linalg.project_trace_psd(inside, 1.0), inside)

    out = linalg.project_trace_psd(np.diag([0.5, -1.0]), 1.0)
    assert np.allclose(out, np.diag([0.5, 0.0]))

    with pytest.raises(PreconditionError):
        linalg.project_trace_psd(np.eye(2), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5))
def test_project_trace_psd_feasible(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    out = linalg.project_trace_psd(3.0 * (X + X.conj().T), 1.0)
    assert np.real(np.trace(out)) <= 1.0 + 1e-9
    assert np.linalg.eigvalsh(out).min() >= -1e-12


def test_sqrt_psd():
    rng = np.random.default_rng(2)
    S = random_psd(rng, 3)
    root = linalg.sqrt_psd(S)
    assert np.allclose(root @ root, S)


def test_logdet2():
    assert linalg.logdet2(np.diag([2.0, 4.0])) == pytest.approx(3.0)
    assert linalg.logdet2(np.zeros((0, 0))) == 0.0
    with pytest.raises(NumericalError):
        linalg.logdet2(np.diag([1.0, 0.0]))


def test_is_positive_definite():
    assert linalg.is_positive_definite(np.eye(2))
    assert not linalg.is_positive_definite(np.diag([1.0, 0.0]))


def test_project_trace_psd_huge_entries():
    out = linalg.project_trace_psd(np.diag([9.2e15, 4.6e15]), 1.0)
    assert np.allclose(out, np.diag([1.0, 0.0]))

    out = linalg.project_trace_psd(np.diag([1e17, 1e17]), 1.0)
    assert np.allclose(out, 0.5 * np.eye(2))

    rng = np.random.default_rng(4)
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    M = (U * np.array([3e16, 1e16, -2e16])) @ U.conj().T
    out = linalg.project_trace_psd(M, 2.0)
    assert np.real(np.trace(out)) == pytest.approx(2.0)
    assert np.linalg.eigvalsh(out).min() >= -1e-12
    assert np.allclose(out, 2.0 * np.outer(U[:, 0], U[:, 0].conj()), atol=1e-9)
