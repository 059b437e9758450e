"""
Degrees-of-freedom analysis

Closed-form DoF counts for generic channels, the distributed
zero-forcing relay combiner, and finite-SNR secant estimates of the
pre-log factor.

"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import AntennaProfile, ChannelRealization
from .errors import NumericalError, PreconditionError
from .inputs import isotropic_input
from .linalg import numeric_rank, sqrt_psd
from .optimizer import OptimizerOptions, optimize_cf
from .quantizer import fixed_input_rate, iid_quantizer_for_budget
from .rates import cf_objective, dest_only_rate

NULL_RTOL = 1e-10
INFINITE_ALPHA = 50.0
SCHEMES = ('joint', 'fixed', 'iid', 'combiner')


def _pos(x: int) -> int:
    return max(x, 0)


def dof_dest(s: int, d: int, t: int) -> int:
    """DoF without the relay: min(s, (d - t)^+)"""

    return min(s, _pos(d - t))


def dof_relay(s: int, d: int, r: int, t: int) -> int:
    """DoF with an unlimited relay link: min(s, (r + d - t)^+)"""

    return min(s, _pos(r + d - t))


def n_deterministic(s: int, d: int, r: int, t: int) -> int:
    """Asymptotically deterministic components for full-rank input"""

    return min(r, s, _pos(r + d - t), _pos(s + t - d))


def combiner_rows(s: int, d: int, r: int, t: int) -> int:
    """Rows of the zero-forcing relay combiner: min(r, s, (r + d - t)^+)"""

    return min(r, s, _pos(r + d - t))


def relay_dof_gain(s: int, d: int, r: int, t: int, alpha: float) -> float:
    """Optimal DoF gain min(DoF_R - DoF_D, alpha)"""

    return min(dof_relay(s, d, r, t) - dof_dest(s, d, t), alpha)


def iid_dof_gain(s: int, d: int, r: int, t: int, alpha: float) -> float:
    """
    DoF gain of q I quantization: (DoF_R - DoF_D) min(1, alpha / r')

    with r' = min(r, (s + t - d)^+).

    """

    gap = dof_relay(s, d, r, t) - dof_dest(s, d, t)
    r_prime = min(r, _pos(s + t - d))
    if gap == 0 or r_prime == 0:
        return 0.0
    return gap * min(1.0, alpha / r_prime)


@dataclass(frozen=True)
class DofReport:
    """
    DoF figures of an antenna profile

    Attributes:
        dof_dest (int): DoF without the relay
        dof_relay_inf (int): DoF with an unlimited relay link
        dof_gain_opt (float): Optimal gain at alpha
        dof_gain_iid (float): Gain of q I quantization at alpha
        n_det_components (int): Asymptotically deterministic components
        combiner_rows (int): Rows of the zero-forcing combiner
        alpha (float): Link capacity pre-log, c0 = alpha log2(rho)

    """

    dof_dest: int
    dof_relay_inf: int
    dof_gain_opt: float
    dof_gain_iid: float
    n_det_components: int
    combiner_rows: int
    alpha: float


def dof_report(profile: AntennaProfile, alpha: float) -> DofReport:
    """
    Closed-form DoF figures assuming a full-rank transmit covariance

    Arguments:
        profile (AntennaProfile): Antenna counts
        alpha (float): Link capacity pre-log, may be inf

    Returns:
        DofReport

    """

    if not alpha >= 0:
        raise PreconditionError(f"alpha must be non-negative, got {alpha}")
    s, d, r, t = profile.as_tuple()
    return DofReport(
        dof_dest=dof_dest(s, d, t),
        dof_relay_inf=dof_relay(s, d, r, t),
        dof_gain_opt=relay_dof_gain(s, d, r, t, alpha),
        dof_gain_iid=iid_dof_gain(s, d, r, t, alpha),
        n_det_components=n_deterministic(s, d, r, t),
        combiner_rows=combiner_rows(s, d, r, t),
        alpha=alpha,
    )


def zero_forcing_combiner(ch: ChannelRealization, S_X):
    """
    Distributed zero-forcing combiner

    Rows [C A] of the left null space of [H_TR; H_TD] S_XT^(1/2) null the
    interference jointly across relay and destination. The relay parts C
    are kept linearly independent and the rows are chosen along the
    strongest signal directions of [C A][H_SR; H_SD] S_X^(1/2).

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Returns:
        tuple: (C_tilde, r~ x r with orthonormal rows; A, r~ x d), empty
            when r~ = 0

    Raises:
        NumericalError: The relay parts of the rows lost rank

    """

    log = logging.getLogger(__name__)

    S_X = ch.check_input(S_X)
    s, d, r, t = ch.profile.as_tuple()
    n_rows = combiner_rows(s, d, r, t)
    if n_rows == 0:
        log.info('No zero-forcing combiner for profile %s', (s, d, r, t))
        return np.zeros((0, r), complex), np.zeros((0, d), complex)

    if t == 0:
        null_rows = np.eye(r + d, dtype=complex)
    else:
        interference = ch.H_T @ sqrt_psd(ch.S_XT)
        U, sv, _ = np.linalg.svd(interference, full_matrices=True)
        rank = 0
        if sv[0] > 0:
            rank = int(np.count_nonzero(sv > NULL_RTOL * sv[0]))
        null_rows = U[:, rank:].conj().T

    # Independent relay parts within the null space
    U_R, sv_R, _ = np.linalg.svd(null_rows[:, :r], full_matrices=False)
    n_relay = int(np.count_nonzero(sv_R > NULL_RTOL * max(sv_R.max(), 1e-300)))
    basis = U_R[:, :n_relay].conj().T @ null_rows

    # Strongest signal directions within that span
    signal = basis @ ch.H @ sqrt_psd(S_X)
    U_K, _, _ = np.linalg.svd(signal, full_matrices=True)
    rows = U_K[:, :n_rows].conj().T @ basis
    if rows.shape[0] < n_rows:
        log.warning(
            'Null space supports only %d of %d combiner rows',
            rows.shape[0], n_rows,
        )

    C_tilde = rows[:, :r]
    A = rows[:, r:]
    _, R = np.linalg.qr(C_tilde.conj().T)
    diag = np.abs(np.diag(R))
    if diag.size and diag.min() <= NULL_RTOL * diag.max():
        raise NumericalError(
            f"Relay combiner rows are rank deficient (pivots {diag})"
        )
    R_inv_H = np.linalg.inv(R).conj().T
    C_tilde = R_inv_H @ C_tilde
    A = R_inv_H @ A

    combined = np.hstack([C_tilde, A]) @ ch.H @ sqrt_psd(S_X)
    got = numeric_rank(combined @ combined.conj().T)
    if got < rows.shape[0]:
        log.warning(
            'Combiner signal rank %d below %d rows', got, rows.shape[0],
        )
    return C_tilde, A


def empirical_dof(rate_evaluator, rho_lo: float, rho_hi: float) -> float:
    """
    Secant estimate of the pre-log factor

    Arguments:
        rate_evaluator (callable): rho -> rate in bits
        rho_lo (float): Lower SNR, at least 1e3
        rho_hi (float): Higher SNR

    Returns:
        float: (rate(rho_hi) - rate(rho_lo)) / log2(rho_hi / rho_lo)

    """

    if not (rho_hi > rho_lo >= 1e3):
        raise PreconditionError(
            f"Need rho_hi > rho_lo >= 1e3, got {rho_lo}, {rho_hi}"
        )
    return (
        (rate_evaluator(rho_hi) - rate_evaluator(rho_lo))
        / math.log2(rho_hi / rho_lo)
    )


def relay_gain_evaluator(
    ch: ChannelRealization,
    P: float,
    alpha: float,
    scheme: str = 'joint',
    baseline: bool = True,
    opts: OptimizerOptions = None,
):
    """
    Rate of a relaying scheme as a function of the SNR rho = 1 / sigma2

    Arguments:
        ch (ChannelRealization): Channel instance; its sigma2 is replaced
        P (float): Trace budget
        alpha (float): Link capacity pre-log; inf stands for
            c0 = 50 log2(rho)

    Keyword arguments:
        scheme (str): 'joint' (optimized S_X and S_Q), 'fixed' (isotropic
            S_X, optimal S_Q), 'iid' (isotropic S_X, q I) or 'combiner'
            (isotropic S_X, zero-forcing combiner then q I)
        baseline (bool): Subtract the scheme's own rate at c0 = 0, giving
            the relaying gain
        opts (OptimizerOptions): Settings for the 'joint' scheme

    Returns:
        callable: rho -> bits

    """

    if scheme not in SCHEMES:
        raise PreconditionError(f"Unknown scheme '{scheme}'")
    if not alpha >= 0:
        raise PreconditionError(f"alpha must be non-negative, got {alpha}")
    S_iso = isotropic_input(ch, P)

    def budget(rho):
        scale = INFINITE_ALPHA if math.isinf(alpha) else alpha
        return scale * math.log2(rho)

    def relay_rate(ch_rho, c0):
        if scheme == 'joint':
            return optimize_cf(ch_rho, P, c0, opts).rate
        if c0 == 0:
            return dest_only_rate(ch_rho, S_iso)
        if scheme == 'fixed':
            return fixed_input_rate(ch_rho, S_iso, c0)[0]
        transform = None
        if scheme == 'combiner':
            transform, _ = zero_forcing_combiner(ch_rho, S_iso)
        quant = iid_quantizer_for_budget(
            ch_rho, S_iso, c0, transform=transform,
        )
        return cf_objective(ch_rho, S_iso, quant)

    def evaluate(rho):
        ch_rho = ch.with_sigma2(1.0 / rho)
        rate = relay_rate(ch_rho, budget(rho))
        if baseline:
            rate -= relay_rate(ch_rho, 0.0)
        logging.getLogger(__name__).debug(
            '%s scheme at rho=%g: %.9g bits', scheme, rho, rate,
        )
        return rate

    return evaluate
