"""
Mutual-information functionals of compress-and-forward relaying

All rates are in bits per channel use. The relay description is
represented by a QuantNoise: the relay forwards T Y_R + Q' with
Q' ~ CN(0, N). An r x r quantization covariance S_Q is the special case
T = I; components with infinite quantization noise are absent from T.

"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import ChannelRealization, conditional_covariances
from .errors import PreconditionError
from . import linalg


@dataclass(frozen=True, eq=False)
class QuantNoise:
    """
    Relay description T Y_R + Q', Q' ~ CN(0, N)

    Attributes:
        transform (ndarray): k x r, full row rank
        noise (ndarray): k x k PSD quantization noise covariance

    """

    transform: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.transform, dtype=complex))
        N = np.asarray(self.noise, dtype=complex)
        k = T.shape[0]
        N = N.reshape(k, k)
        object.__setattr__(self, 'transform', T)
        object.__setattr__(self, 'noise', 0.5 * (N + N.conj().T))

    @property
    def k(self) -> int:
        """Number of described components"""

        return self.transform.shape[0]

    @property
    def r(self) -> int:
        return self.transform.shape[1]

    @classmethod
    def from_covariance(cls, S_Q):
        """Plain quantization covariance, T = I"""

        S_Q = linalg.hermitian(S_Q, 'S_Q', psd=True)
        return cls(np.eye(S_Q.shape[0], dtype=complex), S_Q)

    @classmethod
    def dropped(cls, r: int):
        """Nothing is described"""

        return cls(np.zeros((0, r), dtype=complex), np.zeros((0, 0)))

    @classmethod
    def from_components(cls, transform, sigma):
        """
        Quantize the transformed components C^H Y_R independently

        Arguments:
            transform (ndarray): Congruence transform C, r x r
            sigma (ndarray): Per-component noise, +inf drops a component

        """

        sigma = np.asarray(sigma, dtype=float)
        active = np.isfinite(sigma)
        T = np.asarray(transform, dtype=complex).conj().T[active]
        return cls(T, np.diag(sigma[active]).astype(complex))

    def is_singular(self) -> bool:
        return not linalg.is_positive_definite(self.noise)

    def covariance(self) -> np.ndarray:
        """
        Equivalent r x r quantization covariance T^-1 N T^-H

        Raises:
            PreconditionError: Some components are dropped, so the
                covariance is infinite along them

        """

        if self.k != self.r:
            raise PreconditionError(
                f"Only {self.k} of {self.r} components are described"
            )
        T_inv = np.linalg.inv(self.transform)
        S_Q = T_inv @ self.noise @ T_inv.conj().T
        return 0.5 * (S_Q + S_Q.conj().T)


@dataclass
class RatePoint:
    """
    Achieved rate at one relay link capacity

    Attributes:
        c0 (float): Relay link capacity in bits
        rate (float): Rate in bits
        meta (dict): Scheme name, multiplier, iteration counts

    """

    c0: float
    rate: float
    meta: dict = field(default_factory=dict)


def as_quant_noise(S_Q, r: int) -> QuantNoise:
    """Accept a QuantNoise or an r x r covariance"""

    if isinstance(S_Q, QuantNoise):
        quant = S_Q
    else:
        quant = QuantNoise.from_covariance(S_Q)
    if quant.r != r:
        raise PreconditionError(
            f"Quantizer acts on {quant.r} relay antennas, channel has {r}"
        )
    return quant


def relay_view(ch: ChannelRealization, quant: QuantNoise):
    """
    Channel and noise seen by a receiver holding (T Y_R + Q', Y_D)

    Returns:
        tuple: (effective channel (k+d) x s, noise covariance (k+d) x
            (k+d) including the quantization noise)

    """

    d = ch.H_SD.shape[0]
    G = scipy.linalg.block_diag(quant.transform, np.eye(d))
    H_eff = G @ ch.H
    noise = G @ ch.noise_covariance() @ G.conj().T
    noise[:quant.k, :quant.k] += quant.noise
    return H_eff, 0.5 * (noise + noise.conj().T)


def _mutual_information(H, S_X, noise) -> float:
    """log|H S H^H + noise| - log|noise|"""

    signal = H @ S_X @ H.conj().T
    return linalg.logdet2(signal + noise) - linalg.logdet2(noise)


def cf_objective(ch: ChannelRealization, S_X, S_Q) -> float:
    """
    Rate I(X; Yhat_R, Y_D) delivered to the destination

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance, s x s
        S_Q (ndarray or QuantNoise): Relay quantization

    Returns:
        float: Bits

    """

    S_X = ch.check_input(S_X)
    quant = as_quant_noise(S_Q, ch.H_SR.shape[0])
    H_eff, noise = relay_view(ch, quant)
    return max(_mutual_information(H_eff, S_X, noise), 0.0)


def cf_constraint(
    ch: ChannelRealization,
    S_X,
    S_Q,
    method: str = 'joint',
) -> float:
    """
    Relay link usage I(Y_R; Yhat_R | Y_D)

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance
        S_Q (ndarray or QuantNoise): Relay quantization

    Keyword arguments:
        method (str): 'joint' evaluates the determinant of the joint
            covariance of (Yhat_R, Y_D); 'conditional' evaluates
            log|T S_{Y_R|Y_D} T^H + N| - log|N|

    Returns:
        float: Bits; math.inf when the quantization noise is singular

    """

    S_X = ch.check_input(S_X)
    quant = as_quant_noise(S_Q, ch.H_SR.shape[0])
    if quant.k == 0:
        return 0.0
    if quant.is_singular():
        return math.inf

    log_noise = linalg.logdet2(quant.noise)
    if method == 'joint':
        H_eff, noise = relay_view(ch, quant)
        cov_Z = H_eff @ S_X @ H_eff.conj().T + noise
        d = ch.H_SD.shape[0]
        cov_D = cov_Z[-d:, -d:]
        val = linalg.logdet2(cov_Z) - linalg.logdet2(cov_D) - log_noise
    elif method == 'conditional':
        given_D, _ = conditional_covariances(ch, S_X)
        T = quant.transform
        val = linalg.logdet2(T @ given_D @ T.conj().T + quant.noise) - log_noise
    else:
        raise PreconditionError(f"Unknown method '{method}'")
    return max(val, 0.0)


def dest_only_rate(ch: ChannelRealization, S_X) -> float:
    """
    Rate I(X; Y_D) without the relay

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Returns:
        float: Bits

    """

    S_X = ch.check_input(S_X)
    return max(
        _mutual_information(ch.H_SD, S_X, ch.destination_noise()),
        0.0,
    )


def full_observation_rate(ch: ChannelRealization, S_X) -> float:
    """Rate I(X; Y_R, Y_D) of a receiver holding both observations"""

    S_X = ch.check_input(S_X)
    return max(
        _mutual_information(ch.H, S_X, ch.noise_covariance()),
        0.0,
    )


def relay_residual_information(ch: ChannelRealization, S_X, S_Q) -> float:
    """
    I(Y_R; Yhat_R | Y_D, X), the part of the description spent on noise

    Returns:
        float: Bits; math.inf when the quantization noise is singular

    """

    quant = as_quant_noise(S_Q, ch.H_SR.shape[0])
    if quant.k == 0:
        return 0.0
    if quant.is_singular():
        return math.inf
    _, given_DX = conditional_covariances(ch, S_X)
    T = quant.transform
    val = (
        linalg.logdet2(T @ given_DX @ T.conj().T + quant.noise)
        - linalg.logdet2(quant.noise)
    )
    return max(val, 0.0)


def cf_rate_minform(ch: ChannelRealization, S_X, S_Q, c0: float) -> float:
    """
    Compress-and-forward rate in the form resembling the cut-set bound

    min{ I(X; Yhat_R, Y_D), I(X; Y_D) + c0 - I(Y_R; Yhat_R | Y_D, X) }

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance
        S_Q (ndarray or QuantNoise): Relay quantization
        c0 (float): Relay link capacity in bits

    Returns:
        float: Bits; may be negative (or -inf) when the description
            costs more than the link carries

    """

    if c0 < 0:
        raise PreconditionError(f"c0 must be non-negative, got {c0}")
    objective = cf_objective(ch, S_X, S_Q)
    spent = relay_residual_information(ch, S_X, S_Q)
    return min(objective, dest_only_rate(ch, S_X) + c0 - spent)
