"""
Quantizer design for a fixed transmit covariance

The relay observation is transformed by the congruence that whitens
S_{Y_R|Y_D,X} and diagonalizes S_{Y_R|Y_D}; the transformed components
are conditionally independent and receive description rates by reverse
water-filling on log2(lambda_i - 1).

"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .channel import (
    ChannelRealization,
    RankProfile,
    conditional_covariances,
)
from .errors import NumericalError, PreconditionError
from .linalg import GenEigSystem, simdiag_congruence
from .rates import QuantNoise, cf_objective

DEGRADED_TOL = 1e-9
LN2 = math.log(2.0)
TINY = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class QuantAllocation:
    """
    Per-component description rates in the transformed domain

    Attributes:
        gen_eig (GenEigSystem): Congruence transform and eigenvalues
        rates_c (ndarray): Bits per component, non-increasing
        sigma_q_diag (ndarray): Quantization noise per component, +inf
            for dropped components
        mu (float): Lagrange multiplier; the slope of the fixed-input
            rate curve at the allocated budget

    """

    gen_eig: GenEigSystem
    rates_c: np.ndarray
    sigma_q_diag: np.ndarray
    mu: float

    @property
    def active(self) -> np.ndarray:
        return np.isfinite(self.sigma_q_diag)

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))

    @property
    def total_rate(self) -> float:
        return float(np.sum(self.rates_c))

    def quant_noise(self) -> QuantNoise:
        """Relay description realizing this allocation"""

        return QuantNoise.from_components(
            self.gen_eig.transform,
            self.sigma_q_diag,
        )


@dataclass(frozen=True)
class SlopeProfile:
    """
    Slope structure of the fixed-input rate curve

    Attributes:
        eigenvalues (ndarray): Generalized eigenvalues, descending
        critical_budgets (ndarray): Budget at which each component starts
            being described; +inf for reversely degraded components
        slopes_at_critical (ndarray): 1 - 1/lambda_i
        n_reversely_degraded (int): Components with lambda_i = 1
        n_asymptotically_deterministic (int): r' - r''
        degraded_bound_ok (bool): Whether n_reversely_degraded reaches
            (r - s^r)^+

    """

    eigenvalues: np.ndarray
    critical_budgets: np.ndarray
    slopes_at_critical: np.ndarray
    n_reversely_degraded: int
    n_asymptotically_deterministic: int
    degraded_bound_ok: bool = True

    def slope_at(self, c0: float) -> float:
        """Slope mu*(c0) of the fixed-input rate curve"""

        return _water_level(self.eigenvalues, c0)[1]


def gen_eig_system(ch: ChannelRealization, S_X) -> GenEigSystem:
    """
    Generalized eigen-system of the relay conditional covariances

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Returns:
        GenEigSystem: C with C^H S_{Y_R|Y_D,X} C = I and
            C^H S_{Y_R|Y_D} C = diag(lambda), lambda descending

    """

    given_D, given_DX = conditional_covariances(ch, S_X)
    return simdiag_congruence(given_DX, given_D)


def _describable(lam: np.ndarray) -> np.ndarray:
    return lam > 1.0 + DEGRADED_TOL


def _sigma_from_rates(lam: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Sigma_i = lambda_i / (2^c_i - 1), +inf where c_i = 0"""

    sigma = np.full(lam.shape, np.inf)
    pos = c > 0
    with np.errstate(over='ignore'):
        sigma[pos] = lam[pos] / np.expm1(c[pos] * LN2)
    # Budgets beyond the float range describe a component noiselessly
    sigma[pos] = np.maximum(sigma[pos], TINY)
    return sigma


def quantizer_for_mu(
    ch: ChannelRealization,
    S_X,
    mu: float,
    gen_eig: GenEigSystem = None,
):
    """
    Quantizer maximizing the Lagrangian for a fixed multiplier

    c_i = [log2(lambda_i - 1) - log2(mu/(1-mu))]^+ and
    Sigma_i = mu / (1 - 1/lambda_i - mu), +inf when mu >= 1 - 1/lambda_i.

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance
        mu (float): Multiplier in (0, 1)

    Keyword arguments:
        gen_eig (GenEigSystem): Precomputed eigen-system for (ch, S_X)

    Returns:
        tuple: (QuantNoise, QuantAllocation)

    """

    if not 0.0 < mu < 1.0:
        raise PreconditionError(f"mu must lie in (0, 1), got {mu}")
    if gen_eig is None:
        gen_eig = gen_eig_system(ch, S_X)

    lam = gen_eig.eigenvalues
    margin = 1.0 - 1.0 / lam - mu
    active = margin > 0
    sigma = np.full(lam.shape, np.inf)
    sigma[active] = mu / margin[active]

    rates_c = np.zeros(lam.shape)
    rates_c[active] = (
        np.log2(lam[active] - 1.0) - np.log2(mu / (1.0 - mu))
    )
    rates_c = np.maximum(rates_c, 0.0)

    alloc = QuantAllocation(
        gen_eig=gen_eig,
        rates_c=rates_c,
        sigma_q_diag=sigma,
        mu=mu,
    )
    return alloc.quant_noise(), alloc


def _water_level(lam: np.ndarray, c0: float):
    """
    Reverse water-filling over log2(lambda_i - 1) for a total budget

    Returns:
        tuple: (rates per component, multiplier mu)

    """

    if c0 < 0:
        raise PreconditionError(f"c0 must be non-negative, got {c0}")

    rates = np.zeros(lam.shape)
    usable = _describable(lam)
    n_use = int(np.count_nonzero(usable))
    if n_use == 0:
        return rates, 0.0
    if c0 == 0:
        return rates, float(1.0 - 1.0 / lam[0])
    if math.isinf(c0):
        rates[usable] = np.inf
        return rates, 0.0

    # lambda is sorted descending, so usable components lead
    a = np.log2(lam[:n_use] - 1.0)
    level = None
    for k in range(1, n_use + 1):
        x = (c0 - a[:k].sum()) / k
        if a[k - 1] + x <= 0:
            continue
        if k == n_use or a[k] + x <= 0:
            level = x
            break
    if level is None:
        level = (c0 - a.sum()) / n_use

    rates[:n_use] = np.maximum(a + level, 0.0)
    # 1 / (1 + 2^level) without overflow
    if level >= 0:
        tail = 2.0 ** -level
        mu = tail / (1.0 + tail)
    else:
        mu = 1.0 / (1.0 + 2.0 ** level)
    mu = float(mu)
    return rates, mu


def allocation_for_budget(gen_eig: GenEigSystem, c0: float):
    """
    Optimal allocation whose description rates sum to c0

    Arguments:
        gen_eig (GenEigSystem): Eigen-system at the transmit covariance
        c0 (float): Relay link capacity in bits

    Returns:
        tuple: (QuantAllocation, slope) where slope = mu*(c0) is the
            derivative of the fixed-input rate curve; at c0 = 0 it is
            1 - 1/lambda_1, and 0 when no component can be described

    """

    lam = gen_eig.eigenvalues
    rates, mu = _water_level(lam, c0)
    if math.isinf(c0):
        sigma = np.where(_describable(lam), TINY, np.inf)
    else:
        sigma = _sigma_from_rates(lam, rates)
    alloc = QuantAllocation(
        gen_eig=gen_eig,
        rates_c=rates,
        sigma_q_diag=sigma,
        mu=mu,
    )
    return alloc, mu


def slope_profile(
    gen_eig: GenEigSystem,
    rank_profile: RankProfile,
    strict: bool = False,
) -> SlopeProfile:
    """
    Critical budgets, slopes and component classification

    At least (r - s^r)^+ components must be reversely degraded. A
    shortfall comes from round-off in the pencil; it is logged and
    recorded in degraded_bound_ok, or raised when strict is set.

    Arguments:
        gen_eig (GenEigSystem): Eigen-system at the transmit covariance
        rank_profile (RankProfile): Noiseless ranks at the same input

    Keyword arguments:
        strict (bool): Raise instead of flagging a shortfall

    Returns:
        SlopeProfile

    Raises:
        NumericalError: strict is set and the bound does not hold

    """

    log = logging.getLogger(__name__)

    lam = gen_eig.eigenvalues
    r = lam.size
    usable = _describable(lam)

    critical = np.full(r, np.inf)
    log_csinr = np.log2(lam[usable] - 1.0)
    for i in range(log_csinr.size):
        critical[i] = float(np.sum(log_csinr[:i] - log_csinr[i]))

    n_rev = int(r - np.count_nonzero(usable))
    bound = max(r - rank_profile.s_rank, 0)
    bound_ok = n_rev >= bound
    if not bound_ok:
        log.warning(
            "Only %d reversely degraded components; at least %d expected "
            "for r=%d, s^r=%d",
            n_rev, bound, r, rank_profile.s_rank,
        )
        if strict:
            raise NumericalError(
                f"{n_rev} reversely degraded components, expected at "
                f"least {bound}"
            )

    return SlopeProfile(
        eigenvalues=lam.copy(),
        critical_budgets=critical,
        slopes_at_critical=1.0 - 1.0 / lam,
        n_reversely_degraded=n_rev,
        n_asymptotically_deterministic=rank_profile.n_deterministic,
        degraded_bound_ok=bound_ok,
    )


def constant_gap_quantizer(
    ch: ChannelRealization,
    S_X,
    gen_eig: GenEigSystem = None,
) -> QuantNoise:
    """
    Quantizer with Sigma_i = lambda_i / (lambda_i - 1)

    Each described component then costs log2(2 - 1/lambda_i) <= 1 bit of
    residual description; reversely degraded components are dropped.

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Keyword arguments:
        gen_eig (GenEigSystem): Precomputed eigen-system for (ch, S_X)

    Returns:
        QuantNoise

    """

    if gen_eig is None:
        gen_eig = gen_eig_system(ch, S_X)
    lam = gen_eig.eigenvalues
    usable = _describable(lam)
    sigma = np.full(lam.shape, np.inf)
    sigma[usable] = lam[usable] / (lam[usable] - 1.0)
    return QuantNoise.from_components(gen_eig.transform, sigma)


def fixed_input_rate(ch: ChannelRealization, S_X, c0: float):
    """
    Best compress-and-forward rate at a fixed transmit covariance

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance
        c0 (float): Relay link capacity in bits

    Returns:
        tuple: (rate in bits, QuantAllocation, slope mu*(c0))

    """

    gen_eig = gen_eig_system(ch, S_X)
    alloc, slope = allocation_for_budget(gen_eig, c0)
    rate = cf_objective(ch, S_X, alloc.quant_noise())
    return rate, alloc, slope


def iid_quantizer_for_budget(
    ch: ChannelRealization,
    S_X,
    c0: float,
    transform=None,
) -> QuantNoise:
    """
    Quantizer q I whose description uses exactly c0 bits

    The level q solves sum_i log2(1 + nu_i / q) = c0, where nu_i are the
    eigenvalues of T S_{Y_R|Y_D} T^H; the root is found in log2(q).

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance
        c0 (float): Relay link capacity in bits

    Keyword arguments:
        transform (ndarray): Relay combiner applied before quantization,
            k x r; identity when omitted

    Returns:
        QuantNoise

    """

    if c0 < 0:
        raise PreconditionError(f"c0 must be non-negative, got {c0}")
    r = ch.H_SR.shape[0]
    T = np.eye(r, dtype=complex) if transform is None else np.asarray(
        transform, dtype=complex,
    )
    if T.ndim != 2 or T.shape[1] != r:
        raise PreconditionError(f"Relay combiner must have {r} columns")
    k = T.shape[0]
    if k == 0 or c0 == 0:
        return QuantNoise.dropped(r)

    given_D, _ = conditional_covariances(ch, S_X)
    nu = np.linalg.eigvalsh(T @ given_D @ T.conj().T)
    nu = np.clip(nu, TINY, None)
    log_nu = np.log2(nu)

    def excess(x):
        return float(np.sum(np.logaddexp2(0.0, log_nu - x))) - c0

    x_lo = log_nu.min() - c0 - 1.0
    x_hi = log_nu.max()
    while excess(x_hi) >= 0:
        x_hi += 8.0
    x = scipy.optimize.brentq(excess, x_lo, x_hi, xtol=1e-12, rtol=1e-14)

    q = max(float(np.exp2(x)), TINY)
    return QuantNoise(T, q * np.eye(k))


def iid_rate(ch: ChannelRealization, S_X, c0: float, transform=None):
    """
    Rate of the q I quantizer matched to the budget

    Returns:
        tuple: (rate in bits, QuantNoise)

    """

    quant = iid_quantizer_for_budget(ch, S_X, c0, transform=transform)
    return cf_objective(ch, S_X, quant), quant
