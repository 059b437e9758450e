"""
Transmit covariance design

Projected gradient ascent on weighted log-determinants under a trace
constraint, water-filling baselines and the cut-set bound.

"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .channel import ChannelRealization
from .errors import ConvergenceError, PreconditionError
from .rates import (
    QuantNoise,
    relay_view,
    as_quant_noise,
    dest_only_rate,
    full_observation_rate,
)
from . import linalg

ARMIJO = 1e-4
BACKTRACK = 0.5
EXPAND = 2.0
STEP_CAP = 1e6
LN2 = math.log(2.0)


@dataclass(frozen=True)
class InputOptConfig:
    """
    Projected gradient settings

    Attributes:
        power_P (float): Trace budget
        grad_tol (float): Stop when ||S - proj(S + grad)||_F <= grad_tol P
        max_iters (int): Iteration limit
        step_init (float): First trial step as a fraction of P / ||grad||

    """

    power_P: float
    grad_tol: float = 1e-7
    max_iters: int = 5000
    step_init: float = 1.0

    def __post_init__(self):
        for name in ('power_P', 'grad_tol', 'max_iters', 'step_init'):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class CutSetResult:
    """
    Cut-set bound and its maximizing input

    Attributes:
        value (float): Bound in bits
        S_X (ndarray): Maximizing transmit covariance
        weight (float): Weight of the broadcast arm at the maximizer
        bracketed (bool): False when an endpoint arm dominates and no
            weight bisection took place

    """

    value: float
    S_X: np.ndarray
    weight: float
    bracketed: bool


class _WeightedLogdet:
    """
    phi(S) = w log|H1 S H1^H + D1| + (1 - w) log|H2 S H2^H + D2| in bits

    """

    def __init__(self, H1, D1, H2, D2, weight):
        self.H1 = H1
        self.D1 = D1
        self.H2 = H2
        self.D2 = D2
        self.weight = weight

    def _terms(self):
        if self.weight > 0:
            yield self.weight, self.H1, self.D1
        if self.weight < 1:
            yield 1.0 - self.weight, self.H2, self.D2

    def value(self, S) -> float:
        total = 0.0
        for w, H, D in self._terms():
            total += w * linalg.logdet2(H @ S @ H.conj().T + D)
        return total

    def gradient(self, S) -> np.ndarray:
        grad = np.zeros(S.shape, dtype=complex)
        for w, H, D in self._terms():
            factor = scipy.linalg.cho_factor(
                H @ S @ H.conj().T + D, lower=True,
            )
            grad += w * H.conj().T @ scipy.linalg.cho_solve(factor, H)
        grad /= LN2
        return 0.5 * (grad + grad.conj().T)


def _lagrangian_form(ch: ChannelRealization, quant: QuantNoise, weight):
    H1, D1 = relay_view(ch, quant)
    return _WeightedLogdet(
        H1, D1, ch.H_SD, ch.destination_noise(), weight,
    )


def _stationarity(phi: _WeightedLogdet, S, P) -> float:
    step = linalg.project_trace_psd(S + phi.gradient(S), P)
    return float(np.linalg.norm(S - step))


def _flat_directions(phi: _WeightedLogdet, S, P) -> int:
    """
    Count unused input directions whose marginal gain ties the best one

    A tie means the maximizer is not unique along those directions.

    """

    grad = phi.gradient(S)
    w_S, V = np.linalg.eigh(S)
    unused = V[:, w_S <= 1e-9 * P]
    if unused.shape[1] == 0:
        return 0
    g_max = np.linalg.eigvalsh(grad).max()
    if g_max <= 0:
        return 0
    g_unused = np.linalg.eigvalsh(unused.conj().T @ grad @ unused)
    return int(np.count_nonzero(g_unused >= g_max * (1.0 - 1e-6)))


def _projected_ascent(phi: _WeightedLogdet, cfg: InputOptConfig, init):
    """
    Maximize phi over {S PSD, tr S <= P}

    Returns:
        ndarray: Stationary point

    Raises:
        ConvergenceError: Iteration limit hit; carries the last iterate

    """

    log = logging.getLogger(__name__)

    P = cfg.power_P
    S = linalg.project_trace_psd(init, P)
    val = phi.value(S)
    trace = [val]
    step = None

    for it in range(1, cfg.max_iters + 1):
        grad = phi.gradient(S)
        resid = np.linalg.norm(S - linalg.project_trace_psd(S + grad, P))
        if resid <= cfg.grad_tol * P:
            log.debug(
                'Projected ascent converged after %d iterations, '
                'value %.12g', it - 1, val,
            )
            return S

        base = cfg.step_init * P / max(np.linalg.norm(grad), 1e-300)
        if step is None:
            step = base
        step = min(step, STEP_CAP * base)

        while True:
            S_new = linalg.project_trace_psd(S + step * grad, P)
            delta = S_new - S
            if np.linalg.norm(delta) <= 1e-15 * P:
                # Step underflowed: no feasible ascent left at float
                # precision
                log.debug('Step underflow at iteration %d, resid %.3e', it, resid)
                return S
            val_new = phi.value(S_new)
            gain = np.real(np.vdot(grad, delta))
            if val_new >= val + ARMIJO * gain:
                break
            step *= BACKTRACK

        S, val = S_new, val_new
        trace.append(val)
        step *= EXPAND

    log.error(
        'Projected ascent hit %d iterations (value %.12g)',
        cfg.max_iters, val,
    )
    raise ConvergenceError(
        f"Projected ascent did not converge in {cfg.max_iters} iterations",
        iterate=S,
        trace=trace,
    )


def _check_config(cfg: InputOptConfig, P: float) -> InputOptConfig:
    if not P > 0:
        raise PreconditionError(f"Power budget must be positive, got {P}")
    if cfg is None:
        return InputOptConfig(power_P=P)
    if cfg.power_P != P:
        return replace(cfg, power_P=P)
    return cfg


def isotropic_input(ch: ChannelRealization, P: float) -> np.ndarray:
    """(P/s) I"""

    s = ch.H_SR.shape[1]
    return (P / s) * np.eye(s, dtype=complex)


def maximize_lagrangian_input(
    ch: ChannelRealization,
    S_Q_fixed,
    mu: float,
    cfg: InputOptConfig,
    init=None,
) -> np.ndarray:
    """
    Best transmit covariance for a fixed quantizer and multiplier

    Maximizes (1-mu) log|W1| + mu log|W2|, with W1 the covariance of
    (T Y_R + Q', Y_D) and W2 the covariance of Y_D, which equals the
    Lagrangian up to terms that do not depend on S_X.

    Arguments:
        ch (ChannelRealization): Channel instance
        S_Q_fixed (ndarray or QuantNoise): Relay quantization
        mu (float): Multiplier in (0, 1)
        cfg (InputOptConfig): Solver settings, including the budget

    Keyword arguments:
        init (ndarray): Starting point; isotropic full power by default

    Returns:
        ndarray: Maximizing S_X

    Raises:
        ConvergenceError: Iteration limit hit; carries the last iterate

    """

    if not 0.0 < mu < 1.0:
        raise PreconditionError(f"mu must lie in (0, 1), got {mu}")
    quant = as_quant_noise(S_Q_fixed, ch.H_SR.shape[0])
    P = cfg.power_P
    if init is None:
        init = isotropic_input(ch, P)
    else:
        init = ch.check_input(init, 'init')

    phi = _lagrangian_form(ch, quant, 1.0 - mu)
    S = _projected_ascent(phi, cfg, init)

    n_flat = _flat_directions(phi, S, P)
    if n_flat:
        logging.getLogger(__name__).warning(
            'Input maximizer not unique at mu=%.6g: %d flat direction(s)',
            mu, n_flat,
        )
    return S


def input_stationarity(
    ch: ChannelRealization,
    S_X,
    S_Q,
    mu: float,
    P: float,
) -> float:
    """
    Relative first-order residual ||S - proj(S + grad)||_F / P of the
    transmit covariance subproblem

    """

    quant = as_quant_noise(S_Q, ch.H_SR.shape[0])
    phi = _lagrangian_form(ch, quant, 1.0 - mu)
    return _stationarity(phi, ch.check_input(S_X), P) / P


def waterfilling_input(G, noise_cov, P: float) -> np.ndarray:
    """
    Capacity-achieving covariance for Y = G X + Z, Z ~ CN(0, noise_cov)

    Arguments:
        G (ndarray): Channel matrix, n x s
        noise_cov (ndarray): Positive definite noise covariance, n x n
        P (float): Trace budget

    Returns:
        ndarray: s x s covariance with trace P, or zero when G = 0

    """

    if not P > 0:
        raise PreconditionError(f"Power budget must be positive, got {P}")
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    s = G.shape[1]
    noise_cov = linalg.hermitian(noise_cov, 'noise_cov')
    try:
        L = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError:
        raise PreconditionError('noise_cov must be positive definite')

    G_w = scipy.linalg.solve_triangular(L, G, lower=True)
    _, sv, Vh = np.linalg.svd(G_w)
    gains = sv ** 2
    if gains.size == 0 or gains[0] <= 0:
        return np.zeros((s, s), dtype=complex)
    n_modes = int(np.count_nonzero(gains > 1e-12 * gains[0]))
    inv_gain = 1.0 / gains[:n_modes]

    # Largest active set whose water level clears every active floor
    levels = (P + np.cumsum(inv_gain)) / np.arange(1, n_modes + 1)
    k = int(np.nonzero(levels > inv_gain)[0][-1]) + 1
    power = np.clip(levels[k - 1] - inv_gain[:k], 0.0, None)

    V = Vh.conj().T[:, :k]
    S = (V * power) @ V.conj().T
    return 0.5 * (S + S.conj().T)


def _maximize_weighted(ch, quant, weight, cfg, init):
    """Projected ascent on the weighted form; ConvergenceError absorbed"""

    phi = _lagrangian_form(ch, quant, weight)
    try:
        return _projected_ascent(phi, cfg, init)
    except ConvergenceError as err:
        logging.getLogger(__name__).warning(
            'Using last iterate at weight %.6g: %s', weight, err,
        )
        return err.iterate


def cutset_bound(
    ch: ChannelRealization,
    P: float,
    c0: float,
    cfg: InputOptConfig = None,
) -> CutSetResult:
    """
    Cut-set bound max_S min{ I(X; Y_R, Y_D), I(X; Y_D) + c0 }

    The max-min is solved by bisecting the weight w of
    w I(X; Y_R, Y_D) + (1 - w)(I(X; Y_D) + c0) until the arms cross at
    the weighted maximizer, or an endpoint arm dominates.

    Arguments:
        ch (ChannelRealization): Channel instance
        P (float): Trace budget
        c0 (float): Relay link capacity in bits, may be inf

    Keyword arguments:
        cfg (InputOptConfig): Solver settings

    Returns:
        CutSetResult

    """

    log = logging.getLogger(__name__)

    if c0 < 0:
        raise PreconditionError(f"c0 must be non-negative, got {c0}")
    cfg = _check_config(cfg, P)
    r = ch.H_SR.shape[0]
    full = QuantNoise(np.eye(r), np.zeros((r, r)))

    def arms(S):
        return full_observation_rate(ch, S), dest_only_rate(ch, S) + c0

    S_dest = waterfilling_input(ch.H_SD, ch.destination_noise(), P)
    a1, a2 = arms(S_dest)
    if a1 >= a2:
        log.debug('Destination arm dominates at c0=%g', c0)
        return CutSetResult(a2, S_dest, 0.0, False)

    S_full = waterfilling_input(ch.H, ch.noise_covariance(), P)
    a1, a2 = arms(S_full)
    if a1 <= a2:
        log.debug('Broadcast arm dominates at c0=%g', c0)
        return CutSetResult(a1, S_full, 1.0, False)

    lo, hi = 0.0, 1.0
    S_lo, S_hi = S_dest, S_full
    h_lo, h_hi = None, None
    best = None
    S = S_full
    for it in range(100):
        mid = 0.5 * (lo + hi)
        S = _maximize_weighted(ch, full, mid, cfg, S)
        a1, a2 = arms(S)
        h = a1 - a2
        if best is None or min(a1, a2) > best[0]:
            best = (min(a1, a2), S, mid)
        if abs(h) <= 1e-9 * max(1.0, abs(a1)):
            break
        if h < 0:
            lo, S_lo, h_lo = mid, S, h
        else:
            hi, S_hi, h_hi = mid, S, h
        if hi - lo < 1e-12:
            break

    # Arms may jump across the crossing; mix the bracketing inputs
    if h_lo is not None and h_hi is not None:
        theta = h_hi / (h_hi - h_lo)
        S_mix = theta * S_lo + (1.0 - theta) * S_hi
        a1, a2 = arms(S_mix)
        if min(a1, a2) > best[0]:
            best = (min(a1, a2), S_mix, 0.5 * (lo + hi))

    value, S_best, weight = best
    log.info(
        'Cut-set bound %.9g bits at c0=%g (weight %.6g, %d bisections)',
        value, c0, weight, it + 1,
    )
    return CutSetResult(value, S_best, weight, True)
