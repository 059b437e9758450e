"""
Joint transmit and quantization covariance optimization

For a fixed multiplier mu the Lagrangian f_o - mu (f_c - c0) is raised by
alternating the closed-form quantizer and projected gradient ascent on
the transmit covariance. An outer bisection on mu meets the relay link
budget f_c = c0, falling back to time-sharing when the constraint jumps
across the budget.

"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ConvergenceError, MonotonicityError, PreconditionError
from .inputs import (
    InputOptConfig,
    cutset_bound,
    input_stationarity,
    isotropic_input,
    maximize_lagrangian_input,
    waterfilling_input,
)
from .quantizer import (
    QuantAllocation,
    allocation_for_budget,
    constant_gap_quantizer,
    fixed_input_rate,
    gen_eig_system,
    quantizer_for_mu,
)
from .rates import (
    QuantNoise,
    RatePoint,
    cf_constraint,
    cf_objective,
    cf_rate_minform,
    dest_only_rate,
)

MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class OptimizerOptions:
    """
    Settings for the joint optimization

    Attributes:
        inner_tol (float): Relative Lagrangian improvement that ends an
            inner coordinate ascent
        max_inner (int): Alternation limit of the inner loop
        mu_lo (float): Lower end of the multiplier bracket
        mu_hi (float): Upper end of the multiplier bracket
        budget_rtol (float): Stop when |f_c - c0| <= budget_rtol max(1, c0)
        mu_width (float): Stop when the bracket is narrower than this
        timeshare_rtol (float): Time-share when |f_c - c0| exceeds
            timeshare_rtol c0 on both sides of a collapsed bracket
        max_outer (int): Bisection step limit
        restarts (int): Random PSD starting points added to the isotropic
            one; 3 gives the usual multi-start hedge
        seed (int): Seed of the restart generator
        grad_tol (float): Projected gradient tolerance
        max_iters (int): Projected gradient iteration limit
        step_init (float): Projected gradient first step

    """

    inner_tol: float = 1e-8
    max_inner: int = 200
    mu_lo: float = 1e-4
    mu_hi: float = 1.0 - 1e-4
    budget_rtol: float = 1e-6
    mu_width: float = 1e-10
    timeshare_rtol: float = 1e-3
    max_outer: int = 200
    restarts: int = 0
    seed: int = 0
    grad_tol: float = 1e-7
    max_iters: int = 5000
    step_init: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu_lo < self.mu_hi < 1.0:
            raise PreconditionError('Need 0 < mu_lo < mu_hi < 1')
        if self.restarts < 0:
            raise PreconditionError('restarts must be non-negative')

    def input_config(self, P: float) -> InputOptConfig:
        return InputOptConfig(
            power_P=P,
            grad_tol=self.grad_tol,
            max_iters=self.max_iters,
            step_init=self.step_init,
        )


@dataclass(frozen=True, eq=False)
class InnerResult:
    """
    Fixed point of the inner coordinate ascent

    Attributes:
        S_X (ndarray): Transmit covariance
        S_Q (QuantNoise): Quantizer
        value (float): Lagrangian value in bits (without the mu c0 term)
        iters (int): Alternations performed
        trace (tuple): Lagrangian after every half-step

    """

    S_X: np.ndarray
    S_Q: QuantNoise
    value: float
    iters: int
    trace: tuple


@dataclass(frozen=True, eq=False)
class OperatingPoint:
    S_X: np.ndarray
    S_Q: QuantNoise
    rate: float
    constraint: float
    mu: float


@dataclass(frozen=True, eq=False)
class TimeShare:
    """
    Time-sharing between two operating points

    Attributes:
        point_a (OperatingPoint): Point using more than the budget
        point_b (OperatingPoint): Point using less than the budget
        weight (float): Fraction of time spent at point_a

    """

    point_a: OperatingPoint
    point_b: OperatingPoint
    weight: float


@dataclass(frozen=True)
class KKTResiduals:
    """
    Attributes:
        stationarity (float): Relative projected gradient residual of the
            transmit covariance subproblem
        quantizer (float): Largest violation of the per-component
            optimality conditions of the quantizer subproblem
        slackness (float): |mu (f_c - c0)|

    """

    stationarity: float
    quantizer: float
    slackness: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.quantizer, self.slackness)


@dataclass(frozen=True, eq=False)
class JointOptResult:
    """
    Result of the joint optimization at one relay link capacity

    Attributes:
        rate (float): Achieved rate in bits
        S_X (ndarray): Transmit covariance
        S_Q (QuantNoise): Quantizer
        mu (float): Multiplier; the slope of the fixed-input rate curve
            at S_X
        inner_iters (int): Total inner alternations
        outer_iters (int): Multiplier bisection steps
        timeshare (TimeShare): Set when the budget is met by
            time-sharing, else None
        trace (tuple): Lagrangian values of the last inner run
        constraint (float): Relay link usage at the returned point
        kkt (KKTResiduals): Optimality residuals
        start (str): Label of the starting point that won

    """

    rate: float
    S_X: np.ndarray
    S_Q: QuantNoise
    mu: float
    inner_iters: int = 0
    outer_iters: int = 0
    timeshare: TimeShare = None
    trace: tuple = ()
    constraint: float = 0.0
    kkt: KKTResiduals = None
    start: str = ''

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(
            self.S_X, self.S_Q, self.rate, self.constraint, self.mu,
        )


def lagrangian(
    ch: ChannelRealization,
    S_X,
    S_Q,
    mu: float,
    c0: float = 0.0,
) -> float:
    """f_o - mu (f_c - c0) in bits"""

    return cf_objective(ch, S_X, S_Q) - mu * (cf_constraint(ch, S_X, S_Q) - c0)


def _quantizer_residual(alloc: QuantAllocation, mu: float) -> float:
    """Violation of d/dc_i [(1-mu) c_i - log2(2^c_i + lambda_i - 1)] = 0"""

    lam = alloc.gen_eig.eigenvalues
    if lam.size == 0:
        return 0.0
    c = alloc.rates_c
    active = alloc.active
    with np.errstate(over='ignore'):
        share = 1.0 / (1.0 + (lam - 1.0) * np.exp2(-c))
    deriv = (1.0 - mu) - share
    resid = 0.0
    if np.any(active):
        resid = float(np.abs(deriv[active]).max())
    if np.any(~active):
        resid = max(resid, float(np.clip(deriv[~active], 0.0, None).max()))
    return resid


def kkt_residuals(
    ch: ChannelRealization,
    S_X,
    alloc: QuantAllocation,
    mu: float,
    P: float,
    c0: float,
) -> KKTResiduals:
    """Optimality residuals of an operating point"""

    quant = alloc.quant_noise()
    f_c = cf_constraint(ch, S_X, quant)
    if mu == 0:
        slack = 0.0
    elif math.isfinite(f_c) and math.isfinite(c0):
        slack = abs(mu * (f_c - c0))
    else:
        slack = math.inf
    return KKTResiduals(
        stationarity=input_stationarity(ch, S_X, quant, mu, P),
        quantizer=_quantizer_residual(alloc, mu),
        slackness=slack,
    )


def inner_coordinate_ascent(
    ch: ChannelRealization,
    mu: float,
    P: float,
    init_S_X,
    tol: float = 1e-8,
    max_iters: int = 200,
    cfg: InputOptConfig = None,
) -> InnerResult:
    """
    Alternate the quantizer and the transmit covariance at fixed mu

    Arguments:
        ch (ChannelRealization): Channel instance
        mu (float): Multiplier in (0, 1)
        P (float): Trace budget
        init_S_X (ndarray): Feasible starting transmit covariance

    Keyword arguments:
        tol (float): Relative Lagrangian improvement per alternation
            below which the loop stops
        max_iters (int): Alternation limit
        cfg (InputOptConfig): Projected gradient settings

    Returns:
        InnerResult

    Raises:
        MonotonicityError: A half-step lowered the Lagrangian
        ConvergenceError: Alternation limit hit; iterate is the
            InnerResult reached so far

    """

    log = logging.getLogger(__name__)

    if not 0.0 < mu < 1.0:
        raise PreconditionError(f"mu must lie in (0, 1), got {mu}")
    if cfg is None:
        cfg = InputOptConfig(power_P=P)
    S_X = ch.check_input(init_S_X, 'init_S_X')
    if np.real(np.trace(S_X)) > P * (1.0 + 1e-9):
        raise PreconditionError('init_S_X exceeds the power budget')

    trace = []
    prev = None
    quant = None
    for it in range(1, max_iters + 1):
        quant, _ = quantizer_for_mu(ch, S_X, mu)
        val_q = lagrangian(ch, S_X, quant, mu)
        if trace and val_q < trace[-1] - MONOTONE_SLACK:
            log.error('Quantizer step lowered the Lagrangian at mu=%.6g', mu)
            raise MonotonicityError(
                f"Lagrangian fell from {trace[-1]!r} to {val_q!r} "
                f"in the quantizer step at mu={mu!r}"
            )
        trace.append(val_q)

        try:
            S_new = maximize_lagrangian_input(ch, quant, mu, cfg, init=S_X)
        except ConvergenceError as err:
            log.warning('Continuing with last input iterate: %s', err)
            S_new = err.iterate
        val_x = lagrangian(ch, S_new, quant, mu)
        if val_x < val_q - MONOTONE_SLACK:
            log.error('Input step lowered the Lagrangian at mu=%.6g', mu)
            raise MonotonicityError(
                f"Lagrangian fell from {val_q!r} to {val_x!r} "
                f"in the input step at mu={mu!r}"
            )
        trace.append(val_x)
        S_X = S_new

        log.debug('mu=%.6g alternation %d: Lagrangian %.12g', mu, it, val_x)
        if prev is not None and val_x - prev <= tol * max(1.0, abs(val_x)):
            return InnerResult(S_X, quant, val_x, it, tuple(trace))
        prev = val_x

    result = InnerResult(S_X, quant, trace[-1], max_iters, tuple(trace))
    log.error('Inner ascent hit %d alternations at mu=%.6g', max_iters, mu)
    raise ConvergenceError(
        f"Inner coordinate ascent did not converge in {max_iters} "
        "alternations",
        iterate=result,
        trace=trace,
    )


def _polished(ch, S_X, P, c0, label, **kwargs) -> JointOptResult:
    """Closed-form quantizer at exactly c0 for a given input"""

    rate, alloc, slope = fixed_input_rate(ch, S_X, c0)
    quant = alloc.quant_noise()
    return JointOptResult(
        rate=rate,
        S_X=S_X,
        S_Q=quant,
        mu=slope,
        constraint=cf_constraint(ch, S_X, quant),
        kkt=kkt_residuals(ch, S_X, alloc, slope, P, c0),
        start=label,
        **kwargs,
    )


def _direct_link_result(ch, P) -> JointOptResult:
    """c0 = 0: nothing is forwarded"""

    S_X = waterfilling_input(ch.H_SD, ch.destination_noise(), P)
    alloc, slope = allocation_for_budget(gen_eig_system(ch, S_X), 0.0)
    return JointOptResult(
        rate=dest_only_rate(ch, S_X),
        S_X=S_X,
        S_Q=QuantNoise.dropped(ch.H_SR.shape[0]),
        mu=slope,
        constraint=0.0,
        kkt=KKTResiduals(0.0, _quantizer_residual(alloc, slope), 0.0),
        start='waterfilling',
    )


def _random_inputs(ch, P, count, seed):
    rng = np.random.default_rng(seed)
    s = ch.H_SR.shape[1]
    for _ in range(count):
        A = rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))
        S = A @ A.conj().T
        yield P * S / np.real(np.trace(S))


class _MuBisection:
    """
    Bisection on mu from one starting input

    Each evaluation runs the inner ascent warm-started from the previous
    fixed point.

    """

    def __init__(self, ch, P, c0, opts: OptimizerOptions, cfg, label):
        self.__log = logging.getLogger(__name__)
        self.ch = ch
        self.P = P
        self.c0 = c0
        self.opts = opts
        self.cfg = cfg
        self.label = label
        self.inner_iters = 0
        self.outer_iters = 0
        self.tol = opts.budget_rtol * max(1.0, c0)

    def solve(self, mu, S_init):
        try:
            inner = inner_coordinate_ascent(
                self.ch, mu, self.P, S_init,
                tol=self.opts.inner_tol,
                max_iters=self.opts.max_inner,
                cfg=self.cfg,
            )
        except ConvergenceError as err:
            self.__log.warning('Using last inner iterate: %s', err)
            inner = err.iterate
        self.inner_iters += inner.iters
        self.outer_iters += 1
        f_c = cf_constraint(self.ch, inner.S_X, inner.S_Q)
        self.__log.debug(
            '[%s] mu=%.10g: f_c=%.9g (budget %.9g)',
            self.label, mu, f_c, self.c0,
        )
        return inner, f_c - self.c0

    def run(self, S0) -> list:
        """
        Returns:
            list: Candidate JointOptResults

        """

        opts = self.opts
        lo, hi = opts.mu_lo, opts.mu_hi
        pt_lo, g_lo = self.solve(lo, S0)
        if g_lo <= self.tol:
            return self._finish(pt_lo, lo)
        pt_hi, g_hi = self.solve(hi, pt_lo.S_X)
        if g_hi >= -self.tol:
            return self._finish(pt_hi, hi)

        warm = pt_hi.S_X
        while self.outer_iters < opts.max_outer:
            mid = 0.5 * (lo + hi)
            pt, g = self.solve(mid, warm)
            warm = pt.S_X
            if abs(g) <= self.tol:
                return self._finish(pt, mid)
            if g > 0:
                lo, pt_lo, g_lo = mid, pt, g
            else:
                hi, pt_hi, g_hi = mid, pt, g
            if hi - lo < opts.mu_width:
                break

        out = []
        jump = opts.timeshare_rtol * self.c0
        if abs(g_lo) > jump and abs(g_hi) > jump:
            self.__log.info(
                '[%s] f_c jumps across the budget at mu=%.10g; time-sharing',
                self.label, lo,
            )
            out.append(self._timeshare(pt_lo, lo, pt_hi, hi))
        if abs(g_lo) < abs(g_hi):
            out.extend(self._finish(pt_lo, lo))
        else:
            out.extend(self._finish(pt_hi, hi))
        return out

    def _finish(self, inner: InnerResult, mu) -> list:
        return [_polished(
            self.ch, inner.S_X, self.P, self.c0, self.label,
            inner_iters=self.inner_iters,
            outer_iters=self.outer_iters,
            trace=inner.trace,
        )]

    def _timeshare(self, pt_a, mu_a, pt_b, mu_b) -> JointOptResult:
        ch = self.ch
        point_a = OperatingPoint(
            pt_a.S_X, pt_a.S_Q,
            cf_objective(ch, pt_a.S_X, pt_a.S_Q),
            cf_constraint(ch, pt_a.S_X, pt_a.S_Q),
            mu_a,
        )
        point_b = OperatingPoint(
            pt_b.S_X, pt_b.S_Q,
            cf_objective(ch, pt_b.S_X, pt_b.S_Q),
            cf_constraint(ch, pt_b.S_X, pt_b.S_Q),
            mu_b,
        )
        theta = (self.c0 - point_b.constraint) / (
            point_a.constraint - point_b.constraint
        )
        main = point_a if theta >= 0.5 else point_b
        return JointOptResult(
            rate=theta * point_a.rate + (1.0 - theta) * point_b.rate,
            S_X=main.S_X,
            S_Q=main.S_Q,
            mu=main.mu,
            inner_iters=self.inner_iters,
            outer_iters=self.outer_iters,
            timeshare=TimeShare(point_a, point_b, theta),
            trace=pt_a.trace,
            constraint=self.c0,
            kkt=None,
            start=self.label,
        )


def optimize_cf(
    ch: ChannelRealization,
    P: float,
    c0: float,
    opts: OptimizerOptions = None,
    inits=(),
) -> JointOptResult:
    """
    Jointly optimized compress-and-forward rate

    Arguments:
        ch (ChannelRealization): Channel instance
        P (float): Trace budget
        c0 (float): Relay link capacity in bits

    Keyword arguments:
        opts (OptimizerOptions): Solver settings
        inits (iterable): Extra starting transmit covariances, e.g. the
            cut-set maximizer or water-filling covariances. Every start
            is also scored with the closed-form quantizer at c0.

    Returns:
        JointOptResult: Best candidate over all starting points

    """

    log = logging.getLogger(__name__)

    if not P > 0:
        raise PreconditionError(f"Power budget must be positive, got {P}")
    if not c0 >= 0:
        raise PreconditionError(f"c0 must be non-negative, got {c0}")
    if opts is None:
        opts = OptimizerOptions()

    if c0 == 0:
        return _direct_link_result(ch, P)

    cfg = opts.input_config(P)
    starts = [('isotropic', isotropic_input(ch, P))]
    for i, S in enumerate(inits):
        S = ch.check_input(S, 'init')
        if np.real(np.trace(S)) > P * (1.0 + 1e-9):
            raise PreconditionError(f"init {i} exceeds the power budget")
        starts.append((f"init{i}", S))
    for i, S in enumerate(_random_inputs(ch, P, opts.restarts, opts.seed)):
        starts.append((f"random{i}", S))

    candidates = []
    for label, S0 in starts:
        candidates.append(_polished(ch, S0, P, c0, f"{label}:fixed"))
        bisection = _MuBisection(ch, P, c0, opts, cfg, label)
        candidates.extend(bisection.run(S0))

    best = max(candidates, key=lambda res: res.rate)
    log.info(
        'CF rate %.9g bits at c0=%g (start %s, mu=%.6g, %d outer steps)',
        best.rate, c0, best.start, best.mu, best.outer_iters,
    )
    return best


def rate_curve(
    ch: ChannelRealization,
    P: float,
    c0_grid,
    opts: OptimizerOptions = None,
    extra_inits=(),
    point_inits=None,
) -> list:
    """
    Jointly optimized rate over an ascending grid of link capacities

    Each point also starts from the previous point's transmit covariance.
    A point that does worse than its predecessor reuses the predecessor's
    operating point, which stays feasible at the larger capacity.

    Arguments:
        ch (ChannelRealization): Channel instance
        P (float): Trace budget
        c0_grid (iterable): Ascending link capacities in bits

    Keyword arguments:
        opts (OptimizerOptions): Solver settings
        extra_inits (iterable): Starting covariances used at every point
        point_inits (sequence): Per grid point lists of further starting
            covariances, e.g. the cut-set maximizer at that capacity

    Returns:
        list: RatePoint per grid point, meta holding 'scheme', 'mu',
            'inner_iters', 'outer_iters', 'timeshare' and 'result'

    """

    log = logging.getLogger(__name__)

    grid = [float(c0) for c0 in c0_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise PreconditionError('c0_grid must be sorted ascending')
    extra_inits = list(extra_inits)
    if point_inits is None:
        point_inits = [()] * len(grid)
    elif len(point_inits) != len(grid):
        raise PreconditionError('point_inits must match c0_grid')

    points = []
    prev = None
    for c0, here in zip(grid, point_inits):
        inits = list(extra_inits) + list(here)
        if prev is not None:
            inits.append(prev.S_X)
        res = optimize_cf(ch, P, c0, opts, inits=inits)
        if prev is not None and res.rate < prev.rate:
            log.debug('Keeping previous operating point at c0=%g', c0)
            res = prev
        points.append(RatePoint(
            c0=c0,
            rate=res.rate,
            meta={
                'scheme': 'cf_joint',
                'mu': res.mu,
                'inner_iters': res.inner_iters,
                'outer_iters': res.outer_iters,
                'timeshare': res.timeshare is not None,
                'result': res,
            },
        ))
        prev = res

    for i in range(1, len(points) - 1):
        a, b, c = points[i - 1], points[i], points[i + 1]
        if c.c0 == b.c0 or b.c0 == a.c0:
            continue
        left = (b.rate - a.rate) / (b.c0 - a.c0)
        right = (c.rate - b.rate) / (c.c0 - b.c0)
        if right > left + 1e-6:
            log.warning(
                'Rate curve not concave at c0=%g (slopes %.6g then %.6g)',
                b.c0, left, right,
            )
    return points


def constant_gap_rate(
    ch: ChannelRealization,
    P: float,
    c0: float,
    cfg: InputOptConfig = None,
    cutset=None,
) -> float:
    """
    Rate of the cut-set maximizing input with the constant-gap quantizer

    Arguments:
        ch (ChannelRealization): Channel instance
        P (float): Trace budget
        c0 (float): Relay link capacity in bits

    Keyword arguments:
        cfg (InputOptConfig): Solver settings for the cut-set bound
        cutset (CutSetResult): Precomputed cut-set bound at (P, c0)

    Returns:
        float: Bits, floored at zero

    """

    if cutset is None:
        cutset = cutset_bound(ch, P, c0, cfg)
    quant = constant_gap_quantizer(ch, cutset.S_X)
    return max(cf_rate_minform(ch, cutset.S_X, quant, c0), 0.0)
