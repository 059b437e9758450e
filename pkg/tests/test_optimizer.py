import pytest

import numpy as np

import cfrelay.optimizer as optimizer
from cfrelay.channel import AntennaProfile, ChannelRealization
from cfrelay.errors import PreconditionError
from cfrelay.inputs import (
    cutset_bound,
    input_stationarity,
    isotropic_input,
    waterfilling_input,
)
from cfrelay.optimizer import (
    InnerResult,
    OptimizerOptions,
    constant_gap_rate,
    inner_coordinate_ascent,
    kkt_residuals,
    lagrangian,
    optimize_cf,
    rate_curve,
)
from cfrelay.quantizer import fixed_input_rate, quantizer_for_mu
from cfrelay.rates import QuantNoise, cf_constraint, cf_objective, dest_only_rate
from cfrelay.scenario import random_channel


def test_options_validation():
    with pytest.raises(PreconditionError):
        OptimizerOptions(mu_lo=0.0)
    with pytest.raises(PreconditionError):
        OptimizerOptions(mu_lo=0.6, mu_hi=0.5)
    with pytest.raises(PreconditionError):
        OptimizerOptions(restarts=-1)
    assert OptimizerOptions().input_config(2.0).power_P == 2.0


@pytest.mark.parametrize('mu', [0.1, 0.5, 0.9])
def test_inner_ascent_is_monotone(make_channel, mu):
    ch = make_channel(2, 3, 3, 4, seed=1)
    P = 1.0
    inner = inner_coordinate_ascent(ch, mu, P, isotropic_input(ch, P))
    trace = np.array(inner.trace)
    assert np.all(np.diff(trace) >= -1e-9)
    assert inner.value == pytest.approx(lagrangian(ch, inner.S_X, inner.S_Q, mu))

    # Converged point is stationary in both blocks
    assert input_stationarity(ch, inner.S_X, inner.S_Q, mu, P) <= 1e-5
    _, alloc = quantizer_for_mu(ch, inner.S_X, mu)
    res = kkt_residuals(ch, inner.S_X, alloc, mu, P, c0=0.0)
    assert res.quantizer <= 1e-9


def test_inner_ascent_rejects(make_channel):
    ch = make_channel(2, 2, 2, 0)
    with pytest.raises(PreconditionError):
        inner_coordinate_ascent(ch, 0.0, 1.0, isotropic_input(ch, 1.0))
    with pytest.raises(PreconditionError):
        inner_coordinate_ascent(ch, 0.5, 1.0, 2.0 * np.eye(2))


def test_zero_capacity_is_direct_link(make_channel):
    ch = make_channel(2, 3, 3, 4, seed=2)
    res = optimize_cf(ch, 1.0, 0.0)
    S_wf = waterfilling_input(ch.H_SD, ch.destination_noise(), 1.0)
    assert res.rate == pytest.approx(dest_only_rate(ch, S_wf))
    assert res.S_Q.k == 0
    assert res.rate == pytest.approx(cutset_bound(ch, 1.0, 0.0).value)


@pytest.mark.parametrize('c0', [0.5, 2.0, 6.0])
def test_optimize_cf_contract(make_channel, c0):
    ch = make_channel(2, 3, 3, 4, sigma2=0.1, seed=3)
    P = 1.0
    res = optimize_cf(ch, P, c0)
    zero = optimize_cf(ch, P, 0.0)
    cs = cutset_bound(ch, P, c0)

    assert res.rate <= cs.value + 1e-6
    assert res.rate - zero.rate <= c0 + 1e-6
    assert res.rate >= fixed_input_rate(ch, isotropic_input(ch, P), c0)[0] - 1e-9
    if res.timeshare is None:
        assert res.constraint <= c0 * (1 + 1e-6) + 1e-9
    else:
        assert 0.0 <= res.timeshare.weight <= 1.0


def test_optimize_cf_uses_inits(make_channel):
    ch = make_channel(2, 2, 2, 2, sigma2=0.1, seed=4)
    P, c0 = 1.0, 3.0
    cs = cutset_bound(ch, P, c0)
    res = optimize_cf(ch, P, c0, inits=[cs.S_X])
    assert res.rate >= fixed_input_rate(ch, cs.S_X, c0)[0] - 1e-9
    assert cs.value - res.rate <= 2.0 + 1e-6
    assert res.rate >= constant_gap_rate(ch, P, c0, cutset=cs) - 1e-9

    with pytest.raises(PreconditionError):
        optimize_cf(ch, P, c0, inits=[10.0 * np.eye(2)])
    with pytest.raises(PreconditionError):
        optimize_cf(ch, P, -1.0)


def test_restarts_are_deterministic(make_channel):
    ch = make_channel(2, 2, 2, 1, seed=5)
    opts = OptimizerOptions(restarts=2, seed=9)
    first = optimize_cf(ch, 1.0, 2.0, opts)
    second = optimize_cf(ch, 1.0, 2.0, opts)
    assert first.rate == second.rate
    assert first.start == second.start


def test_rate_curve(make_channel):
    ch = make_channel(2, 3, 3, 4, sigma2=0.1, seed=6)
    P = 1.0
    grid = [0.0, 1.0, 2.0, 4.0, 8.0]
    points = rate_curve(ch, P, grid)

    rates = np.array([pt.rate for pt in points])
    assert [pt.c0 for pt in points] == grid
    assert np.all(np.diff(rates) >= 0.0)
    for pt in points:
        assert pt.rate - points[0].rate <= pt.c0 + 1e-6
        assert pt.rate <= cutset_bound(ch, P, pt.c0).value + 1e-6
        assert {'scheme', 'mu', 'inner_iters', 'outer_iters', 'timeshare',
                'result'} <= set(pt.meta)

    with pytest.raises(PreconditionError):
        rate_curve(ch, P, [2.0, 1.0])
    with pytest.raises(PreconditionError):
        rate_curve(ch, P, [1.0, 2.0], point_inits=[[]])


def test_constant_gap_rate(make_channel):
    for seed in range(3):
        ch = make_channel(2, 2, 2, 1, sigma2=0.01, seed=seed)
        cs = cutset_bound(ch, 1.0, 4.0)
        rate = constant_gap_rate(ch, 1.0, 4.0, cutset=cs)
        assert 0.0 <= rate <= cs.value + 1e-6
        assert cs.value - rate <= 2.0 + 1e-6


@pytest.mark.parametrize('profile,c0', [
    ((2, 3, 3, 4), 2.0),
    ((2, 2, 2, 1), 1.0),
])
def test_optimize_cf_kkt(profile, c0):
    ch = random_channel(AntennaProfile(*profile), 0.1, 1)
    opts = OptimizerOptions(inner_tol=1e-12, grad_tol=1e-9)
    res = optimize_cf(ch, 1.0, c0, opts)
    assert res.timeshare is None
    assert res.kkt.stationarity <= 1e-5
    assert res.kkt.quantizer <= 1e-5
    assert res.kkt.slackness <= 1e-5
    assert abs(res.constraint - c0) <= 1e-5


@pytest.mark.parametrize('profile,c0', [
    ((2, 3, 3, 4), 2.0),
    ((2, 2, 2, 1), 3.0),
])
def test_optimize_cf_low_noise(profile, c0):
    ch = random_channel(AntennaProfile(*profile), 0.1, 3)
    res = optimize_cf(ch, 1.0, c0)
    assert np.isfinite(res.rate)
    assert res.rate <= cutset_bound(ch, 1.0, c0).value + 1e-6
    assert np.real(np.trace(res.S_X)) <= 1.0 + 1e-9


@pytest.mark.parametrize('seed', range(12))
def test_optimize_cf_over_seeds(seed):
    rng = np.random.default_rng(seed)
    s, d, r = (int(n) for n in rng.integers(1, 4, size=3))
    profile = AntennaProfile(s, d, r, int(rng.integers(0, 4)))
    sigma2 = float(rng.choice([1.0, 0.1, 0.01]))
    c0 = float(rng.uniform(0.5, 8.0))
    ch = random_channel(profile, sigma2, rng)
    cs = cutset_bound(ch, 1.0, c0)
    res = optimize_cf(ch, 1.0, c0, inits=[cs.S_X])
    assert res.rate <= cs.value + 1e-6
    assert cs.value - res.rate <= min(profile.r, profile.s) + 1e-6
    assert res.rate >= fixed_input_rate(ch, isotropic_input(ch, 1.0), c0)[0] - 1e-9


def test_scalar_relay_converges_fast(make_channel):
    ch = make_channel(1, 2, 1, 2, sigma2=0.1, seed=4)
    inner = inner_coordinate_ascent(ch, 0.5, 1.0, np.eye(1))
    assert inner.iters <= 2
    assert np.allclose(inner.S_X, np.eye(1))


def test_scalar_optimize_cf_matches_grid():
    ch = ChannelRealization(
        H_SR=[[1.0]], H_SD=[[0.6]], H_TR=[[0.8]], H_TD=[[1.1]], sigma2=0.1,
    )
    P, c0 = 1.0, 1.5
    S_X = np.array([[P]])

    def best_on(grid):
        feasible = [
            (cf_objective(ch, S_X, [[q]]), q) for q in grid
            if cf_constraint(ch, S_X, [[q]]) <= c0
        ]
        return max(feasible)

    _, q = best_on(np.logspace(-6, 4, 2001))
    rate, _ = best_on(np.linspace(q / 1.02, q * 1.02, 2001))

    res = optimize_cf(ch, P, c0)
    assert res.rate == pytest.approx(rate, abs=1e-4)
    assert res.rate >= rate - 1e-9


def test_bisection_time_shares_across_a_jump(make_channel, monkeypatch):
    ch = make_channel(2, 2, 2, 1, seed=2)
    P = 1.0
    S0 = isotropic_input(ch, P)
    fine = QuantNoise.from_covariance(0.01 * np.eye(2))
    coarse = QuantNoise.from_covariance(100.0 * np.eye(2))
    f_fine = cf_constraint(ch, S0, fine)
    f_coarse = cf_constraint(ch, S0, coarse)
    c0 = 0.5 * (f_fine + f_coarse)

    def jumping(ch, mu, P, S_init, **kwargs):
        quant = fine if mu < 0.5 else coarse
        return InnerResult(S0, quant, 0.0, 1, (0.0,))

    monkeypatch.setattr(optimizer, 'inner_coordinate_ascent', jumping)
    opts = OptimizerOptions()
    bisection = optimizer._MuBisection(ch, P, c0, opts, opts.input_config(P), 'iso')
    shared = [res for res in bisection.run(S0) if res.timeshare is not None]

    assert len(shared) == 1
    res = shared[0]
    assert res.timeshare.weight == pytest.approx(0.5)
    assert res.constraint == c0
    assert res.rate == pytest.approx(
        0.5 * (cf_objective(ch, S0, fine) + cf_objective(ch, S0, coarse)),
    )
    assert res.timeshare.point_a.constraint == pytest.approx(f_fine)
    assert res.timeshare.point_b.constraint == pytest.approx(f_coarse)
