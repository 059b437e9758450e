import itertools
import math

import pytest

import numpy as np
from hypothesis import given, settings, strategies as st

from cfrelay.channel import (
    AntennaProfile,
    ChannelRealization,
    RankProfile,
    noiseless_rank_profile,
)
from cfrelay.errors import NumericalError, PreconditionError
from cfrelay.inputs import isotropic_input
from cfrelay.linalg import GenEigSystem
from cfrelay.optimizer import lagrangian
from cfrelay.quantizer import (
    allocation_for_budget,
    constant_gap_quantizer,
    fixed_input_rate,
    gen_eig_system,
    iid_quantizer_for_budget,
    iid_rate,
    quantizer_for_mu,
    slope_profile,
)
from cfrelay.rates import (
    QuantNoise,
    cf_constraint,
    cf_objective,
    dest_only_rate,
    full_observation_rate,
    relay_residual_information,
)
from cfrelay.scenario import random_channel


def test_gen_eig_system(make_channel):
    ch = make_channel(2, 3, 3, 4, seed=1)
    ge = gen_eig_system(ch, isotropic_input(ch, 1.0))
    assert ge.dim == 3
    assert np.all(ge.eigenvalues >= 1.0)
    assert np.all(np.diff(ge.eigenvalues) <= 0)


def test_quantizer_for_mu(make_channel):
    ch = make_channel(2, 2, 2, 1, seed=2)
    S_X = isotropic_input(ch, 1.0)
    mu = 0.3
    quant, alloc = quantizer_for_mu(ch, S_X, mu)
    lam = alloc.gen_eig.eigenvalues

    described = 1.0 - 1.0 / lam > mu
    assert np.array_equal(alloc.active, described)
    assert quant.k == alloc.n_active
    expected = np.where(
        described, np.log2(np.clip(lam - 1.0, 1e-300, None)) - np.log2(mu / (1 - mu)), 0.0,
    )
    assert np.allclose(alloc.rates_c, np.maximum(expected, 0.0))

    with pytest.raises(PreconditionError):
        quantizer_for_mu(ch, S_X, 0.0)
    with pytest.raises(PreconditionError):
        quantizer_for_mu(ch, S_X, 1.0)


@pytest.mark.parametrize('c0', [0.5, 2.0, 7.5])
def test_allocation_meets_budget(make_channel, c0):
    ch = make_channel(2, 3, 3, 4, seed=3)
    S_X = isotropic_input(ch, 1.0)
    alloc, slope = allocation_for_budget(gen_eig_system(ch, S_X), c0)
    assert alloc.total_rate == pytest.approx(c0, rel=1e-9)
    assert cf_constraint(ch, S_X, alloc.quant_noise()) == pytest.approx(c0, rel=1e-6)
    assert 0.0 < slope < 1.0
    assert slope == alloc.mu


def test_allocation_at_zero_budget(make_channel):
    ch = make_channel(2, 3, 3, 4, seed=3)
    ge = gen_eig_system(ch, isotropic_input(ch, 1.0))
    alloc, slope = allocation_for_budget(ge, 0.0)
    assert alloc.n_active == 0
    assert slope == pytest.approx(1.0 - 1.0 / ge.eigenvalues[0])


def test_allocation_nothing_describable():
    ch = ChannelRealization(
        H_SR=np.zeros((2, 1)), H_SD=np.ones((1, 1)), H_TR=[], H_TD=[],
    )
    S_X = isotropic_input(ch, 1.0)
    rate, alloc, slope = fixed_input_rate(ch, S_X, 3.0)
    assert alloc.n_active == 0
    assert slope == 0.0
    assert rate == pytest.approx(dest_only_rate(ch, S_X))


@pytest.mark.parametrize('seed', range(10))
def test_closed_form_beats_grid_scalar(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(AntennaProfile(2, 1, 1, 1), 0.5, rng)
    S_X = isotropic_input(ch, 1.0)
    mu = float(rng.uniform(0.05, 0.95))
    quant, alloc = quantizer_for_mu(ch, S_X, mu)
    best = lagrangian(ch, S_X, quant, mu)

    C = alloc.gen_eig.transform
    grid = np.concatenate([np.logspace(-6, 6, 1000), [np.inf]])
    for sigma in grid:
        val = lagrangian(ch, S_X, QuantNoise.from_components(C, [sigma]), mu)
        assert val <= best + 1e-9


@pytest.mark.parametrize('seed', range(5))
def test_closed_form_beats_grid_pair(seed):
    rng = np.random.default_rng(100 + seed)
    ch = random_channel(AntennaProfile(2, 2, 2, 2), 0.25, rng)
    S_X = isotropic_input(ch, 1.0)
    mu = float(rng.uniform(0.05, 0.6))
    quant, alloc = quantizer_for_mu(ch, S_X, mu)
    best = lagrangian(ch, S_X, quant, mu)

    C = alloc.gen_eig.transform
    axis = np.concatenate([np.logspace(-4, 4, 60), [np.inf]])
    for s1, s2 in itertools.product(axis, axis):
        val = lagrangian(ch, S_X, QuantNoise.from_components(C, [s1, s2]), mu)
        assert val <= best + 1e-9


def test_slope_matches_finite_difference(make_channel):
    ch = make_channel(2, 3, 3, 4, sigma2=0.1, seed=8)
    S_X = isotropic_input(ch, 1.0)
    ge = gen_eig_system(ch, S_X)
    h = 1e-5
    for c0 in np.linspace(0.05, 12.0, 50):
        up = fixed_input_rate(ch, S_X, c0 + h)[0]
        down = fixed_input_rate(ch, S_X, c0 - h)[0]
        _, slope = allocation_for_budget(ge, c0)
        assert (up - down) / (2 * h) == pytest.approx(slope, abs=1e-3)


def test_slope_profile(make_channel):
    ch = make_channel(3, 2, 3, 1, sigma2=0.1, seed=9)
    S_X = isotropic_input(ch, 1.0)
    ge = gen_eig_system(ch, S_X)
    prof = slope_profile(ge, noiseless_rank_profile(ch, S_X))

    assert prof.critical_budgets[0] == 0.0
    assert np.all(np.diff(prof.critical_budgets) >= 0)
    for i, crit in enumerate(prof.critical_budgets):
        if math.isfinite(crit):
            assert prof.slope_at(crit) == pytest.approx(
                prof.slopes_at_critical[i], abs=1e-9,
            )
    assert prof.degraded_bound_ok


@pytest.mark.parametrize('seed', range(3))
def test_reversely_degraded_components(seed):
    ch = random_channel(AntennaProfile(1, 2, 3, 0), 1.0, seed)
    S_X = isotropic_input(ch, 1.0)
    ge = gen_eig_system(ch, S_X)
    prof = slope_profile(ge, noiseless_rank_profile(ch, S_X))
    assert prof.n_reversely_degraded >= 2
    for c0 in np.linspace(0.0, 20.0, 20):
        alloc, _ = allocation_for_budget(ge, c0)
        assert np.count_nonzero(alloc.rates_c == 0.0) >= 2


def test_fixed_input_rate_monotone(make_channel):
    ch = make_channel(2, 3, 3, 4, seed=5)
    S_X = isotropic_input(ch, 1.0)
    rates = [fixed_input_rate(ch, S_X, c0)[0] for c0 in np.linspace(0, 30, 16)]
    assert rates[0] == pytest.approx(dest_only_rate(ch, S_X))
    assert np.all(np.diff(rates) >= -1e-12)
    assert rates[-1] <= full_observation_rate(ch, S_X) + 1e-9
    assert fixed_input_rate(ch, S_X, math.inf)[0] == pytest.approx(
        full_observation_rate(ch, S_X), rel=1e-9,
    )


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c0=st.floats(0.1, 20.0))
def test_iid_quantizer_meets_budget(seed, c0):
    ch = random_channel(AntennaProfile(2, 2, 3, 2), 0.1, seed)
    S_X = isotropic_input(ch, 1.0)
    quant = iid_quantizer_for_budget(ch, S_X, c0)
    assert cf_constraint(ch, S_X, quant) == pytest.approx(c0, rel=1e-6, abs=1e-9)
    rate, _ = iid_rate(ch, S_X, c0)
    assert rate <= fixed_input_rate(ch, S_X, c0)[0] + 1e-9


def test_iid_quantizer_edge_cases(make_channel):
    ch = make_channel(2, 2, 2, 1)
    S_X = isotropic_input(ch, 1.0)
    assert iid_quantizer_for_budget(ch, S_X, 0.0).k == 0
    with pytest.raises(PreconditionError):
        iid_quantizer_for_budget(ch, S_X, -1.0)
    with pytest.raises(PreconditionError):
        iid_quantizer_for_budget(ch, S_X, 1.0, transform=np.eye(3))
    quant = iid_quantizer_for_budget(ch, S_X, 1.0, transform=np.eye(2)[:1])
    assert quant.k == 1


def test_constant_gap_quantizer_spends_little(make_channel):
    for seed in range(5):
        ch = make_channel(3, 2, 2, 2, sigma2=0.01, seed=seed)
        S_X = isotropic_input(ch, 1.0)
        quant = constant_gap_quantizer(ch, S_X)
        assert relay_residual_information(ch, S_X, quant) <= min(2, 3) + 1e-9
        assert cf_objective(ch, S_X, quant) >= dest_only_rate(ch, S_X) - 1e-12


def test_slope_profile_strict(make_channel):
    ch = make_channel(1, 2, 3, 0, seed=1)
    S_X = isotropic_input(ch, 1.0)
    prof = slope_profile(
        gen_eig_system(ch, S_X), noiseless_rank_profile(ch, S_X), strict=True,
    )
    assert prof.degraded_bound_ok

    ge = GenEigSystem(np.eye(3, dtype=complex), np.array([5.0, 3.0, 2.0]))
    ranks = RankProfile(3, 1, 1, 3, 1)
    prof = slope_profile(ge, ranks)
    assert not prof.degraded_bound_ok
    assert prof.n_reversely_degraded == 0
    with pytest.raises(NumericalError):
        slope_profile(ge, ranks, strict=True)
