import itertools
import math

import pytest

import numpy as np

from cfrelay.channel import AntennaProfile
from cfrelay.dof import (
    combiner_rows,
    dof_dest,
    dof_relay,
    dof_report,
    empirical_dof,
    iid_dof_gain,
    n_deterministic,
    relay_dof_gain,
    relay_gain_evaluator,
    zero_forcing_combiner,
)
from cfrelay.errors import PreconditionError
from cfrelay.inputs import isotropic_input
from cfrelay.scenario import random_channel

COUNTS = range(7)


def test_gain_equals_deterministic_components():
    for s, d, r, t in itertools.product(COUNTS, repeat=4):
        gain = dof_relay(s, d, r, t) - dof_dest(s, d, t)
        assert gain == n_deterministic(s, d, r, t), (s, d, r, t)


def test_gain_condition():
    for s, d, r, t in itertools.product(range(1, 7), COUNTS, range(1, 7), COUNTS):
        positive = relay_dof_gain(s, d, r, t, math.inf) > 0
        assert positive == (r + d > t and d < s + t), (s, d, r, t)


@pytest.mark.parametrize('alpha', [0.0, 0.5, 1.0, 2.5, math.inf])
def test_iid_never_beats_optimal(alpha):
    for s, d, r, t in itertools.product(COUNTS, repeat=4):
        assert iid_dof_gain(s, d, r, t, alpha) <= relay_dof_gain(s, d, r, t, alpha)


def test_report_single_cell():
    rep = dof_report(AntennaProfile(3, 2, 2, 0), math.inf)
    assert rep.dof_dest == 2
    assert rep.dof_relay_inf == 3
    assert rep.dof_gain_opt == 1
    assert rep.n_det_components == 1


def test_report_without_gain():
    rep = dof_report(AntennaProfile(2, 3, 3, 0), math.inf)
    assert rep.dof_gain_opt == 0
    assert rep.dof_gain_iid == 0.0


@pytest.mark.parametrize('alpha', [0.5, 1.0, 3.0, 6.0])
def test_report_interference_limited(alpha):
    rep = dof_report(AntennaProfile(2, 3, 3, 4), alpha)
    assert rep.dof_dest == 0
    assert rep.dof_relay_inf == 2
    assert rep.dof_gain_opt == min(2, alpha)
    assert rep.dof_gain_iid == pytest.approx(2 * min(1.0, alpha / 3))
    assert rep.combiner_rows == 2
    assert dof_report(AntennaProfile(2, 3, 3, 4), math.inf).dof_gain_opt == 2


def test_report_rejects_negative_alpha():
    with pytest.raises(PreconditionError):
        dof_report(AntennaProfile(1, 1, 1, 0), -1.0)


def test_combiner_rows_formula():
    assert combiner_rows(2, 3, 3, 4) == 2
    assert combiner_rows(2, 1, 1, 3) == 0
    assert combiner_rows(4, 1, 2, 0) == 2


def test_combiner_without_interference(make_channel):
    ch = make_channel(3, 2, 2, 0, seed=1)
    C, A = zero_forcing_combiner(ch, isotropic_input(ch, 1.0))
    assert C.shape == (2, 2)
    assert A.shape == (2, 2)
    assert np.allclose(C @ C.conj().T, np.eye(2), atol=1e-10)


def test_combiner_empty(make_channel):
    ch = make_channel(2, 1, 1, 3)
    C, A = zero_forcing_combiner(ch, isotropic_input(ch, 1.0))
    assert C.shape == (0, 1)
    assert A.shape == (0, 1)


@pytest.mark.parametrize('seed', range(3))
def test_combiner_nulls_interference(make_channel, seed):
    ch = make_channel(2, 3, 3, 4, seed=seed)
    S_X = isotropic_input(ch, 1.0)
    C, A = zero_forcing_combiner(ch, S_X)
    assert C.shape == (2, 3)
    assert A.shape == (2, 3)

    rows = np.hstack([C, A])
    assert np.abs(rows @ ch.H_T).max() <= 1e-9
    assert np.allclose(C @ C.conj().T, np.eye(2), atol=1e-10)
    assert np.linalg.matrix_rank(rows @ ch.H) == 2


def test_empirical_dof():
    assert empirical_dof(lambda rho: 2.0 * math.log2(rho), 1e4, 1e6) == pytest.approx(2.0)
    assert empirical_dof(lambda rho: 5.0, 1e3, 1e5) == 0.0
    with pytest.raises(PreconditionError):
        empirical_dof(lambda rho: 0.0, 10.0, 1e5)
    with pytest.raises(PreconditionError):
        empirical_dof(lambda rho: 0.0, 1e5, 1e5)


def test_evaluator_rejects(make_channel):
    ch = make_channel(2, 2, 2, 0)
    with pytest.raises(PreconditionError):
        relay_gain_evaluator(ch, 1.0, 1.0, scheme='other')
    with pytest.raises(PreconditionError):
        relay_gain_evaluator(ch, 1.0, -1.0)


def test_evaluator_fixed_scheme(make_channel):
    ch = make_channel(3, 2, 2, 0, seed=4)
    gain = relay_gain_evaluator(ch, 1.0, 1.0, scheme='fixed')
    total = relay_gain_evaluator(ch, 1.0, 1.0, scheme='fixed', baseline=False)
    rho = 1e3
    assert gain(rho) >= 0.0
    assert gain(rho) <= math.log2(rho) + 1e-9
    assert total(rho) >= gain(rho)


@pytest.mark.slow
@pytest.mark.parametrize('profile', [(3, 2, 2, 0), (2, 3, 3, 0), (2, 3, 3, 4)])
def test_secant_matches_formula(profile):
    ch = random_channel(AntennaProfile(*profile), 1.0, 21)
    evaluator = relay_gain_evaluator(ch, 1.0, math.inf, scheme='joint')
    expected = dof_report(AntennaProfile(*profile), math.inf).dof_gain_opt
    assert empirical_dof(evaluator, 1e5, 1e7) == pytest.approx(expected, abs=0.05)


@pytest.mark.slow
def test_secant_iid_penalty():
    ch = random_channel(AntennaProfile(2, 3, 3, 4), 1.0, 22)
    iid = relay_gain_evaluator(ch, 1.0, 1.0, scheme='iid')
    combiner = relay_gain_evaluator(ch, 1.0, 1.0, scheme='combiner')
    assert empirical_dof(iid, 1e5, 1e7) == pytest.approx(2.0 / 3.0, abs=0.1)
    assert empirical_dof(combiner, 1e5, 1e7) == pytest.approx(1.0, abs=0.1)
