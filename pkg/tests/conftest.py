import pytest

import numpy as np

from cfrelay.channel import AntennaProfile
from cfrelay.harness import utils as harness_utils
from cfrelay.scenario import random_channel


def random_psd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S = A @ A.conj().T
    return scale * S / np.real(np.trace(S))


@pytest.fixture
def make_channel():
    def factory(s, d, r, t, sigma2=1.0, seed=0):
        return random_channel(AntennaProfile(s, d, r, t), sigma2, seed)
    return factory


@pytest.fixture
def settings_file(tmp_path, monkeypatch):
    path = tmp_path / 'settings.json'
    monkeypatch.setattr(harness_utils, 'SETTINGS_FILE', str(path))
    monkeypatch.setitem(harness_utils.DEFAULTS, 'outdir', str(tmp_path))
    return path
