"""
Average slopes 1 - 1/lambda_i of the fixed-input rate curve over a grid
of relay and destination antenna counts

"""

import logging
import itertools

import numpy as np

from ..channel import AntennaProfile
from ..inputs import isotropic_input
from ..quantizer import gen_eig_system
from ..scenario import random_channel
from ..utils import parallel_map, write_csv

MAX_SLOPES = 6
HEADER = ['r', 'd', 'i', 'avg_slope']


def average_slopes(channels, P: float, n_slopes: int) -> np.ndarray:
    """
    Mean of 1 - 1/lambda_i, i = 1..n_slopes, at the isotropic input

    Arguments:
        channels (iterable): ChannelRealization instances of one profile
        P (float): Trace budget
        n_slopes (int): Leading components to report

    Returns:
        ndarray: n_slopes averages

    """

    total = np.zeros(n_slopes)
    count = 0
    for ch in channels:
        lam = gen_eig_system(ch, isotropic_input(ch, P)).eigenvalues
        total += 1.0 - 1.0 / lam[:n_slopes]
        count += 1
    return total / max(count, 1)


def run_slope_map(
    s: int,
    t: int,
    r_range,
    d_range,
    n_realizations: int = 100,
    sigma2: float = 1.0,
    seed: int = 0,
    P: float = 1.0,
    out_path: str = None,
    workers: int = 1,
) -> list:
    """
    Slope heat map over relay and destination antenna counts

    Realization k of cell (r, d) is drawn from the seed sequence
    (seed, r, d, k), so cells are reproducible independently.

    Arguments:
        s (int): Source antennas
        t (int): Interferer antennas
        r_range (iterable): Relay antenna counts
        d_range (iterable): Destination antenna counts

    Keyword arguments:
        n_realizations (int): Channels averaged per cell
        sigma2 (float): Background noise power
        seed (int): Base seed
        P (float): Trace budget
        out_path (str): CSV destination; nothing is written when None
        workers (int): Worker threads

    Returns:
        list: Rows (r, d, i, avg_slope)

    """

    cells = list(itertools.product(r_range, d_range))
    logging.getLogger(__name__).info(
        'Slope map over %d cells, %d realizations each', len(cells),
        n_realizations,
    )

    def cell(rd):
        r, d = rd
        profile = AntennaProfile(s, d, r, t)
        channels = (
            random_channel(profile, sigma2, [seed, r, d, k])
            for k in range(n_realizations)
        )
        return average_slopes(channels, P, min(r, MAX_SLOPES))

    rows = []
    for (r, d), avg in zip(cells, parallel_map(cell, cells, workers)):
        rows.extend(
            (r, d, i, float(val)) for i, val in enumerate(avg, start=1)
        )
    if out_path is not None:
        write_csv(out_path, HEADER, rows)
    return rows
