"""
Picocell downlink scenarios

A serving BS at the origin transmits to a user bs_user_dist_m away. A
relay sits relay_user_dist_m from the user and interfering BSs occupy a
hexagonal lattice. Link gains combine path loss, lognormal shadowing and
Rayleigh fading, and are normalized by the noise power.

"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import AntennaProfile, ChannelRealization
from .errors import ConfigError, PreconditionError
from .utils import config_from_mapping, parse_key_value

GENERATOR = 'PCG64'


@dataclass(frozen=True)
class CellularConfig:
    """
    Picocell scenario settings

    Attributes:
        tx_power_watts (float): Per-BS transmit power, also the trace
            budget P of the source
        bandwidth_hz (float): System bandwidth
        noise_psd_dbm_hz (float): Background noise spectral density
        bs_user_dist_m (float): Serving BS to user distance
        relay_user_dist_m (float): Relay to user distance
        bs_grid_spacing_m (float): Minimum BS-to-BS distance
        shadowing_sigma_db (float): Lognormal shadowing deviation
        pathloss_a (float): Path loss at 1 km in dB
        pathloss_b (float): Path loss slope in dB per decade
        n_interferers (int): Active interfering BSs
        antennas_per_interferer (int): Antennas at each interfering BS
        relay_angle_deg (float): Relay bearing from the user, measured
            from the user-to-BS direction
        seed (int): Generator seed

    """

    tx_power_watts: float = 1.0
    bandwidth_hz: float = 1e7
    noise_psd_dbm_hz: float = -174.0
    bs_user_dist_m: float = 100.0
    relay_user_dist_m: float = 10.0
    bs_grid_spacing_m: float = 200.0
    shadowing_sigma_db: float = 10.0
    pathloss_a: float = 140.7
    pathloss_b: float = 36.7
    n_interferers: int = 4
    antennas_per_interferer: int = 1
    relay_angle_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        positive = (
            'tx_power_watts', 'bandwidth_hz', 'bs_user_dist_m',
            'relay_user_dist_m', 'bs_grid_spacing_m',
        )
        for name in positive:
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be positive, got {val}")
        if not self.shadowing_sigma_db >= 0:
            raise ConfigError("shadowing_sigma_db must be non-negative")
        if self.n_interferers < 0:
            raise ConfigError("n_interferers must be non-negative")
        if self.antennas_per_interferer < 1:
            raise ConfigError("antennas_per_interferer must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned int")

    @property
    def interferer_antennas(self) -> int:
        return self.n_interferers * self.antennas_per_interferer


def load_config(path: str) -> CellularConfig:
    """
    Read a CellularConfig from a flat key=value file

    Raises:
        ConfigError: Unknown keys or malformed values

    """

    logging.getLogger(__name__).debug('Loading scenario config %s', path)
    with open(path, 'r') as fid:
        mapping = parse_key_value(fid.read(), source=path)
    return config_from_mapping(CellularConfig, mapping)


def pathloss_db(d_km: float, a: float = 140.7, b: float = 36.7) -> float:
    """
    Path loss a + b log10(d_km) in dB

    Raises:
        PreconditionError: Non-positive distance

    """

    if not d_km > 0:
        raise PreconditionError(f"Distance must be positive, got {d_km}")
    return a + b * math.log10(d_km)


def noise_power_w(cfg: CellularConfig) -> float:
    """Noise power over the band in watts"""

    return 10.0 ** ((cfg.noise_psd_dbm_hz - 30.0) / 10.0) * cfg.bandwidth_hz


def link_gain_db(
    cfg: CellularConfig,
    dist_m: float,
    rng: np.random.Generator,
) -> float:
    """Path loss with one shadowing draw, as a gain in dB"""

    shadow = rng.normal(0.0, cfg.shadowing_sigma_db)
    return -pathloss_db(dist_m / 1e3, cfg.pathloss_a, cfg.pathloss_b) + shadow


def node_positions(cfg: CellularConfig) -> dict:
    """
    Serving BS, user and relay coordinates in meters

    """

    user = np.array([cfg.bs_user_dist_m, 0.0])
    # Bearing 0 points from the user back toward the BS
    angle = math.pi + math.radians(cfg.relay_angle_deg)
    relay = user + cfg.relay_user_dist_m * np.array(
        [math.cos(angle), math.sin(angle)]
    )
    return {'bs': np.zeros(2), 'user': user, 'relay': relay}


def hex_sites(cfg: CellularConfig, user) -> np.ndarray:
    """
    Interfering BS positions

    The n_interferers lattice sites nearest the user, excluding the
    serving BS at the origin; ties go to the smaller bearing.

    Returns:
        ndarray: n_interferers x 2

    """

    count = cfg.n_interferers
    if count == 0:
        return np.zeros((0, 2))
    spacing = cfg.bs_grid_spacing_m
    a1 = spacing * np.array([1.0, 0.0])
    a2 = spacing * np.array([0.5, math.sqrt(3.0) / 2.0])

    rings = 1
    while True:
        idx = np.arange(-rings, rings + 1)
        ii, jj = np.meshgrid(idx, idx, indexing='ij')
        keep = (np.abs(ii) + np.abs(jj) + np.abs(ii + jj)) > 0
        sites = (
            ii[keep][:, None] * a1[None, :]
            + jj[keep][:, None] * a2[None, :]
        )
        offset = sites - np.asarray(user)[None, :]
        dist = np.hypot(offset[:, 0], offset[:, 1])
        bearing = np.mod(np.arctan2(offset[:, 1], offset[:, 0]), 2 * math.pi)
        order = np.lexsort((np.round(bearing, 12), np.round(dist, 6)))
        # Sites inside this radius are complete for the current rings
        covered = rings * spacing * math.sqrt(3.0) / 2.0 - np.hypot(*user)
        if dist[order[count - 1]] <= covered or rings > 64:
            return sites[order[:count]]
        rings += 1


def _rayleigh(rng: np.random.Generator, shape) -> np.ndarray:
    return (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ) / math.sqrt(2.0)


def generate_scenario(
    cfg: CellularConfig,
    profile: AntennaProfile,
) -> ChannelRealization:
    """
    Draw one picocell realization

    Arguments:
        cfg (CellularConfig): Scenario settings
        profile (AntennaProfile): Antenna counts; t must equal
            n_interferers * antennas_per_interferer

    Returns:
        ChannelRealization: Gains normalized so that sigma2 = 1; the
            source budget is P = tx_power_watts

    """

    log = logging.getLogger(__name__)

    if profile.t != cfg.interferer_antennas:
        raise PreconditionError(
            f"Profile has t={profile.t} but config gives "
            f"{cfg.n_interferers} x {cfg.antennas_per_interferer} "
            "interferer antennas"
        )

    rng = np.random.default_rng(cfg.seed)
    noise_w = noise_power_w(cfg)
    nodes = node_positions(cfg)
    sites = hex_sites(cfg, nodes['user'])

    def link(src, dst, n_rx, n_tx):
        dist = float(np.hypot(*(dst - src)))
        gain = link_gain_db(cfg, dist, rng)
        amp = math.sqrt(10.0 ** (gain / 10.0) / noise_w)
        return amp * _rayleigh(rng, (n_rx, n_tx))

    s, d, r, t = profile.as_tuple()
    H_SR = link(nodes['bs'], nodes['relay'], r, s)
    H_SD = link(nodes['bs'], nodes['user'], d, s)
    ants = cfg.antennas_per_interferer
    H_TR = np.zeros((r, t), complex)
    H_TD = np.zeros((d, t), complex)
    for k, site in enumerate(sites):
        cols = slice(k * ants, (k + 1) * ants)
        H_TR[:, cols] = link(site, nodes['relay'], r, ants)
        H_TD[:, cols] = link(site, nodes['user'], d, ants)

    log.debug(
        'Scenario seed=%d profile=%s noise=%.3e W', cfg.seed,
        profile.as_tuple(), noise_w,
    )
    return ChannelRealization(
        H_SR=H_SR,
        H_SD=H_SD,
        H_TR=H_TR,
        H_TD=H_TD,
        sigma2=1.0,
        S_XT=(cfg.tx_power_watts / ants) * np.eye(t),
        meta={
            'generator': GENERATOR,
            'seed': cfg.seed,
            'noise_power_w': noise_w,
            'power': cfg.tx_power_watts,
            'positions': {
                **{key: val.tolist() for key, val in nodes.items()},
                'interferers': sites.tolist(),
            },
        },
    )


def random_channel(
    profile: AntennaProfile,
    sigma2: float = 1.0,
    rng=None,
    sxt_scale: float = 1.0,
) -> ChannelRealization:
    """
    Channel with i.i.d. CN(0, 1) entries

    Arguments:
        profile (AntennaProfile): Antenna counts

    Keyword arguments:
        sigma2 (float): Background noise power
        rng (Generator or int): Random source or seed
        sxt_scale (float): Interferer covariance is sxt_scale * I

    Returns:
        ChannelRealization

    """

    rng = np.random.default_rng(rng)
    s, d, r, t = profile.as_tuple()
    return ChannelRealization(
        H_SR=_rayleigh(rng, (r, s)),
        H_SD=_rayleigh(rng, (d, s)),
        H_TR=_rayleigh(rng, (r, t)),
        H_TD=_rayleigh(rng, (d, t)),
        sigma2=sigma2,
        S_XT=sxt_scale * np.eye(t),
        meta={'generator': GENERATOR},
    )
