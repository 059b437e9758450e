"""
MIMO relay channel instances

A realization holds the source-to-relay, source-to-destination,
interferer-to-relay and interferer-to-destination matrices together with
the background noise power and the interferer input covariance. Noise at
relay and destination is correlated through the common interferers.

"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import PreconditionError, ChannelFormatError
from . import linalg

MATRIX_NAMES = ('H_SR', 'H_SD', 'H_TR', 'H_TD', 'S_XT')


@dataclass(frozen=True)
class AntennaProfile:
    """
    Antenna counts at source (s), destination (d), relay (r) and the
    interferers taken together (t)

    """

    s: int
    d: int
    r: int
    t: int = 0

    def __post_init__(self):
        for name in ('s', 'd', 'r', 't'):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or isinstance(val, bool):
                raise PreconditionError(f"{name} must be an integer")
        if min(self.s, self.d, self.r) < 1 or self.t < 0:
            raise PreconditionError(
                f"Invalid antenna profile {self.as_tuple()}: need s, d, r "
                "at least 1 and t non-negative"
            )

    def as_tuple(self) -> tuple:
        return (self.s, self.d, self.r, self.t)

    @classmethod
    def parse(cls, text: str):
        """
        Build from a 's,d,r,t' string

        """

        try:
            vals = [int(v) for v in text.split(',')]
        except ValueError:
            raise PreconditionError(f"Bad antenna profile '{text}'")
        if len(vals) != 4:
            raise PreconditionError(
                f"Antenna profile needs four values s,d,r,t; got '{text}'"
            )
        return cls(*vals)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """
    One instance of the relay channel

    Attributes:
        H_SR (ndarray): Source to relay, r x s
        H_SD (ndarray): Source to destination, d x s
        H_TR (ndarray): Interferers to relay, r x t
        H_TD (ndarray): Interferers to destination, d x t
        sigma2 (float): Background noise power
        S_XT (ndarray): Interferer input covariance, t x t; identity when
            not given
        meta (dict): Free-form provenance (generator, seed, geometry)

    """

    H_SR: np.ndarray
    H_SD: np.ndarray
    H_TR: np.ndarray
    H_TD: np.ndarray
    sigma2: float = 1.0
    S_XT: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H_SR = np.atleast_2d(np.asarray(self.H_SR, dtype=complex))
        H_SD = np.atleast_2d(np.asarray(self.H_SD, dtype=complex))
        r, s = H_SR.shape
        d = H_SD.shape[0]
        if H_SD.shape[1] != s:
            raise PreconditionError(
                f"H_SD has {H_SD.shape[1]} columns, H_SR has {s}"
            )

        H_TR = np.asarray(self.H_TR, dtype=complex)
        H_TD = np.asarray(self.H_TD, dtype=complex)
        # t = 0 arrives in many empty shapes
        H_TR = np.zeros((r, 0), complex) if H_TR.size == 0 else H_TR
        H_TD = np.zeros((d, 0), complex) if H_TD.size == 0 else H_TD
        H_TR = np.atleast_2d(H_TR)
        H_TD = np.atleast_2d(H_TD)
        t = H_TR.shape[1]
        if H_TR.shape[0] != r or H_TD.shape != (d, t):
            raise PreconditionError(
                f"Interference matrices {H_TR.shape}, {H_TD.shape} do not "
                f"match r={r}, d={d}"
            )

        if not self.sigma2 > 0 or not math.isfinite(self.sigma2):
            raise PreconditionError(
                f"sigma2 must be positive and finite, got {self.sigma2}"
            )

        if self.S_XT is None:
            S_XT = np.eye(t, dtype=complex)
        else:
            S_XT = np.asarray(self.S_XT, dtype=complex).reshape(t, t)
            S_XT = linalg.hermitian(S_XT, 'S_XT', psd=True)

        object.__setattr__(self, 'H_SR', H_SR)
        object.__setattr__(self, 'H_SD', H_SD)
        object.__setattr__(self, 'H_TR', H_TR)
        object.__setattr__(self, 'H_TD', H_TD)
        object.__setattr__(self, 'S_XT', S_XT)
        object.__setattr__(self, 'sigma2', float(self.sigma2))

    @property
    def profile(self) -> AntennaProfile:
        r, s = self.H_SR.shape
        return AntennaProfile(
            s=s, d=self.H_SD.shape[0], r=r, t=self.H_TR.shape[1],
        )

    @property
    def H(self) -> np.ndarray:
        """Stacked source channel [H_SR; H_SD], (r+d) x s"""

        return np.vstack([self.H_SR, self.H_SD])

    @property
    def H_T(self) -> np.ndarray:
        """Stacked interferer channel [H_TR; H_TD], (r+d) x t"""

        return np.vstack([self.H_TR, self.H_TD])

    def with_sigma2(self, sigma2: float):
        """Copy of the realization at another noise power"""

        return replace(self, sigma2=sigma2, meta=dict(self.meta))

    def noise_covariance(self) -> np.ndarray:
        """Interference plus background noise, (r+d) x (r+d)"""

        r, d = self.H_SR.shape[0], self.H_SD.shape[0]
        return (
            interference_covariance(self)
            + self.sigma2 * np.eye(r + d)
        )

    def destination_noise(self) -> np.ndarray:
        """S_int^(2,2) + sigma2 I_d"""

        r = self.H_SR.shape[0]
        return self.noise_covariance()[r:, r:]

    def check_input(self, S_X, name: str = 'S_X') -> np.ndarray:
        """Validate a transmit covariance against this channel"""

        S_X = linalg.hermitian(S_X, name, psd=True)
        s = self.H_SR.shape[1]
        if S_X.shape != (s, s):
            raise PreconditionError(
                f"{name} must be {s} x {s}, got {S_X.shape}"
            )
        return S_X


@dataclass(frozen=True)
class RankProfile:
    """
    Ranks of the noiseless conditional covariances at the relay

    Attributes:
        r_prime (int): Rank of the noiseless relay covariance given the
            destination observation
        r_dprime (int): Same, additionally given the source input
        s_rank (int): Rank of the transmit covariance
        formula_r_prime (int): Generic-channel closed form of r_prime
        formula_r_dprime (int): Generic-channel closed form of r_dprime

    """

    r_prime: int
    r_dprime: int
    s_rank: int
    formula_r_prime: int
    formula_r_dprime: int

    @property
    def agrees(self) -> bool:
        return (
            self.r_prime == self.formula_r_prime
            and self.r_dprime == self.formula_r_dprime
        )

    @property
    def n_deterministic(self) -> int:
        return self.r_prime - self.r_dprime


def interference_covariance(ch: ChannelRealization) -> np.ndarray:
    """
    Covariance of the interference seen jointly at relay and destination

    Arguments:
        ch (ChannelRealization): Channel instance

    Returns:
        ndarray: [H_TR; H_TD] S_XT [H_TR; H_TD]^H, (r+d) x (r+d)

    """

    H_T = ch.H_T
    S = H_T @ ch.S_XT @ H_T.conj().T
    return 0.5 * (S + S.conj().T)


def joint_covariance(ch: ChannelRealization, S_X, noise: bool = True):
    """
    Covariance of the stacked vector (Y_R, Y_D, X)

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Keyword arguments:
        noise (bool): Include the background noise; the noiseless
            version describes the signal-plus-interference parts only

    Returns:
        ndarray: (r+d+s) x (r+d+s) Hermitian matrix

    """

    S_X = ch.check_input(S_X)
    H = ch.H
    n = H.shape[0]
    cov_Y = H @ S_X @ H.conj().T + interference_covariance(ch)
    if noise:
        cov_Y = cov_Y + ch.sigma2 * np.eye(n)
    cov_YX = H @ S_X
    joint = np.block([
        [cov_Y, cov_YX],
        [cov_YX.conj().T, S_X],
    ])
    return 0.5 * (joint + joint.conj().T)


def _schur_pd(M: np.ndarray, split: int) -> np.ndarray:
    """Schur complement of a positive definite lower-right block"""

    S_U = M[:split, :split]
    if split == M.shape[0]:
        return S_U.copy()
    S_UV = M[:split, split:]
    factor = scipy.linalg.cho_factor(M[split:, split:], lower=True)
    cond = S_U - S_UV @ scipy.linalg.cho_solve(factor, S_UV.conj().T)
    return 0.5 * (cond + cond.conj().T)


def conditional_covariances(ch: ChannelRealization, S_X):
    """
    Conditional covariances of the relay observation

    The covariance given Y_D is the Schur complement of the joint
    covariance of (Y_R, Y_D). Given (Y_D, X) the signal is known, so the
    joint of (Y_R, Y_D) reduces to interference plus noise; its Schur
    complement equals the conditional covariance computed from the full
    (Y_R, Y_D, X) joint and stays accurate when S_X is rank deficient.
    Both destination blocks are positive definite since sigma2 > 0.

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Returns:
        tuple: (S_{Y_R|Y_D}, S_{Y_R|Y_D,X}), each r x r

    """

    S_X = ch.check_input(S_X)
    r = ch.H_SR.shape[0]
    noise = ch.noise_covariance()
    H = ch.H
    cov_Y = H @ S_X @ H.conj().T + noise
    try:
        given_D = _schur_pd(cov_Y, r)
        given_DX = _schur_pd(noise, r)
    except np.linalg.LinAlgError as err:
        raise PreconditionError(f"Destination covariance not PD: {err}")
    return given_D, given_DX


def noiseless_rank_profile(ch: ChannelRealization, S_X) -> RankProfile:
    """
    Ranks of the noiseless relay conditional covariances

    Computes the ranks numerically from the noise-free joint covariance
    and compares them with the generic closed forms
    r' = min(r, (s^r + t - d)^+) and r'' = min(r, (t - d)^+).
    Disagreement is logged, not raised.

    Arguments:
        ch (ChannelRealization): Channel instance
        S_X (ndarray): Transmit covariance

    Returns:
        RankProfile

    """

    log = logging.getLogger(__name__)

    S_X = ch.check_input(S_X)
    prof = ch.profile
    r, d, t = prof.r, prof.d, prof.t

    joint = joint_covariance(ch, S_X, noise=False)
    scale = np.abs(np.linalg.eigvalsh(joint[:r, :r])).max()

    n_Y = joint.shape[0] - prof.s
    given_D = linalg.conditional_covariance(joint[:n_Y, :n_Y], r)
    given_DX = linalg.conditional_covariance(joint, r)

    s_rank = linalg.numeric_rank(S_X, 1e-9)
    r_prime = linalg.numeric_rank(given_D, scale=scale)
    r_dprime = linalg.numeric_rank(given_DX, scale=scale)

    f_prime = min(r, max(s_rank + t - d, 0))
    f_dprime = min(r, max(t - d, 0))

    out = RankProfile(
        r_prime=r_prime,
        r_dprime=r_dprime,
        s_rank=s_rank,
        formula_r_prime=f_prime,
        formula_r_dprime=f_dprime,
    )
    if not out.agrees:
        log.warning(
            "Numeric ranks (r'=%d, r''=%d) differ from generic formulas "
            "(r'=%d, r''=%d) for profile %s",
            r_prime, r_dprime, f_prime, f_dprime, prof.as_tuple(),
        )
    return out


def format_channel(ch: ChannelRealization) -> str:
    """
    Render a realization in the plain-text channel format

    Header line 's d r t sigma2', then each matrix as 'name rows cols'
    followed by its rows of 're,im' pairs.

    """

    prof = ch.profile
    lines = [
        f"{prof.s} {prof.d} {prof.r} {prof.t} {float(ch.sigma2)!r}",
    ]
    for name in MATRIX_NAMES:
        mat = getattr(ch, name)
        rows, cols = mat.shape
        lines.append(f"{name} {rows} {cols}")
        for row in mat:
            lines.append(' '.join(
                f"{float(val.real)!r},{float(val.imag)!r}" for val in row
            ))
    return '\n'.join(lines) + '\n'


def parse_channel(text: str) -> ChannelRealization:
    """
    Parse the plain-text channel format

    Blank lines and '#' comments are ignored. S_XT may be omitted, in
    which case it defaults to the identity.

    Raises:
        ChannelFormatError: Malformed header, matrix block or entry

    """

    tokens = []
    for line in text.splitlines():
        line = line.split('#', 1)[0]
        tokens.extend(line.split())

    if len(tokens) < 5:
        raise ChannelFormatError("Missing header 's d r t sigma2'")
    try:
        s, d, r, t = (int(tok) for tok in tokens[:4])
        sigma2 = float(tokens[4])
    except ValueError:
        raise ChannelFormatError(f"Bad header: {' '.join(tokens[:5])}")

    expected = {
        'H_SR': (r, s),
        'H_SD': (d, s),
        'H_TR': (r, t),
        'H_TD': (d, t),
        'S_XT': (t, t),
    }
    mats = {}
    pos = 5
    while pos < len(tokens):
        if pos + 3 > len(tokens):
            raise ChannelFormatError("Truncated matrix header")
        name = tokens[pos]
        if name not in expected:
            raise ChannelFormatError(f"Unknown matrix '{name}'")
        if name in mats:
            raise ChannelFormatError(f"Duplicate matrix '{name}'")
        try:
            rows, cols = int(tokens[pos + 1]), int(tokens[pos + 2])
        except ValueError:
            raise ChannelFormatError(f"Bad shape for '{name}'")
        if (rows, cols) != expected[name]:
            raise ChannelFormatError(
                f"'{name}' is {rows} x {cols}, expected {expected[name]}"
            )
        pos += 3
        n = rows * cols
        entries = tokens[pos:pos + n]
        if len(entries) != n:
            raise ChannelFormatError(f"Truncated entries for '{name}'")
        vals = []
        for entry in entries:
            try:
                re_part, im_part = entry.split(',')
                vals.append(complex(float(re_part), float(im_part)))
            except ValueError:
                raise ChannelFormatError(
                    f"Bad entry '{entry}' in '{name}'"
                )
        mats[name] = np.array(vals, dtype=complex).reshape(rows, cols)
        pos += n

    missing = [name for name in MATRIX_NAMES[:4] if name not in mats]
    if missing:
        raise ChannelFormatError(f"Missing matrices: {', '.join(missing)}")

    try:
        return ChannelRealization(
            sigma2=sigma2,
            S_XT=mats.get('S_XT'),
            **{name: mats[name] for name in MATRIX_NAMES[:4]},
        )
    except PreconditionError as err:
        raise ChannelFormatError(str(err))


def read_channel(path: str) -> ChannelRealization:
    """Read a realization from a channel text file"""

    logging.getLogger(__name__).debug('Reading channel from %s', path)
    with open(path, 'r') as fid:
        return parse_channel(fid.read())


def write_channel(ch: ChannelRealization, path: str) -> None:
    """Write a realization to a channel text file"""

    logging.getLogger(__name__).debug('Writing channel to %s', path)
    with open(path, 'w') as fid:
        fid.write(format_channel(ch))
