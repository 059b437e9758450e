"""
Rate versus relay link capacity

"""

import logging
from dataclasses import dataclass, astuple, fields

import numpy as np

from ..channel import ChannelRealization
from ..inputs import cutset_bound, waterfilling_input
from ..optimizer import OptimizerOptions, constant_gap_rate, rate_curve
from ..quantizer import fixed_input_rate, iid_rate
from ..utils import parallel_map, write_csv

RATE_SLACK = 1e-6


@dataclass(frozen=True)
class SweepRow:
    """
    Rates in bits at one relay link capacity

    Attributes:
        c0 (float): Relay link capacity
        cutset (float): Cut-set bound
        cf_joint (float): Jointly optimized S_X and S_Q
        cf_wf_sd (float): Water-filling to the direct link, optimal S_Q
        cf_wf_srd (float): Water-filling to the pooled receiver, optimal
            S_Q
        cf_iid_q (float): S_Q = q I with q meeting the link budget, at
            the jointly optimized S_X
        cf_constant_gap (float): Cut-set input with the constant-gap
            quantizer

    """

    c0: float
    cutset: float
    cf_joint: float
    cf_wf_sd: float
    cf_wf_srd: float
    cf_iid_q: float
    cf_constant_gap: float

    @classmethod
    def header(cls) -> list:
        return [fld.name for fld in fields(cls)]

    def violations(self) -> list:
        """Invariant breaches of this row, as messages"""

        out = []
        schemes = self.header()[2:]
        for name in schemes:
            val = getattr(self, name)
            if val > self.cutset + RATE_SLACK:
                out.append(f"{name}={val!r} above cutset={self.cutset!r}")
        for name in schemes[1:]:
            val = getattr(self, name)
            if self.cf_joint < val - RATE_SLACK:
                out.append(f"cf_joint={self.cf_joint!r} below {name}={val!r}")
        return out


def run_sweep(
    ch: ChannelRealization,
    P: float,
    c0_grid,
    out_path: str = None,
    opts: OptimizerOptions = None,
    workers: int = 1,
) -> list:
    """
    Sweep every scheme over a grid of link capacities

    The cut-set bound and the baselines are independent per grid point
    and run on the worker pool; the joint curve runs in order so each
    point starts from its predecessor.

    Arguments:
        ch (ChannelRealization): Channel instance
        P (float): Trace budget
        c0_grid (iterable): Link capacities in bits

    Keyword arguments:
        out_path (str): CSV destination; nothing is written when None
        opts (OptimizerOptions): Solver settings
        workers (int): Worker threads

    Returns:
        list: SweepRow per grid point, sorted by c0

    """

    log = logging.getLogger(__name__)

    grid = np.sort(np.asarray(list(c0_grid), dtype=float))
    if opts is None:
        opts = OptimizerOptions()
    cfg = opts.input_config(P)
    log.info('Sweeping %d capacities on profile %s', grid.size, ch.profile)

    cutsets = parallel_map(
        lambda c0: cutset_bound(ch, P, c0, cfg), grid, workers,
    )
    S_wf_sd = waterfilling_input(ch.H_SD, ch.destination_noise(), P)
    S_wf_srd = waterfilling_input(ch.H, ch.noise_covariance(), P)
    baselines_inputs = [S_wf_sd, S_wf_srd]

    curve = rate_curve(
        ch, P, grid, opts,
        extra_inits=baselines_inputs,
        point_inits=[[cs.S_X] for cs in cutsets],
    )

    def baselines(idx):
        c0, cs = grid[idx], cutsets[idx]
        S_joint = curve[idx].meta['result'].S_X
        iid = iid_rate(ch, S_joint, c0)[0]
        return (
            fixed_input_rate(ch, S_wf_sd, c0)[0],
            fixed_input_rate(ch, S_wf_srd, c0)[0],
            iid,
            constant_gap_rate(ch, P, c0, cfg, cutset=cs),
        )

    others = parallel_map(baselines, range(grid.size), workers)

    rows = []
    for c0, cs, point, extra in zip(grid, cutsets, curve, others):
        row = SweepRow(float(c0), cs.value, point.rate, *extra)
        for msg in row.violations():
            log.warning('Sweep row at c0=%g: %s', c0, msg)
        rows.append(row)

    if out_path is not None:
        write_csv(out_path, SweepRow.header(), (astuple(row) for row in rows))
    return rows
