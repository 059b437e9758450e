import logging
import sys
import math
import argparse
import dataclasses

import numpy as np

from .. import STREAM, NAME, __version__
from ..channel import AntennaProfile, format_channel, read_channel, write_channel
from ..dof import (
    dof_report,
    empirical_dof,
    relay_gain_evaluator,
)
from ..errors import AuditViolation, NumericalError, PreconditionError
from ..scenario import CellularConfig, generate_scenario, load_config, random_channel
from ..utils import parse_grid, parse_range, write_csv
from . import utils
from .audit import run_gap_audit
from .slope_map import run_slope_map
from .sweep import run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_AUDIT = 3

DEFAULT_PROFILE = '2,3,3,4'


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scenario_config(args) -> CellularConfig:
    cfg = load_config(args.config) if args.config else CellularConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _channel(args):
    """Channel from --channel, else a generated scenario; with its budget"""

    if getattr(args, 'channel', None):
        ch = read_channel(args.channel)
        P = args.power if args.power is not None else 1.0
    else:
        cfg = _scenario_config(args)
        ch = generate_scenario(cfg, AntennaProfile.parse(args.profile))
        P = args.power if args.power is not None else cfg.tx_power_watts
    if args.sigma2 is not None:
        ch = ch.with_sigma2(args.sigma2)
    return ch, P


def _sweep(args, settings):
    ch, P = _channel(args)
    out = utils.output_path(settings, args.out, 'sweep.csv')
    rows = run_sweep(
        ch, P, parse_grid(args.c0_grid), out_path=out, workers=args.parallel,
    )
    print(f"Wrote {len(rows)} rows to {out}")


def _gap_audit(args, settings):
    out = utils.output_path(settings, args.out, 'gap_audit.csv')
    try:
        _, summary = run_gap_audit(
            args.trials,
            seed=args.seed or 0,
            out_path=out,
            P=args.power if args.power is not None else 1.0,
            max_antennas=args.max_antennas,
            c0_max=args.c0_max,
            workers=args.parallel,
        )
    except AuditViolation as err:
        print(f"Gap audit failed: {err}")
        raise
    print(summary.format())


def _slope_map(args, settings):
    out = utils.output_path(settings, args.out, 'slope_map.csv')
    rows = run_slope_map(
        args.s,
        args.t,
        parse_range(args.r_range),
        parse_range(args.d_range),
        n_realizations=args.realizations,
        sigma2=args.sigma2 if args.sigma2 is not None else 1.0,
        seed=args.seed or 0,
        P=args.power if args.power is not None else 1.0,
        out_path=out,
        workers=args.parallel,
    )
    print(f"Wrote {len(rows)} rows to {out}")


def _dof(args, settings):
    profile = AntennaProfile.parse(args.profile)
    if args.channel:
        ch = read_channel(args.channel)
    else:
        ch = random_channel(profile, rng=args.seed or 0)
    profile = ch.profile
    P = args.power if args.power is not None else 1.0
    report = dof_report(profile, args.alpha)

    def estimate(alpha, scheme, baseline=True):
        evaluator = relay_gain_evaluator(
            ch, P, alpha, scheme=scheme, baseline=baseline,
        )
        return empirical_dof(evaluator, args.rho_lo, args.rho_hi)

    rows = [
        ('dof_dest', report.dof_dest,
         estimate(0.0, 'joint', baseline=False)),
        ('dof_relay_inf', report.dof_relay_inf,
         estimate(math.inf, 'joint', baseline=False)),
        ('dof_gain_opt', report.dof_gain_opt, estimate(args.alpha, 'joint')),
        ('dof_gain_iid', report.dof_gain_iid, estimate(args.alpha, 'iid')),
        ('dof_gain_combiner', report.dof_gain_opt,
         estimate(args.alpha, 'combiner')),
        ('n_det_components', report.n_det_components, ''),
        ('combiner_rows', report.combiner_rows, ''),
    ]
    print(f"profile s,d,r,t = {profile.as_tuple()}, alpha = {args.alpha}")
    print(f"{'quantity':<20} {'formula':>10} {'secant':>10}")
    for name, formula, secant in rows:
        secant = f"{secant:.4f}" if secant != '' else '-'
        print(f"{name:<20} {formula!s:>10} {secant:>10}")
    if args.out:
        write_csv(args.out, ['quantity', 'formula', 'secant'], rows)


def _gen_scenario(args, settings):
    cfg = _scenario_config(args)
    ch = generate_scenario(cfg, AntennaProfile.parse(args.profile))
    if args.sigma2 is not None:
        ch = ch.with_sigma2(args.sigma2)
    if args.out:
        write_channel(ch, args.out)
        print(f"Wrote scenario to {args.out}")
    else:
        sys.stdout.write(format_channel(ch))


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='Random seed')
    common.add_argument('--config', help='Scenario key=value file')
    common.add_argument('--out', help='Output file')
    common.add_argument(
        '--profile',
        default=DEFAULT_PROFILE,
        help='Antenna counts s,d,r,t',
    )
    common.add_argument('--parallel', type=int, help='Worker threads')
    common.add_argument(
        '--loglevel',
        type=int,
        default=30,
        help='Set logging level',
    )
    common.add_argument('--power', type=float, help='Source power budget')
    common.add_argument('--sigma2', type=float, help='Background noise power')

    parser = ArgumentParser(prog=NAME.lower())
    parser.add_argument(
        '--version', action='version', version=f"%(prog)s {__version__}",
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sweep = sub.add_parser('sweep', parents=[common], help='Rate vs c0')
    sweep.add_argument('--channel', help='Channel text file')
    sweep.add_argument(
        '--c0-grid',
        default='0:10:1',
        help='Capacities lo:hi:step in bits',
    )
    sweep.set_defaults(func=_sweep)

    audit = sub.add_parser(
        'gap-audit', parents=[common], help='Constant-gap audit',
    )
    audit.add_argument('--trials', type=int, default=200)
    audit.add_argument('--max-antennas', type=int, default=4)
    audit.add_argument('--c0-max', type=float, default=10.0)
    audit.set_defaults(func=_gap_audit)

    slope = sub.add_parser(
        'slope-map', parents=[common], help='Average slope heat map',
    )
    slope.add_argument('--s', type=int, default=5)
    slope.add_argument('--t', type=int, default=18)
    slope.add_argument('--r-range', default='1:10')
    slope.add_argument('--d-range', default='1:20')
    slope.add_argument('--realizations', type=int, default=100)
    slope.set_defaults(func=_slope_map)

    dof = sub.add_parser('dof', parents=[common], help='DoF formulas')
    dof.add_argument('--channel', help='Channel text file')
    dof.add_argument('--alpha', type=float, default=math.inf)
    dof.add_argument('--rho-lo', type=float, default=1e5)
    dof.add_argument('--rho-hi', type=float, default=1e7)
    dof.set_defaults(func=_dof)

    gen = sub.add_parser(
        'gen-scenario', parents=[common], help='Write a scenario channel',
    )
    gen.set_defaults(func=_gen_scenario)
    return parser


def main(argv=None) -> int:
    """
    Run one subcommand

    Returns:
        int: 0 success, 1 usage error, 2 numerical failure, 3 audit
            violation

    """

    log = logging.getLogger(__name__)

    args = build_parser().parse_args(argv)
    STREAM.setLevel(args.loglevel)

    try:
        settings = utils.load_settings()
        if args.parallel is None:
            args.parallel = settings['parallel']
        args.func(args, settings)
    except AuditViolation as err:
        log.error('%s', err)
        return EXIT_AUDIT
    except (NumericalError, np.linalg.LinAlgError) as err:
        log.error('Numerical failure: %s', err)
        print(f"Numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PreconditionError, OSError) as err:
        log.error('%s', err)
        print(f"Error: {err}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cli():
    sys.exit(main())


if __name__ == '__main__':
    cli()
