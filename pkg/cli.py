#!/usr/bin/env python3
"""curekit - Command Line Interface

Nonparametric mixture cure model estimation, bandwidth selection and tests
on right-censored data read from CSV files.
"""

import sys
import json
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Tuple

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from curekit.errors import CureKitError, UsageError
from curekit.orchestrator import RunConfig, run_command

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that reports bad arguments as UsageError."""

    def error(self, message: str):
        raise UsageError(message, self.prog)


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pair(text: str) -> Tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return values


def _x0_grid(text: str) -> Tuple[float, float, int]:
    values = _floats(text)
    if len(values) != 3 or values[2] != int(values[2]):
        raise argparse.ArgumentTypeError(f"expected LO,HI,N with integer N, got {text!r}")
    return values[0], values[1], int(values[2])


def configure_logging(debug: bool) -> None:
    if debug:
        logging.basicConfig(level=logging.DEBUG, format='[%(levelname)s] %(message)s', force=True)
    else:
        logging.basicConfig(level=logging.INFO, format='%(message)s', force=True)


def report_error(error: CureKitError) -> None:
    """Single machine-parsable diagnostic line on stderr."""
    print(
        f"error code={error.exit_code} kind={type(error).__name__} "
        f"operation={error.operation or '-'} message={json.dumps(error.message)}",
        file=sys.stderr,
    )


def build_run_config(args: argparse.Namespace) -> RunConfig:
    control = {
        'B': args.B,
        'hbound': args.hbound,
        'hl': args.hl,
        'hsave': True if args.hsave else None,
        'nnfrac': args.nnfrac,
        'fpilot': args.fpilot,
        'qt': args.qt,
        'hsmooth': args.hsmooth,
        'seed': args.seed,
        'workers': args.workers,
    }
    return RunConfig(
        subcommand=args.command,
        input=getattr(args, 'input', None),
        x_col=getattr(args, 'x', 'x'),
        t_col=getattr(args, 't', 't'),
        d_col=getattr(args, 'd', 'd'),
        categorical=True if getattr(args, 'categorical', False) else None,
        x0=getattr(args, 'x0', None),
        x0_grid=getattr(args, 'x0_grid', None),
        h=getattr(args, 'h', None),
        local=getattr(args, 'local', True),
        conflevel=getattr(args, 'conflevel', None),
        testim=getattr(args, 'testim', None),
        n=getattr(args, 'n', None),
        output_format=args.format,
        output=args.output,
        config_path=args.config,
        control={k: v for k, v in control.items() if v is not None},
    )


def cmd_run(args: argparse.Namespace) -> int:
    """Execute one subcommand.

    Returns:
        Exit code (0 for success, the error class code otherwise)
    """
    configure_logging(args.debug)
    try:
        text = run_command(build_run_config(args))
        if not args.output:
            sys.stdout.write(text)
        return 0
    except CureKitError as e:
        report_error(e)
        if args.debug:
            logger.exception("Failure details")
        return e.exit_code
    except KeyboardInterrupt:
        print("error code=130 kind=KeyboardInterrupt operation=- message=\"interrupted\"", file=sys.stderr)
        return 130


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='YAML file with control parameters')
    parser.add_argument('--seed', type=int, help='Random seed (default: CUREKIT_SEED or fresh entropy)')
    parser.add_argument('--workers', type=int, help='Worker threads (default: CUREKIT_WORKERS or min(cpu, 4))')
    parser.add_argument('--format', choices=['csv', 'json', 'text'], default='csv', help='Output format')
    parser.add_argument('--output', help='Output file (default: stdout)')
    parser.add_argument('--debug', action='store_true', help='Enable debug output')
    parser.add_argument('--B', type=int, help='Bootstrap resamples (default 999)')
    parser.add_argument('--hbound', type=_pair, help='Grid bounds LO,HI as multiples of the standardized IQR')
    parser.add_argument('--hl', type=int, help='Number of grid bandwidths')
    parser.add_argument('--hsave', action='store_true', help='Keep the grid and criterion values (testcov: bootstrap statistics) in the output')
    parser.add_argument('--nnfrac', type=float, help='Nearest-neighbor fraction for the pilot bandwidth')
    parser.add_argument('--fpilot', help='Name of a registered pilot bandwidth procedure')
    parser.add_argument('--qt', type=float, help='Quantile of the observed times bounding the MISE integral')
    parser.add_argument('--hsmooth', type=int, help='Moving-average window for selected bandwidths')


def add_data_arguments(parser: argparse.ArgumentParser, categorical: bool = False) -> None:
    parser.add_argument('--input', required=True, help='CSV file with a header row')
    parser.add_argument('--x', default='x', help='Covariate column')
    parser.add_argument('--t', default='t', help='Observed time column')
    parser.add_argument('--d', default='d', help='Uncensoring indicator column (1 = event)')
    if categorical:
        parser.add_argument('--categorical', action='store_true', help='Treat the covariate as categorical')


def add_grid_arguments(parser: argparse.ArgumentParser) -> None:
    grid = parser.add_mutually_exclusive_group()
    grid.add_argument('--x0', type=_floats, help='Covariate values X1,X2,...')
    grid.add_argument('--x0-grid', dest='x0_grid', type=_x0_grid,
                      help='Equally spaced grid between covariate quantiles LO,HI,N (default 0.05,0.95,100)')


def add_estimate_arguments(parser: argparse.ArgumentParser, times: bool) -> None:
    parser.add_argument('--h', type=_floats, help='Bandwidth(s); selected from the data when omitted')
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument('--local', dest='local', action='store_true', default=True,
                      help='One bandwidth per x0 point (default)')
    mode.add_argument('--global', dest='local', action='store_false', help='A single bandwidth for all points')
    parser.add_argument('--conflevel', type=float, help='Confidence level for bootstrap intervals')
    if times:
        parser.add_argument('--testim', type=_floats, help='Evaluation times T1,T2,... (default: observed times)')


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = ArgumentParser(
        prog='curekit',
        description='curekit - nonparametric mixture cure models for right-censored data',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Cure probability with bootstrap bandwidths and 95% intervals
  python cli.py probcure --input bmt.csv --x z1 --t t2 --d d3 --conflevel 0.95 --seed 1

  # Test for sufficient follow-up
  python cli.py testmz --input bmt.csv --x z1 --t t2 --d d3

  # Stratified unconditional cure rate
  python cli.py kmcure --input bmt.csv --x z3 --t t2 --d d3

  # Simulated sample plus true-function sidecar
  python cli.py simulate --n 200 --seed 7 --output sim.csv
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands', parser_class=ArgumentParser)

    estimators = {
        'beran': ('Conditional survival function (Beran estimator)', True),
        'probcure': ('Conditional cure probability', False),
        'latency': ('Latency (survival of the uncured)', True),
    }
    for name, (help_text, times) in estimators.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        add_data_arguments(sub)
        add_grid_arguments(sub)
        add_estimate_arguments(sub, times)
        add_common_arguments(sub)
        sub.set_defaults(func=cmd_run)

    selectors = {
        'berancv': 'Cross-validation bandwidths for the Beran estimator',
        'probcure-hboot': 'Bootstrap bandwidths for the cure probability',
        'latency-hboot': 'Bootstrap bandwidths for the latency',
    }
    for name, help_text in selectors.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        add_data_arguments(sub)
        add_grid_arguments(sub)
        add_common_arguments(sub)
        sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser('testcov', help='Covariate significance test for the cure rate')
    add_data_arguments(sub, categorical=True)
    add_common_arguments(sub)
    sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser('testmz', help='Maller-Zhou test of sufficient follow-up')
    add_data_arguments(sub)
    add_common_arguments(sub)
    sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser('kmcure', help='Unconditional cure rate per level of a categorical column')
    add_data_arguments(sub)
    add_common_arguments(sub)
    sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser('simulate', help='Draw a sample from the logistic/Weibull cure model')
    sub.add_argument('--n', type=int, required=True, help='Sample size')
    add_common_arguments(sub)
    sub.set_defaults(func=cmd_run)

    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        report_error(e)
        return e.exit_code

    if not args.command:
        parser.print_help()
        return 1

    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
