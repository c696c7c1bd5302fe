"""Command-line interface for the Courant algebroid verification engine."""

import argparse
import json
import logging
import sys
import traceback

from . import __version__
from .errors import CourantVerifyError
from .library import EXPECTED_FAILURES, describe, list_examples, run_example
from .scenario import load, run
from .utils import DEFAULT_SAMPLES, DEFAULT_SEED, save_report

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def setup_logging(debug=False, log_file=None):
    """Configure logging; records go to stderr so stdout holds only the report."""
    level = logging.DEBUG if debug else logging.INFO
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=['text', 'json'], default='text', help='Report format on stdout')
    common.add_argument('--output', type=str, default=None, help='Write the JSON report to this file')
    common.add_argument(
        '--samples', type=int, default=None, help=f'Sample points per check (default {DEFAULT_SAMPLES})'
    )
    common.add_argument('--seed', type=int, default=None, help=f'Seed for sampling and fuzzing (default {DEFAULT_SEED})')
    common.add_argument('--debug', action='store_true', help='Enable debug logging')
    common.add_argument('--log-file', type=str, default=None, help='Also write the log to this file')

    parser = argparse.ArgumentParser(
        prog='courant-verify', description='Exact verification of Courant algebroids and pseudo-Dirac structures'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    verify = commands.add_parser('verify', parents=[common], help='Run the checks of a scenario file')
    verify.add_argument('file', help='Scenario file (JSON)')

    example = commands.add_parser('example', parents=[common], help='Run a shipped example')
    example.add_argument('name', help='Example name, see "list"')

    commands.add_parser('list', parents=[common], help='List the shipped examples')

    for command, text in (
        ('build-vbdirac', 'Build the VB-Dirac structure of a pseudo-connection and check it'),
        ('check-correspondence', 'Check the pseudo-connection / VB-Dirac correspondence'),
    ):
        sub = commands.add_parser(command, parents=[common], help=text)
        sub.add_argument('file', help='Scenario file (JSON)')
        sub.add_argument('--connection', required=True, help='Name of a pseudo-connection in the scenario')
    return parser


def print_examples(output_format):
    names = list_examples()
    if output_format == 'json':
        entries = [
            {"name": n, "description": describe(n), "expected_failures": EXPECTED_FAILURES.get(n, [])} for n in names
        ]
        print(json.dumps(entries, indent=2, sort_keys=True, ensure_ascii=False))
        return
    print("\n======= EXAMPLES =======")
    for name in names:
        print(f"{name:26} {describe(name)}")
        if name in EXPECTED_FAILURES:
            print(f"{'':26} designed to fail: {', '.join(EXPECTED_FAILURES[name])}")


def execute(args):
    if args.command == 'example':
        return run_example(args.name, args.samples, args.seed)
    scenario = load(args.file)
    if args.command == 'verify':
        return run(scenario, args.samples, args.seed)
    scenario.spec("connections", args.connection, ("--connection",))
    kind = 'vb_dirac' if args.command == 'build-vbdirac' else 'correspondence'
    checks = [{"name": args.command, "kind": kind, "params": {"connection": args.connection}}]
    return run(scenario, args.samples, args.seed, checks)


def main(argv=None):
    """Entry point for the command-line interface."""
    args = build_parser().parse_args(argv)
    setup_logging(args.debug, args.log_file)

    if args.command == 'list':
        print_examples(args.format)
        return EXIT_PASS

    try:
        report = execute(args)
    except CourantVerifyError as e:
        print(f"\nError: {e}", file=sys.stderr)
        if args.debug:
            traceback.print_exc()
        return EXIT_ERROR
    except Exception as e:
        print(f"\nCritical error before verification: {e}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_ERROR

    if args.format == 'json':
        print(report.to_json())
    else:
        print(report.render_text())

    if args.output:
        save_report(report.to_dict(), args.output)
        if args.format == 'text':
            print(f"\nDetailed report saved to: {args.output}")

    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
