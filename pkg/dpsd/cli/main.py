# Copyright (c) 2026, the dpsd authors
import sys
import logging
import argparse
import typing
from dpsd.database.store_format import StoreFormatError
from dpsd.cli.run_config import Command, RunConfig, from_args
from dpsd.cli.commands import cmd_gen, cmd_build, cmd_query, cmd_audit, cmd_bench, \
    EXIT_OK, EXIT_VALIDATION, EXIT_IO

COMMANDS = {
    Command.GEN: cmd_gen,
    Command.BUILD: cmd_build,
    Command.QUERY: cmd_query,
    Command.AUDIT: cmd_audit,
    Command.BENCH: cmd_bench
}


def make_parser() -> argparse.ArgumentParser:
    """
    Every flag defaults to None so unset flags fall through to the config file and then the defaults
    """
    parser = argparse.ArgumentParser(
        prog='dpsd',
        description="Differentially private sketches for Hamming and edit distance queries over a string database."
    )
    parser.add_argument('command', choices=[command.name.lower() for command in Command],
                        help="gen: write a random corpus; build: build a store from a corpus; "
                             "query: estimate distances to a store; audit: check the sensitivity bound; "
                             "bench: time a doubling grid of sizes")
    parser.add_argument('--config', help="YAML file of flag values, keys are the long flag names")
    parser.add_argument('--input', help="Corpus file for build, store file for query and audit")
    parser.add_argument('--output', help="Output file")
    parser.add_argument('--query', help="File of query strings, one per line")
    parser.add_argument('--truth', help="Truth sidecar of exact distances, JSON lines of {index, distance}")
    parser.add_argument('--n', type=int, help="String length")
    parser.add_argument('--m', type=int, help="Number of strings")
    parser.add_argument('--k', type=int, help="Distance cap")
    parser.add_argument('--eps', help="Privacy budget per copy, or 'inf' for no noise")
    parser.add_argument('--beta', type=float, help="Allowed failure probability over all strings")
    parser.add_argument('--mode', choices=['hamming', 'edit'], help="Distance to support")
    parser.add_argument('--backend', choices=['tree_aligned', 'window_encode'],
                        help="How LCP queries sketch the query side in edit mode")
    parser.add_argument('--seed', type=int, help="Master seed, for reproducible runs")
    parser.add_argument('--trials', type=int, help="Neighbour pairs to audit")
    parser.add_argument('--format', choices=['json', 'tsv'], help="Query output format")
    parser.add_argument('--threads', type=int, help="Worker processes, falls back to $DPSD_THREADS")
    parser.add_argument('--copies', type=int, help="Override the copy count chosen from beta")
    parser.add_argument('--planted-distance', dest='planted_distance', type=int,
                        help="gen: also write a query at this distance from every string, with a truth sidecar")
    parser.add_argument('--log-level', dest='log_level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def run(config: RunConfig, out: typing.TextIO = sys.stdout) -> int:
    return COMMANDS[config.command](config, out)


def main(argv: typing.Optional[typing.Sequence[str]] = None, out: typing.TextIO = sys.stdout) -> int:
    """
    Parse flags, run the command, and map failures to exit codes:
    1 for usage and validation errors, 2 for IO and store format errors, 3 for audit violations.
    :param argv: Arguments without the program name, sys.argv[1:] if not given
    :param out: Where results are written
    :return: The exit code
    """
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return EXIT_OK if exit_request.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = from_args(args)
        return run(config, out)
    except (OSError, StoreFormatError) as err:
        logging.getLogger(__name__).error(f"{type(err).__name__}: {err}")
        return EXIT_IO
    except ValueError as err:
        logging.getLogger(__name__).error(f"{type(err).__name__}: {err}")
        return EXIT_VALIDATION


if __name__ == '__main__':
    sys.exit(main())
