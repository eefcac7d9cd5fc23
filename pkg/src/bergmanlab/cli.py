from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from bergmanlab.config import ConfigException
from bergmanlab.exceptions import CacheCorruptedException, IllegalArgumentException, PrecisionException
from bergmanlab.experiments import (CACHE_ACTIONS, COMMANDS, EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE,
                                    ExperimentManifest, RunResult, cmd_cache)

__all__ = [
    'build_parser',
    'main'
]

logger = logging.getLogger(__name__)

_HELP = {
    'identity-suite': 'run the exact identity battery',
    'e1-diagonal': 'compact diagonal example: fourfold report, singular values, boundary decay',
    'e2-taui': 'non-compact tau I example: multiplicity law, flat tail, essential norm proxy',
    'e3-localized': 'localization functionals and l2 to l1 BMO seminorms',
    'berezin': 'Berezin transform of the manifest symbol on the z-grid',
    'bmo': 'BMO grid seminorms of the manifest symbol in every norm',
    'assemble': 'assemble and save the truncated Toeplitz matrices',
    'svd': 'singular values of the assembled sections'
}

_FLAGS = ('out', 'threads', 'seed')


def build_parser() -> argparse.ArgumentParser:
    """
    One subcommand per experiment. Every flag has a manifest equivalent; tokens the parser does not know,
    such as ``--grid.angles 4``, override manifest fields.
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--manifest', help='JSON or YAML experiment manifest')
    common.add_argument('--out', help='output directory')
    common.add_argument('--threads', type=int, help='worker threads')
    common.add_argument('--seed', type=int, help='seed of the random samples')
    common.add_argument('-v', '--verbose', action='count', default=0, help='-v for info, -vv for debug logging')

    parser = argparse.ArgumentParser(
        prog='bergmanlab',
        description='Toeplitz operators with operator-valued symbols on weighted Bergman spaces of the unit ball.')
    commands = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        commands.add_parser(name, parents=[common], help=_HELP.get(name))
    cache = commands.add_parser('cache', parents=[common], help='list, build, verify or purge the rule cache')
    cache.add_argument('action', choices=CACHE_ACTIONS)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def _overrides(args: argparse.Namespace, extra: Sequence[str]) -> List[str]:
    overrides = list(extra)
    for name in _FLAGS:
        value = getattr(args, name)
        if value is not None:
            overrides += [f'--{name}', str(value)]
    return overrides


def _run(args: argparse.Namespace, manifest: ExperimentManifest) -> RunResult:
    if args.command == 'cache':
        return cmd_cache(manifest, args.action)
    return COMMANDS[args.command](manifest)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    :return: 0 when every check passes, 2 on a failed check or a corrupted cache, 3 when a rule is too coarse
        to decide, 4 on usage and manifest errors
    """

    try:
        args, extra = build_parser().parse_known_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE
    _configure_logging(args.verbose)

    try:
        manifest = ExperimentManifest.load(args.manifest, _overrides(args, extra))
        result = _run(args, manifest)
    except PrecisionException as e:
        logger.error('inconclusive: %s', e)
        return EXIT_INCONCLUSIVE
    except CacheCorruptedException as e:
        logger.error('corrupted cache: %s', e)
        return EXIT_FAILURE
    except (IllegalArgumentException, ConfigException) as e:
        logger.error('usage error: %s', e)
        return EXIT_USAGE

    print(f'{result.command}: {result.verdict.value} ({result.directory})')
    for entry in result.summary.get('entries', []):
        print(f'  {entry["file"]}')
    return result.exit_code


if __name__ == '__main__':
    sys.exit(main())
