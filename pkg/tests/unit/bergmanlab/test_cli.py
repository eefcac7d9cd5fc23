import logging
import os
from unittest import mock

import pytest

from bergmanlab import cli
from bergmanlab.enums import Verdict
from bergmanlab.exceptions import CacheCorruptedException, IllegalArgumentException, PrecisionException
from bergmanlab.experiments import CheckResult, RunResult


def run_result(tmp_path, *verdicts):
    return RunResult('svd', tmp_path, {}, [CheckResult(f'check_{i}', v) for i, v in enumerate(verdicts)])


def test_main_passes_flags_and_overrides(tmp_path):
    command = mock.Mock(return_value=run_result(tmp_path, Verdict.PASS))

    with mock.patch.dict(cli.COMMANDS, {'svd': command}):
        actual = cli.main([
            'svd', '--out', str(tmp_path), '--threads', '2', '--seed', '7', '--space.n', '2', '--degrees', '[4, 2]'])

    assert actual == 0
    manifest = command.call_args[0][0]
    assert manifest.out == str(tmp_path)
    assert manifest.threads == 2
    assert manifest.seed == 7
    assert manifest.params.n == 2
    assert manifest.degrees == [2, 4]


def test_main_reads_manifest_file(tmp_path):
    path = tmp_path / 'manifest.yaml'
    path.write_text('experiment: from-file\nchannels: [2]\n')
    command = mock.Mock(return_value=run_result(tmp_path, Verdict.PASS))

    with mock.patch.dict(cli.COMMANDS, {'svd': command}):
        cli.main(['svd', '--manifest', str(path), '--channels', '[5]'])

    manifest = command.call_args[0][0]
    assert manifest.experiment == 'from-file'
    assert manifest.channels == [5]


def samples_exit_codes():
    return [
        ([Verdict.PASS, Verdict.PASS], 0),
        ([Verdict.PASS, Verdict.INCONCLUSIVE], 3),
        ([Verdict.INCONCLUSIVE, Verdict.FAIL], 2)
    ]


@pytest.mark.parametrize('verdicts, expected', samples_exit_codes())
def test_main_exit_code_follows_checks(tmp_path, verdicts, expected):
    command = mock.Mock(return_value=run_result(tmp_path, *verdicts))

    with mock.patch.dict(cli.COMMANDS, {'svd': command}):
        actual = cli.main(['svd', '--out', str(tmp_path)])

    assert actual == expected


@pytest.mark.parametrize('error, expected', [
    (PrecisionException('rule too coarse'), 3),
    (CacheCorruptedException('checksum mismatch'), 2),
    (IllegalArgumentException('bad symbol'), 4)
])
def test_main_maps_exceptions(tmp_path, error, expected):
    command = mock.Mock(side_effect=error)

    with mock.patch.dict(cli.COMMANDS, {'svd': command}):
        actual = cli.main(['svd', '--out', str(tmp_path)])

    assert actual == expected


def test_main_invalid_manifest(tmp_path):
    command = mock.Mock()

    with mock.patch.dict(cli.COMMANDS, {'svd': command}):
        actual = cli.main(['svd', '--out', str(tmp_path), '--channels', '[]'])

    assert actual == 4
    command.assert_not_called()


def test_main_missing_manifest_file(tmp_path):
    actual = cli.main(['svd', '--manifest', str(tmp_path / 'absent.yaml')])

    assert actual == 4


@pytest.mark.parametrize('argv', [
    [],
    ['unknown-command'],
    ['cache', 'compact'],
    ['svd', '--threads', 'many']
])
def test_main_usage_errors(argv):
    actual = cli.main(argv)

    assert actual == 4


def test_main_help(capsys):
    actual = cli.main(['--help'])

    assert actual == 0
    assert 'identity-suite' in capsys.readouterr().out


@pytest.mark.parametrize('verbose, expected', [
    ([], logging.WARNING),
    (['-v'], logging.INFO),
    (['-vv'], logging.DEBUG)
])
def test_main_verbosity(tmp_path, verbose, expected):
    command = mock.Mock(return_value=run_result(tmp_path, Verdict.PASS))

    with mock.patch.dict(cli.COMMANDS, {'svd': command}), \
            mock.patch('bergmanlab.cli.logging.basicConfig') as mock_basic_config:
        cli.main(['svd', '--out', str(tmp_path)] + verbose)

    assert mock_basic_config.call_args[1]['level'] == expected


def test_main_cache_build_and_verify(tmp_path, capsys):
    with mock.patch.dict(os.environ, {'BERGMANLAB_CACHE_DIR': str(tmp_path / 'cache')}):
        built = cli.main(['cache', 'build', '--out', str(tmp_path / 'out'), '--degrees', '[4]'])
        verified = cli.main(['cache', 'verify', '--out', str(tmp_path / 'out')])

    assert built == 0
    assert verified == 0
    assert len(list((tmp_path / 'cache').glob('*.bin'))) == 2
    assert (tmp_path / 'out' / 'cache' / 'summary.json').exists()
    assert 'cache: pass' in capsys.readouterr().out
