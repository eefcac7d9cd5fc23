import os
from unittest import mock

import pytest

from bergmanlab.config import (Config, ConfigException, ConfigFactory, ConfigParser, ConfigReader, JsonConfigParser,
                               LocalFileConfigReader, YamlConfigParser)


def test_config_get():
    config = Config({'space': {'n': 1, 'alpha': 0.5}})

    actual = config.get('space.alpha')

    assert actual == 0.5


def test_config_get_missing_key():
    config = Config({'space': {'n': 1}})

    with pytest.raises(ConfigException) as e:
        config.get('space.alpha')

    assert str(e.value) == 'no config found for key "space.alpha"'


def test_config_get_default():
    config = Config({'space': {'n': 1}})

    actual = config.get('space.alpha', 0.0)

    assert actual == 0.0


@pytest.mark.parametrize('key, expected', [
    ('grids.radii[0]', 0.0),
    ('grids.radii[-1]', 0.95),
    ('sweeps[1].d', 4)
])
def test_config_get_array(key, expected):
    config = Config({'grids': {'radii': [0.0, 0.2, 0.4, 0.95]}, 'sweeps': [{'d': 2}, {'d': 4}]})

    actual = config.get(key)

    assert actual == expected


def test_config_get_array_bad_index():
    config = Config({'grids': {'radii': [0.0, 0.2]}})

    with pytest.raises(ConfigException) as e:
        config.get('grids.radii[i]')

    assert str(e.value) == 'illegal index [i]'


def test_config_get_array_out_of_range():
    config = Config({'grids': {'radii': [0.0, 0.2]}})

    with pytest.raises(ConfigException):
        config.get('grids.radii[5]')


def test_config_with_fallback():
    config = Config({'space': {'n': 2}, 'degrees': [4]})
    fallback = Config({'space': {'n': 1, 'alpha': 0.0}, 'channels': [3]})

    actual = config.with_fallback(fallback)

    assert actual == Config({'space': {'n': 2, 'alpha': 0.0}, 'degrees': [4], 'channels': [3]})


def test_config_without():
    config = Config({'envs': {'HOME': '/root'}, 'space': {'n': 1}})

    actual = config.without('envs')

    assert actual == Config({'space': {'n': 1}})


def test_config_to_dict_is_copy():
    root = {'space': {'n': 1}}
    config = Config(root)

    actual = config.to_dict()
    actual['space']['n'] = 2

    assert config.get('space.n') == 1


def samples_config_resolve():
    return [
        (
            {'exp': '${foo}', 'foo': 123},
            {'exp': 123, 'foo': 123}
        ), (
            {'exp': 'radius=${foo.bar}', 'foo': {'bar': 0.5}},
            {'exp': 'radius=0.5', 'foo': {'bar': 0.5}}
        ), (
            {'exp': '${foo[1]}', 'foo': [1, 2, 3]},
            {'exp': 2, 'foo': [1, 2, 3]}
        ), (
            {'exp': '${foo?123}'},
            {'exp': 123}
        ), (
            {'exp': '${foo?.cache}'},
            {'exp': '.cache'}
        ), (
            {'exp': '${foo|bar}', 'bar': 123},
            {'exp': 123, 'bar': 123}
        ), (
            {'exp': '${foo|bar|baz?True}'},
            {'exp': True}
        ), (
            {'exp': '${dir}/rules_$$', 'dir': '/tmp'},
            {'exp': '/tmp/rules_$', 'dir': '/tmp'}
        )
    ]


@pytest.mark.parametrize('config, expected', samples_config_resolve())
def test_config_resolve(config, expected):
    config = Config(config)

    actual = config.resolve()

    assert actual == Config(expected)


@pytest.mark.parametrize('config', [
    {'exp': '${foo}'},
    {'exp': '${foo.bar}'},
    {'exp': '${foo[0]}'},
    {'exp': '${foo|bar}'}
])
def test_config_resolve_with_missing(config):
    config = Config(config)

    with pytest.raises(ConfigException):
        config.resolve()


def test_config_resolve_with_loop():
    config = Config({'exp': '${foo}', 'foo': '${bar}', 'bar': '${foo}'})

    with pytest.raises(ConfigException):
        config.resolve()


def test_config_factory_system_environments():
    with mock.patch.dict(os.environ, {'BERGMANLAB_CACHE_DIR': '/tmp/cache'}, clear=True):
        actual = ConfigFactory.system_environments()

        assert actual == Config({'envs': {'BERGMANLAB_CACHE_DIR': '/tmp/cache'}})


@pytest.mark.parametrize('argv, expected', [
    (['--space.n', '2'], {'args': {'space': {'n': 2}}}),
    (['--space.alpha', '0.5'], {'args': {'space': {'alpha': 0.5}}}),
    (['--degrees', '[4, 8]'], {'args': {'degrees': [4, 8]}}),
    (['--experiment', 'e1'], {'args': {'experiment': 'e1'}}),
    (['--experiment', '"12"'], {'args': {'experiment': '12'}}),
    (['--strict', 'True'], {'args': {'strict': True}}),
    (['--space.n', '2', '--space.alpha', '1'], {'args': {'space': {'n': 2, 'alpha': 1}}}),
    (['--seed', '1', '--seed', '2'], {'args': {'seed': 2}}),
    ([], {'args': {}})
])
def test_config_factory_arguments(argv, expected):
    actual = ConfigFactory.arguments(argv)

    assert actual == Config(expected)


def test_config_factory_arguments_missing_value():
    with pytest.raises(ConfigException, match='malformed override'):
        ConfigFactory.arguments(['--space.n'])


def test_config_factory_from_file():
    with mock.patch('builtins.open', mock.mock_open(read_data='{"space": {"n": 1}}')) as mock_file:
        actual = ConfigFactory.from_file('manifest.json')

        assert actual == Config({'space': {'n': 1}})
        mock_file.assert_called_once_with('manifest.json', encoding='utf-8')


def test_config_factory_from_file_not_mapping():
    with mock.patch('builtins.open', mock.mock_open(read_data='[1, 2]')):
        with pytest.raises(ConfigException, match='must be a mapping'):
            ConfigFactory.from_file('manifest.json')


def test_config_factory_unsupported_file_type():
    with mock.patch('builtins.open', mock.mock_open(read_data='n = 1')) as mock_file:
        with pytest.raises(ConfigException, match='no format parser found for file manifest.toml'):
            ConfigFactory.from_file('manifest.toml')

        mock_file.assert_not_called()


def test_config_factory_load_layers(tmp_path):
    path = tmp_path / 'manifest.yaml'
    path.write_text('space:\n  n: 1\n  alpha: 0.5\ndegrees: [8]\n', encoding='utf-8')
    defaults = Config({'space': {'n': 1, 'alpha': 0.0}, 'channels': [3], 'cache': '${envs.CACHE?.cache}'})

    with mock.patch.dict(os.environ, {'CACHE': '/var/cache'}, clear=True):
        actual = ConfigFactory.load(str(path), ['--space.n', '2'], defaults)

    assert actual == Config({
        'space': {'n': 2, 'alpha': 0.5}, 'degrees': [8], 'channels': [3], 'cache': '/var/cache'})


def test_config_factory_load_without_file():
    with mock.patch.dict(os.environ, {}, clear=True):
        actual = ConfigFactory.load(None, [], Config({'cache': '${envs.CACHE?.cache}'}))

    assert actual == Config({'cache': '.cache'})


def test_json_config_parser():
    actual = JsonConfigParser().parse('{"space": {"n": 1}}')

    assert actual == {'space': {'n': 1}}


def test_json_config_parser_reports_line():
    with pytest.raises(ConfigException, match='line 2'):
        JsonConfigParser().parse('{"space":\n  {"n": }}')


def test_yaml_config_parser():
    actual = YamlConfigParser().parse('space:\n  n: 1\n')

    assert actual == {'space': {'n': 1}}


def test_yaml_config_parser_reports_line():
    with pytest.raises(ConfigException, match='line 2'):
        YamlConfigParser().parse('space:\n\tn: 1\n')


@pytest.mark.parametrize('path, expected', [
    ('manifest.json', JsonConfigParser),
    ('manifest.yaml', YamlConfigParser),
    ('manifest.yml', YamlConfigParser)
])
def test_config_parser_find_subclass(path, expected):
    actual = ConfigParser.find_subclass(path)

    assert isinstance(actual.get(), expected)


def test_config_reader_find_subclass_local_file():
    actual = ConfigReader.find_subclass('manifest.json')

    assert isinstance(actual.get(), LocalFileConfigReader)


def test_config_factory_load_keeps_environment_verbatim():
    with mock.patch.dict(os.environ, {'PROMPT': '${unset}', 'CACHE': '/var/cache'}, clear=True):
        actual = ConfigFactory.load(None, [], Config({'cache': '${envs.CACHE}'}))

    assert actual == Config({'cache': '/var/cache'})


def test_config_resolve_verbatim():
    config = Config({'raw': {'exp': '${missing}'}, 'n': '${m}', 'm': 1})

    actual = config.resolve(verbatim=('raw',))

    assert actual == Config({'raw': {'exp': '${missing}'}, 'n': 1, 'm': 1})
