from __future__ import annotations

import abc
import argparse
import ast
import copy
import inspect
import os
import re
from typing import Any, Dict, Optional, Sequence

from bergmanlab.functions import function, require_not_none
from bergmanlab.option import Option

__all__ = [
    'Config',
    'ConfigFactory',
    'ConfigException',
    'ConfigReader',
    'ConfigParser',
    'ConfigValueResolver'
]

_MISSING = object()
_ABSENT = object()
_MAX_DEPTH = 32
_KEY_TOKEN = re.compile(r'([^.\[\]]+)|\[([^\]]*)]')


class ConfigException(Exception):
    """ Base exception for all configuration related exceptions. """


def _literal(text: str) -> Any:
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _merge(primary: dict, fallback: dict) -> dict:
    merged = dict(fallback)
    for key, value in primary.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(value, merged[key])
        else:
            merged[key] = value
    return merged


class Config:
    """
    Immutable wrapper around a nested dictionary of settings. Values are addressed by dotted keys with
    optional list indexes, e.g. ``grid.radii[0]`` or ``sweeps[-1].d``.
    """

    def __init__(self, root: dict):
        self.__root = root

    def get(self, key: str, default: Any = _MISSING) -> Any:
        """
        :param key: dotted path to the value
        :param default: returned when the path does not exist; without it a missing path raises
        :raise ConfigException: for a missing path without default, a non-integer or out of range index
        """

        node = self.__root
        for name, index in _KEY_TOKEN.findall(key):
            if name:
                if not isinstance(node, dict) or name not in node:
                    return self.__missing(key, default)
                node = node[name]
                continue
            if not isinstance(node, list):
                return self.__missing(key, default)
            try:
                node = node[int(index)]
            except ValueError as e:
                raise ConfigException(f'illegal index [{index}]') from e
            except IndexError as e:
                raise ConfigException(f'index out of range: {index}') from e
        return node

    @staticmethod
    def __missing(key: str, default: Any) -> Any:
        if default is _MISSING:
            raise ConfigException(f'no config found for key "{key}"')
        return default

    def with_fallback(self, other: Config) -> Config:
        """
        Returns a new Config whose missing values are taken from ``other``; nested mappings merge key by key.
        """

        return Config(_merge(self.__root, other.__root))  # pylint: disable=protected-access

    def without(self, *keys: str) -> Config:
        """ Returns a new Config with the given top-level keys removed. """

        return Config({key: value for key, value in self.__root.items() if key not in keys})

    def resolve(self, verbatim: Sequence[str] = ()) -> Config:
        """
        Returns a new Config in which every string a `ConfigValueResolver` accepts is replaced by its resolved
        value. Resolved values are resolved again, up to a fixed depth. Top-level keys listed in ``verbatim``
        are copied unresolved but stay visible to references.

        :raise ConfigException: for missing references and reference loops
        """

        def visit(path: str, node: Any, depth: int) -> Any:
            if depth > _MAX_DEPTH:
                raise ConfigException(f'reference loop detected for key "{path}"')
            if path in verbatim:
                return node
            if isinstance(node, dict):
                return {key: visit(f'{path}.{key}' if path else key, value, depth) for key, value in node.items()}
            if isinstance(node, list):
                return [visit(f'{path}[{i}]', value, depth) for i, value in enumerate(node)]
            if not isinstance(node, str):
                return node

            resolver = ConfigValueResolver.find_subclass(node)
            if resolver.is_empty():
                return node
            try:
                value = resolver.get().resolve(self, path, node)
            except ConfigException:
                raise
            except Exception as e:
                raise ConfigException(f'failed to resolve value for key "{path}": {e}') from e
            return visit(path, value, depth + 1)

        return Config(visit('', self.__root, 0))

    def to_dict(self) -> Dict[str, Any]:
        """ Returns a deep copy of the wrapped dictionary. """

        return copy.deepcopy(self.__root)

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.__root == other.__root  # pylint: disable=protected-access

    def __repr__(self):
        return f'Config({self.__root!r})'


class ConfigFactory:
    """ Contains static methods to create `Config` objects. """

    @staticmethod
    def load(path: Optional[str], argv: Optional[Sequence[str]] = None, defaults: Optional[Config] = None) -> Config:
        """
        Loads a layered configuration: command line overrides first, then the file at the given path,
        then the defaults. Environment variables are mounted under ``envs`` while references resolve and
        are dropped from the result.

        :param path: to the configuration file, may be None
        :param argv: override arguments of the form ``--key.subkey value``
        :param defaults: lowest precedence values
        :raise ConfigException: for syntax errors, malformed overrides and unresolvable references
        :raise OSError: when the file cannot be read
        """

        config = Config(ConfigFactory.arguments(argv).get('args'))
        if path is not None:
            config = config.with_fallback(ConfigFactory.from_file(path))
        if defaults is not None:
            config = config.with_fallback(defaults)

        return config \
            .with_fallback(ConfigFactory.system_environments()) \
            .resolve(verbatim=('envs',)) \
            .without('envs')

    @staticmethod
    def from_file(path: str) -> Config:
        """
        Loads a configuration from the given file path; the file must hold a mapping at the top level.
        """

        reader = ConfigReader.find_subclass(path) \
            .or_else_raise(ConfigException, f'no reader found for file {path}')
        parser = ConfigParser.find_subclass(path) \
            .or_else_raise(ConfigException, f'no format parser found for file {path}')
        content = parser.parse(reader.read(require_not_none(path)))
        if content is None:
            return Config({})
        if not isinstance(content, dict):
            raise ConfigException(f'top level of {path} must be a mapping')
        return Config(content)

    @staticmethod
    def system_environments() -> Config:
        return Config({'envs': dict(os.environ.items())})

    @staticmethod
    def arguments(argv: Optional[Sequence[str]] = None) -> Config:
        """
        Parses ``--key.subkey value`` pairs into the ``args`` node of a `Config`. Values are read as Python
        literals when possible and as plain strings otherwise; a repeated key keeps its last value.
        """

        tokens = list(argv or [])
        parser = argparse.ArgumentParser(add_help=False, exit_on_error=False)
        for name in sorted({token for token in tokens if token.startswith('--')}):
            parser.add_argument(name)
        try:
            parsed, _ = parser.parse_known_args(tokens)
        except argparse.ArgumentError as e:
            raise ConfigException(f'malformed override: {e}') from e

        args: Dict[str, Any] = {}
        for dotted, raw in sorted(vars(parsed).items()):
            if raw is None:
                continue
            *parents, leaf = dotted.split('.')
            cell = args
            for parent in parents:
                cell = cell.setdefault(parent, {})
            cell[leaf] = _literal(raw)
        return Config({'args': args})


class _SubclassRegistryMeta(abc.ABCMeta):
    """
    Keeps one instance per concrete subclass. Concrete subclasses must define ``test``; ``find_subclass``
    tries them in ascending ``priority`` (100 when unset) and returns the first whose test accepts the input.
    """

    def __init__(cls, *args, **kwargs):
        super().__init__(*args, **kwargs)
        cls.__instances = {}
        if not inspect.isabstract(cls) and 'test' not in cls.__dict__:
            raise TypeError(f'Class {cls.__name__} must implement test method')

    def find_subclass(cls, *args, **kwargs) -> Option:
        for subclass in sorted(cls.__subclasses__(), key=lambda x: getattr(x, 'priority', 100)):
            if subclass.test(*args, **kwargs):
                return Option.of(cls.__instances.setdefault(subclass, subclass()))
        return Option.empty()


class ConfigReader(metaclass=_SubclassRegistryMeta):

    @abc.abstractmethod
    def read(self, path: str) -> str:
        """ Returns the raw content stored at the path. """


class ConfigParser(metaclass=_SubclassRegistryMeta):

    @abc.abstractmethod
    def parse(self, content: str) -> Any:
        """
        :raise ConfigException: on a syntax error, with line and column when the format reports them
        """


class ConfigValueResolver(metaclass=_SubclassRegistryMeta):

    @abc.abstractmethod
    def resolve(self, config: Config, key: str, value: str) -> Any:
        """ Returns the value that replaces ``value`` found at ``key``. """


class LocalFileConfigReader(ConfigReader):
    priority = 200
    test = function(lambda x: True)

    def read(self, path: str) -> str:
        with open(path, encoding='utf-8') as f:
            return f.read()


class JsonConfigParser(ConfigParser):
    test = function(lambda x: x.endswith('.json'))

    def parse(self, content: str) -> Any:
        import json  # pylint: disable=import-outside-toplevel
        try:
            return json.loads(content)
        except json.JSONDecodeError as e:
            raise ConfigException(f'line {e.lineno}, column {e.colno}: {e.msg}') from e


class YamlConfigParser(ConfigParser):
    test = function(lambda x: x.endswith('.yaml') or x.endswith('.yml'))

    def parse(self, content: str) -> Any:
        import yaml  # pylint: disable=import-outside-toplevel
        try:
            return yaml.safe_load(content)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            where = f'line {mark.line + 1}, column {mark.column + 1}: ' if mark is not None else ''
            raise ConfigException(f'{where}{getattr(e, "problem", None) or e}') from e


class ConfigValueReferenceResolver(ConfigValueResolver):
    """
    Substitutes ``${key.subkey}`` references. ``${a|b}`` tries ``a`` then ``b``; ``${a?default}`` falls back to
    the literal after ``?``; ``$$`` is a literal dollar. A value that is a single reference keeps the type of the
    referenced value, anything else is joined into a string.
    """

    priority = 10
    test = function(lambda x: '${' in x and '}' in x[x.index('${'):])

    _REFERENCE = re.compile(r'\$\$|\$\{([^}]+)}')

    def resolve(self, config: Config, key: str, value: str) -> Any:
        parts, last = [], 0
        for match in self._REFERENCE.finditer(value):
            parts.append(value[last:match.start()])
            parts.append('$' if match.group(1) is None else self._lookup(config, match.group(1)))
            last = match.end()
        parts.append(value[last:])
        parts = [part for part in parts if not (isinstance(part, str) and part == '')]

        if len(parts) == 1:
            return parts[0]
        if any(isinstance(part, (dict, list)) for part in parts):
            raise ConfigException(f'can not substitute composite type into "{key}"')
        return ''.join(str(part) for part in parts)

    @staticmethod
    def _lookup(config: Config, expression: str) -> Any:
        *alternatives, last = expression.split('|')
        for path in alternatives:
            found = config.get(path, _ABSENT)
            if found is not _ABSENT:
                return found

        path, *default = last.split('?', 1)
        if default:
            found = config.get(path, _ABSENT)
            return _literal(default[0]) if found is _ABSENT else found
        return config.get(path)
