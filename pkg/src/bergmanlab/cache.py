from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from bergmanlab.exceptions import CacheCorruptedException
from bergmanlab.geometry import SpaceParams
from bergmanlab.io import file_digest
from bergmanlab.option import Option
from bergmanlab.quadrature import QuadratureRule, build_rule

__all__ = [
    'CACHE_VERSION',
    'RuleCache'
]

logger = logging.getLogger(__name__)

CACHE_VERSION = 1

_INDEX = 'index.json'
_HEADER_BYTES = 8
_PAYLOAD_DTYPE = np.dtype('<f8')


def _alpha_tag(alpha: float) -> str:
    return repr(float(alpha)).replace('-', 'm').replace('.', 'p')


class RuleCache:
    """
    On-disk cache of quadrature rules and basis norm tables. Every file starts with an 8-byte little-endian
    header length, then a UTF-8 JSON header with the parameters, then the payload as little-endian
    float64 values. A SHA-256 index of all files lives in ``index.json``.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def __repr__(self):
        return f'RuleCache({str(self.directory)!r})'

    @staticmethod
    def rule_file_name(params: SpaceParams, radial_points: int, angular_points: int) -> str:
        return f'rule_n{params.n}_a{_alpha_tag(params.alpha)}_r{radial_points}_k{angular_points}.bin'

    @staticmethod
    def norms_file_name(params: SpaceParams, max_degree: int) -> str:
        return f'norms_n{params.n}_a{_alpha_tag(params.alpha)}_D{max_degree}.bin'

    def build(self, params: SpaceParams, radial_points: int, angular_points: int) -> QuadratureRule:
        """
        Builds a rule and stores it, replacing any previous file for the same key.
        """

        rule = build_rule(params, radial_points, angular_points)
        header = {
            'kind': 'rule',
            'version': CACHE_VERSION,
            'n': params.n,
            'alpha': params.alpha,
            'radial_points': radial_points,
            'angular_points': angular_points,
            'declared_exactness': rule.declared_exactness,
            'size': rule.size
        }
        payload = np.concatenate([rule.nodes.view(np.float64).ravel(), rule.weights])
        self._write(self.rule_file_name(params, radial_points, angular_points), header, payload)
        return rule

    def load(self, params: SpaceParams, radial_points: int, angular_points: int) -> Option[QuadratureRule]:
        """
        Reads a cached rule.

        :return: the rule, or an empty Option when the file is missing
        :raise CacheCorruptedException: when the checksum or the header does not match
        """

        name = self.rule_file_name(params, radial_points, angular_points)
        if not (self.directory / name).exists():
            logger.debug('cache miss %s', name)
            return Option.empty()

        header, payload = self._read(name)
        size = header['size']
        if header.get('kind') != 'rule' or payload.size != size * (2 * params.n + 1):
            raise CacheCorruptedException(f'{name}: payload does not match its header')
        nodes = payload[:2 * params.n * size].copy().view(np.complex128).reshape(size, params.n)
        weights = payload[2 * params.n * size:].copy()
        logger.debug('cache hit %s', name)
        return Option.of(QuadratureRule(params, nodes, weights, header['declared_exactness'], radial_points,
                                        angular_points))

    def get_or_build(self, params: SpaceParams, radial_points: int, angular_points: int) -> QuadratureRule:
        cached = self.load(params, radial_points, angular_points)
        if cached.is_present():
            return cached.get()
        return self.build(params, radial_points, angular_points)

    def save_norms(self, params: SpaceParams, max_degree: int, exponents: Sequence[Tuple[int, ...]],
                   norms: np.ndarray) -> Path:
        header = {
            'kind': 'norms',
            'version': CACHE_VERSION,
            'n': params.n,
            'alpha': params.alpha,
            'max_degree': max_degree,
            'exponents': [list(e) for e in exponents]
        }
        return self._write(self.norms_file_name(params, max_degree), header, np.asarray(norms, dtype=float))

    def load_norms(self, params: SpaceParams, max_degree: int) -> Option[Tuple[List[Tuple[int, ...]], np.ndarray]]:
        """
        Reads a cached norm table as (exponents, norms).

        :raise CacheCorruptedException: when the checksum or the header does not match
        """

        name = self.norms_file_name(params, max_degree)
        if not (self.directory / name).exists():
            logger.debug('cache miss %s', name)
            return Option.empty()

        header, payload = self._read(name)
        exponents = [tuple(e) for e in header.get('exponents', [])]
        if header.get('kind') != 'norms' or len(exponents) != payload.size:
            raise CacheCorruptedException(f'{name}: payload does not match its header')
        logger.debug('cache hit %s', name)
        return Option.of((exponents, payload.copy()))

    def list(self) -> List[dict]:
        """
        Headers of all cached files, sorted by file name, each with its ``file`` name added.
        """

        entries = []
        for path in sorted(self.directory.glob('*.bin')):
            header = self._read_header(path)
            header['file'] = path.name
            entries.append(header)
        return entries

    def verify(self) -> List[str]:
        """
        Recomputes the checksum of every indexed file.

        :return: the names of missing or corrupted files, empty when the cache is sound
        """

        failures = []
        for name, expected in sorted(self._index().items()):
            path = self.directory / name
            if not path.exists() or file_digest(path) != expected:
                logger.error('checksum failure for %s', name)
                failures.append(name)
        for path in sorted(self.directory.glob('*.bin')):
            if path.name not in self._index():
                logger.error('%s is not in the cache index', path.name)
                failures.append(path.name)
        return failures

    def purge(self) -> int:
        """
        Deletes every cached file and the index; returns the number of files removed.
        """

        removed = 0
        for path in sorted(self.directory.glob('*.bin')):
            path.unlink()
            removed += 1
        index = self.directory / _INDEX
        if index.exists():
            index.unlink()
        logger.info('purged %d files from %s', removed, self.directory)
        return removed

    def _index(self) -> dict:
        index = self.directory / _INDEX
        if not index.exists():
            return {}
        return json.loads(index.read_text(encoding='utf-8'))

    def _write(self, name: str, header: dict, payload: np.ndarray) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        encoded = json.dumps(header, sort_keys=True).encode('utf-8')
        with open(path, 'wb') as f:
            f.write(len(encoded).to_bytes(_HEADER_BYTES, 'little'))
            f.write(encoded)
            f.write(np.ascontiguousarray(payload, dtype=_PAYLOAD_DTYPE).tobytes())

        index = self._index()
        index[name] = file_digest(path)
        (self.directory / _INDEX).write_text(json.dumps(index, indent=2, sort_keys=True), encoding='utf-8')
        logger.info('cached %s', path)
        return path

    def _read_header(self, path: Path) -> dict:
        with open(path, 'rb') as f:
            length = int.from_bytes(f.read(_HEADER_BYTES), 'little')
            try:
                return json.loads(f.read(length).decode('utf-8'))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise CacheCorruptedException(f'{path.name}: unreadable header') from e

    def _read(self, name: str) -> Tuple[dict, np.ndarray]:
        path = self.directory / name
        expected = self._index().get(name)
        if expected is None or file_digest(path) != expected:
            logger.error('checksum failure for %s', name)
            raise CacheCorruptedException(f'{name}: checksum does not match the cache index')

        header = self._read_header(path)
        if header.get('version') != CACHE_VERSION:
            raise CacheCorruptedException(f'{name}: cache version {header.get("version")} != {CACHE_VERSION}')
        with open(path, 'rb') as f:
            f.seek(_HEADER_BYTES + int.from_bytes(f.read(_HEADER_BYTES), 'little'))
            payload = np.frombuffer(f.read(), dtype=_PAYLOAD_DTYPE)
        return header, payload.astype(np.float64)
