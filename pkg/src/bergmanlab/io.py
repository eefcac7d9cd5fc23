from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

__all__ = [
    'to_jsonable',
    'canonical_json',
    'digest',
    'file_digest',
    'write_json',
    'read_json',
    'write_csv',
    'format_float'
]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """
    Converts numpy scalars and arrays, tuples and complex numbers into plain JSON values. A complex number
    becomes {"re": ..., "im": ...}.
    """

    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'to_dict'):
        return to_jsonable(value.to_dict())
    if hasattr(value, 'value') and hasattr(type(value), '__members__'):
        return value.value
    return value


def canonical_json(value: Any) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def digest(value: Any) -> str:
    """ SHA-256 of the canonical JSON form. """

    return hashlib.sha256(canonical_json(value).encode('utf-8')).hexdigest()


def file_digest(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: PathLike, value: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(value), indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.debug('wrote %s', path)
    return path


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding='utf-8'))


def format_float(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Writes a UTF-8 CSV with a header row; floats are written with 17 significant digits.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    logger.debug('wrote %s', path)
    return path
