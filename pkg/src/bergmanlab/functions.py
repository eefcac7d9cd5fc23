from __future__ import annotations

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Type, TypeVar, overload

from bergmanlab.exceptions import IllegalArgumentException

__all__ = [
    'require_not_none',
    'require',
    'function',
    'return_values_as',
    'parallel_map'
]

T = TypeVar('T')
R = TypeVar('R')

logger = logging.getLogger(__name__)


@overload
def require_not_none(obj: T) -> T: ...


@overload
def require_not_none(obj: T, msg: str) -> T: ...


def require_not_none(obj: T, msg: Optional[str] = None) -> T:
    """
    Checks that the specified object reference is not None
    """

    if obj is None:
        if msg is None:
            raise IllegalArgumentException()
        raise IllegalArgumentException(msg)
    return obj


def require(condition: bool, msg: str, exception: Type[Exception] = IllegalArgumentException) -> None:
    """
    Raises the given exception type with the message unless the condition holds.
    """

    if not condition:
        raise exception(msg)


def return_values_as(mapper):
    """
    Decorator that materializes the return value of a generation function.

    >>> @return_values_as(tuple)
    >>> def foo():
    >>>     yield 1
    >>>     yield 2
    >>>
    >>> assert foo() == (1, 2)
    """

    def inner(func):
        @functools.wraps(func)
        def wraps(*argv, **kwargs):
            return mapper(func(*argv, **kwargs))

        return wraps

    require_not_none(mapper)
    return inner


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Applies the function to every item and returns the results in input order. With more than one
    worker the items are evaluated on a thread pool; the gather order never depends on completion order.

    :param func: pure function evaluated per item
    :param items: the cells to evaluate
    :param workers: number of threads, 1 evaluates inline
    :return: list of results aligned with items
    """

    items = list(items)
    require(workers >= 1, f'workers must be positive, got {workers}')
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug('evaluating %d cells on %d workers', len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


class function:  # pylint: disable=invalid-name
    """
    Wraps a callable so that it can be assigned as a class attribute, such as the `test` predicate of a
    registry subclass, without being bound as a method.
    """

    def __init__(self, this: Callable[..., R]):
        self._this = require_not_none(this)

    def __call__(self, *args, **kwargs):
        return self._this(*args, **kwargs)
