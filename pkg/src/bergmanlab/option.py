from __future__ import annotations

from typing import Any, Callable, Generic, Optional, TypeVar

from bergmanlab.functions import require_not_none

__all__ = [
    'Option'
]

T = TypeVar('T')
U = TypeVar('U')


class Option(Generic[T]):
    """
    A value that may be absent. Registry lookups (file readers, parsers, resolvers, symbol kinds) and cache
    loads return it, and the caller decides whether absence is an error.
    """

    def __init__(self, value: Optional[T]) -> None:
        self.__value = value

    @staticmethod
    def empty() -> Option[T]:
        return _EMPTY

    @staticmethod
    def of(value: T) -> Option[T]:
        """
        :raise IllegalArgumentException: if the value is none
        """

        return Option(require_not_none(value))

    @staticmethod
    def of_nullable(value: Optional[T]) -> Option[T]:
        return Option.empty() if value is None else Option(value)

    def is_present(self) -> bool:
        return self.__value is not None

    def is_empty(self) -> bool:
        return self.__value is None

    def get(self) -> T:
        """
        :raise ValueError: if no value is present
        """

        return self.or_else_raise()

    def map(self, mapper: Callable[[T], U]) -> Option[U]:
        """
        Applies the mapper to a present value; a mapper returning none yields an empty Option.
        """

        require_not_none(mapper)
        return self if self.is_empty() else Option.of_nullable(mapper(self.__value))

    def or_else(self, other: T) -> T:
        return self.__value if self.is_present() else other

    def or_else_raise(  # pylint: disable=keyword-arg-before-vararg
            self, supplier: Optional[Callable[..., Exception]] = None, *args, **kwargs
    ) -> T:
        """
        Returns the value, or raises ``supplier(*args, **kwargs)`` when it is absent (ValueError without a
        supplier).
        """

        if self.is_present():
            return self.__value
        if supplier is None:
            raise ValueError('No value present')
        raise supplier(*args, **kwargs)

    def __bool__(self):
        return self.is_present()

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Option) and self.__value == other.__value  # pylint: disable=protected-access

    def __hash__(self):
        return hash(self.__value)

    def __repr__(self):
        return f'Option({self.__value!r})'


_EMPTY = Option(None)
