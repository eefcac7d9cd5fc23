from __future__ import annotations

from enum import Enum
from functools import lru_cache, total_ordering
from typing import Iterable

from bergmanlab.exceptions import IllegalArgumentException

__all__ = [
    'EnumMixin',
    'NormKind',
    'Verdict'
]


@total_ordering
class EnumMixin:
    """
    EnumMixin extends Enum classes with lookup by value and ordering by declaration position.

    >>> class Level(EnumMixin, Enum):
    ...     LOW = 'low'
    ...     HIGH = 'high'
    >>> assert Level.value_of('high') > Level.LOW
    """

    @classmethod
    def value_of(cls, value):
        """
        Returns the enum constant of the specified enum type with the specified value.

        :param value: the value of the enum constant to be returned
        :return: the enum constant with the specified value
        :raise IllegalArgumentException: if no constant carries the value
        """

        for member in cls.__members__.values():
            if member.value == value:
                return member
        raise IllegalArgumentException(
            f'unknown {cls.__name__} "{value}", expected one of {[m.value for m in cls.__members__.values()]}')

    @property
    def ordinal(self):
        """
        Returns the position of this constant in its enum declaration, starting from zero.
        """

        return self.__ordinals__()[self.name]

    def __gt__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return self.ordinal > other.ordinal

    @classmethod
    @lru_cache()
    def __ordinals__(cls):
        return {name: index for index, name in enumerate(cls.__members__)}


class NormKind(EnumMixin, Enum):
    """
    Matrix norms on L(C^d) used by the BMO seminorm: the operator norm of l2, the l2 to l1 norm
    and the norm into the intersection of l1 and l2.
    """

    OP_2TO2 = '2to2'
    OP_2TO1 = '2to1'
    INTERSECTION = 'intersection'


class Verdict(EnumMixin, Enum):
    """
    Outcome of a diagnostic or identity check, ordered from best to worst.
    """

    PASS = 'pass'
    INCONCLUSIVE = 'inconclusive'
    FAIL = 'fail'

    @classmethod
    def worst(cls, verdicts: Iterable[Verdict]) -> Verdict:
        """
        Returns the worst verdict of the collection, PASS for an empty one.
        """

        return max(verdicts, default=cls.PASS)
