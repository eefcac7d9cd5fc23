import threading
import time

import pytest

from bergmanlab import functions
from bergmanlab.exceptions import IllegalArgumentException, PrecisionException


def test_require_not_none():
    obj = object()

    actual = functions.require_not_none(obj)

    assert actual is obj


def test_require_not_none_raise():
    with pytest.raises(IllegalArgumentException) as e:
        functions.require_not_none(None)

    assert e.value.args == ()


def test_require_not_none_raise_with_msg():
    with pytest.raises(ValueError) as e:
        functions.require_not_none(None, 'foo')

    assert e.value.args == ('foo',)


def test_require():
    functions.require(True, 'never raised')


def test_require_raise():
    with pytest.raises(IllegalArgumentException) as e:
        functions.require(False, 'foo')

    assert e.value.args == ('foo',)


def test_require_raise_custom_exception():
    with pytest.raises(PrecisionException):
        functions.require(False, 'foo', PrecisionException)


def test_return_values_as():
    @functions.return_values_as(tuple)
    def generate():
        yield 1
        yield 2

    actual = generate()

    assert actual == (1, 2)


@pytest.mark.parametrize('workers', [1, 2, 8])
def test_parallel_map_keeps_order(workers):
    def slow_square(x):
        time.sleep(0.001 * (10 - x))
        return x * x

    actual = functions.parallel_map(slow_square, range(10), workers)

    assert actual == [x * x for x in range(10)]


def test_parallel_map_uses_threads():
    names = set()

    def record(_):
        names.add(threading.current_thread().name)
        time.sleep(0.01)

    functions.parallel_map(record, range(8), 4)

    assert len(names) > 1


def test_parallel_map_rejects_zero_workers():
    with pytest.raises(IllegalArgumentException):
        functions.parallel_map(str, [1, 2], 0)


def test_function():
    func = functions.function(lambda x: x + 1)

    actual = func(1)

    assert actual == 2


def test_function_as_class_attribute():
    class Probe:
        test = functions.function(lambda x: x.endswith('.yaml'))

    actual = Probe().test('manifest.yaml')

    assert actual is True
