import numpy as np
import pytest

from bergmanlab import symbols
from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.geometry import Point, SpaceParams, mobius
from bergmanlab.quadrature import build_rule, integrate
from bergmanlab.symbols import (Adjoint, Constant, CornerTruncated, DenseMatrix, DiagonalGeometric, Indicator,
                                LiftA1j, LiftA2kj, LiftBkj, Monomial, MobiusComposed, Product, RadialPower,
                                ScalarFunction, ScalarSymbol, ScalarTimesIdentity, Sum, Symbol, TailTruncated)

W = Point.of(0.3 + 0.2j)
TAU = Monomial((1,), (0,)) + Constant(0.5)


def samples_points():
    return [Point.of(0.0), Point.of(0.3 + 0.2j), Point.of(-0.7j), Point.of(0.55)]


def samples_symbols():
    return [
        ScalarSymbol(TAU),
        ScalarTimesIdentity(Indicator(0.5), 3),
        DiagonalGeometric(TAU, 4),
        DenseMatrix(((TAU, None), (Constant(2j), RadialPower(2.0)))),
        TailTruncated(DiagonalGeometric(TAU, 3), 1),
        CornerTruncated(ScalarTimesIdentity(TAU, 5), 2),
        Adjoint(LiftBkj(TAU, 1, 2, 3)),
        LiftA1j(Indicator(0.4), 2, 3),
        LiftA2kj(TAU, 3, 1, 3),
        MobiusComposed(DiagonalGeometric(Indicator(0.5), 2), Point.of(0.2j))
    ]


def test_scalar_function_values():
    nodes = np.array([[0.5 + 0.0j], [0.3j]])

    np.testing.assert_allclose(Constant(2 - 1j).values(nodes), [2 - 1j, 2 - 1j])
    np.testing.assert_allclose(Indicator(0.4).values(nodes), [0, 1])
    np.testing.assert_allclose(RadialPower(2).values(nodes), [0.25, 0.09])
    np.testing.assert_allclose(Monomial((2,), (1,)).values(nodes), [0.125, 0.027j])
    np.testing.assert_allclose(Product((Indicator(0.4), Constant(3))).values(nodes), [0, 3])
    np.testing.assert_allclose(Sum((RadialPower(0), Constant(1))).values(nodes), [2, 2])


def test_scalar_function_properties():
    assert Indicator(0.5).jump_radii == (0.5,)
    assert Indicator(1.0).jump_radii == ()
    assert (Indicator(0.5) * Indicator(0.25)).jump_radii == (0.25, 0.5)
    assert Monomial((1, 1), (1, 1)).is_radial
    assert not Monomial((1,), (0,)).is_radial
    assert not (Monomial((1,), (0,)) + Constant(1)).is_radial
    assert (RadialPower(3) * Indicator(0.5)).is_radial


def test_monomial_dimension_mismatch():
    with pytest.raises(IllegalArgumentException):
        Monomial((1, 0), (0, 0)).values(np.zeros((2, 1), dtype=complex))


@pytest.mark.parametrize('function', [
    Constant(1 + 2j),
    Indicator(0.5),
    RadialPower(1.5),
    Monomial((1, 2), (0, 1)),
    Product((Indicator(0.5), Monomial((1,), (1,)))),
    Sum((Constant(1), RadialPower(2)))
])
def test_scalar_function_from_dict(function):
    actual = ScalarFunction.from_dict(function.to_dict())

    assert actual == function


@pytest.mark.parametrize('data', [
    {'kind': 'gaussian'},
    {'radius': 0.5},
    {'kind': 'indicator'},
    {'kind': 'indicator', 'radius': 2.0},
    'indicator'
])
def test_scalar_function_from_dict_invalid(data):
    with pytest.raises(IllegalArgumentException):
        ScalarFunction.from_dict(data)


def test_eval_scalar_times_identity():
    actual = symbols.evaluate(ScalarTimesIdentity(TAU, 3), W)

    np.testing.assert_allclose(actual, TAU(W) * np.eye(3))


def test_eval_diagonal_geometric():
    actual = symbols.evaluate(DiagonalGeometric(TAU, 2), W)

    np.testing.assert_allclose(actual, np.diag([TAU(W) / 2, TAU(W) / 4]))


def test_eval_lift_b():
    actual = symbols.evaluate(LiftBkj(TAU, 1, 2, 3), W)

    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1] = TAU(W)
    np.testing.assert_allclose(actual, expected)


def test_eval_lift_a():
    a2 = symbols.evaluate(LiftA2kj(TAU, 1, 3, 3), W)
    a1 = symbols.evaluate(LiftA1j(TAU, 2, 3), W)

    assert np.count_nonzero(a2) == 1 and a2[2, 0] == TAU(W)
    assert np.count_nonzero(a1) == 1 and a1[1, 1] == TAU(W)


@pytest.mark.parametrize('k, j', [(0, 1), (1, 4), (4, 1)])
def test_lift_rejects_indices(k, j):
    with pytest.raises(IllegalArgumentException):
        LiftBkj(TAU, k, j, 3)


def test_eval_dense_matrix():
    actual = symbols.evaluate(DenseMatrix(((TAU, None), (Constant(2j), RadialPower(2.0)))), W)

    np.testing.assert_allclose(actual, [[TAU(W), 0], [2j, abs(0.3 + 0.2j) ** 2]])


def test_dense_matrix_must_be_square():
    with pytest.raises(IllegalArgumentException):
        DenseMatrix(((TAU, None),))


def test_tail_truncate():
    b = DiagonalGeometric(TAU, 3)

    np.testing.assert_allclose(symbols.tail_truncate(b, 0)(W), b(W))
    np.testing.assert_allclose(symbols.tail_truncate(b, 3)(W), np.zeros((3, 3)))
    np.testing.assert_allclose(symbols.tail_truncate(b, 1)(W), np.diag([0, TAU(W) / 4, TAU(W) / 8]))


def test_tail_truncate_zeroes_leading_columns():
    rng = np.random.default_rng(0)
    grid = tuple(tuple(Constant(complex(*rng.normal(size=2))) for _ in range(4)) for _ in range(4))

    actual = symbols.tail_truncate(DenseMatrix(grid), 2)(W)

    assert not np.any(actual[:, :2])
    np.testing.assert_allclose(actual[:, 2:], DenseMatrix(grid)(W)[:, 2:])


def test_corner_truncate():
    b = ScalarTimesIdentity(TAU, 5)

    np.testing.assert_allclose(symbols.corner_truncate(b, 5)(W), b(W))
    np.testing.assert_allclose(symbols.corner_truncate(b, 2)(W), TAU(W) * np.eye(2))
    assert symbols.corner_truncate(b, 2).channels == 2


@pytest.mark.parametrize('truncate, d0', [
    (symbols.tail_truncate, 4),
    (symbols.tail_truncate, -1),
    (symbols.corner_truncate, 4),
    (symbols.corner_truncate, 0)
])
def test_truncation_rejects_index(truncate, d0):
    with pytest.raises(IllegalArgumentException):
        truncate(DiagonalGeometric(TAU, 3), d0)


def test_corner_and_tail_reconstruct_symbol():
    rng = np.random.default_rng(4)
    grid = tuple(tuple(Constant(complex(*rng.normal(size=2))) for _ in range(3)) for _ in range(3))
    b = DenseMatrix(grid)

    for point in samples_points():
        corner, tail, full = symbols.corner_truncate(b, 2)(point), symbols.tail_truncate(b, 2)(point), b(point)
        rebuilt = tail.copy()
        rebuilt[:, :2] = full[:, :2]
        rebuilt[:2, :2] = corner

        np.testing.assert_allclose(rebuilt, full)


@pytest.mark.parametrize('b', samples_symbols())
def test_adjoint_symbol(b):
    adjoint = symbols.adjoint_symbol(b)

    for point in samples_points():
        np.testing.assert_allclose(adjoint(point), b(point).conj().T)
        np.testing.assert_allclose(symbols.adjoint_symbol(adjoint)(point), b(point))


def test_adjoint_of_real_diagonal():
    b = DiagonalGeometric(RadialPower(2), 3)

    np.testing.assert_allclose(symbols.adjoint_symbol(b)(W), b(W))


def test_adjoint_of_lift():
    actual = symbols.adjoint_symbol(LiftBkj(TAU, 1, 2, 3))(W)

    assert actual[1, 0] == np.conj(TAU(W))
    assert np.count_nonzero(actual) == 1


@pytest.mark.parametrize('b', samples_symbols())
def test_symbol_from_dict(b):
    actual = Symbol.from_dict(b.to_dict())

    assert actual == b
    for point in samples_points():
        np.testing.assert_allclose(actual(point), b(point))


@pytest.mark.parametrize('data', [
    {'kind': 'toeplitz'},
    {'kind': 'scalar_times_identity', 'function': {'kind': 'constant'}},
    {'kind': 'corner_truncated', 'base': {'kind': 'scalar', 'function': {'kind': 'constant'}}, 'd0': 2}
])
def test_symbol_from_dict_invalid(data):
    with pytest.raises(IllegalArgumentException):
        Symbol.from_dict(data)


def test_parse_symbol_shorthand():
    assert symbols.parse_symbol({'kind': 'indicator', 'radius': 0.5}) == ScalarSymbol(Indicator(0.5))
    assert symbols.parse_symbol({'kind': 'indicator', 'radius': 0.5}, 2) == ScalarTimesIdentity(Indicator(0.5), 2)


@pytest.mark.parametrize('b, expected', [
    (ScalarTimesIdentity(TAU, 3), True),
    (LiftBkj(TAU, 1, 2, 3), False),
    (Adjoint(LiftA1j(TAU, 2, 3)), True),
    (TailTruncated(LiftBkj(TAU, 2, 1, 3), 1), True)
])
def test_symbol_is_diagonal(b, expected):
    assert b.is_diagonal == expected


def test_symbol_support_skips_zero_entries():
    actual = DenseMatrix(((TAU, None), (None, Constant(1)))).entries(np.zeros((4, 1), dtype=complex))

    assert sorted(actual) == [(0, 0), (1, 1)]


def test_compose_mobius_evaluates_pointwise():
    params = SpaceParams(1, 0.0)
    z = Point.of(0.4 - 0.1j)
    b = DiagonalGeometric(TAU, 2)

    actual = symbols.compose_mobius(b, z)

    for point in samples_points():
        np.testing.assert_allclose(actual(point), b(mobius(params, z, point)))
    assert actual.resolution_radius == pytest.approx(z.norm)
    assert actual.jump_radii == b.jump_radii


def test_compose_mobius_rejects_nesting():
    with pytest.raises(IllegalArgumentException):
        symbols.compose_mobius(symbols.compose_mobius(ScalarSymbol(TAU), Point.of(0.1)), Point.of(0.2))


def test_combinators_move_inside_mobius_composition():
    z = Point.of(0.3j)
    composed = symbols.compose_mobius(DiagonalGeometric(TAU, 3), z)

    assert isinstance(symbols.adjoint_symbol(composed), MobiusComposed)
    assert isinstance(symbols.tail_truncate(composed, 1), MobiusComposed)
    assert symbols.corner_truncate(composed, 2).channels == 2
    np.testing.assert_allclose(symbols.adjoint_symbol(composed)(W), composed(W).conj().T)


@pytest.mark.parametrize('params, z', [
    (SpaceParams(1, 0.0), Point.of(0.5)),
    (SpaceParams(1, 1.0), Point.of(-0.3 + 0.3j)),
    (SpaceParams(2, 0.0), Point.of(0.2, 0.2j))
])
def test_pullback_change_of_variables(params, z):
    tau = Monomial((1,) + (0,) * (params.n - 1), (0,) * params.n) * Monomial((0,) * params.n, (1,) * params.n)
    b = symbols.compose_mobius(ScalarSymbol(tau), z)
    rule = build_rule(params, 30, 48) if params.n == 1 else build_rule(params, 16, 28)

    pulled = symbols.pullback(b, rule)
    actual = np.sum(pulled.weights * pulled.symbol.entries(pulled.symbol_nodes)[(0, 0)])

    expected = integrate(rule, lambda nodes: b.entries(nodes)[(0, 0)])
    assert actual == pytest.approx(expected, abs=1e-8)


def test_pullback_of_plain_symbol_is_identity():
    rule = build_rule(SpaceParams(1, 0.0), 4, 8)
    b = ScalarSymbol(TAU)

    actual = symbols.pullback(b, rule)

    assert actual.symbol is b
    assert actual.weights is rule.weights
