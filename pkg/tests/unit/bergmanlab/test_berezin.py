import json
import math
from functools import lru_cache

import numpy as np
import pytest

from bergmanlab.basis import MultiIndex, enumerate_basis
from bergmanlab.berezin import (BerezinField, berezin_field, berezin_operator, berezin_symbol, bloch_norm,
                                bmo1_profile, bmo1_seminorm, tail_decay_profile)
from bergmanlab.enums import NormKind
from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.geometry import Point, SpaceParams, mobius, points_on_grid
from bergmanlab.quadrature import RuleProvider, build_rule, rule_for_degree
from bergmanlab.symbols import (Constant, DenseMatrix, DiagonalGeometric, Indicator, Monomial, RadialPower,
                                ScalarSymbol, ScalarTimesIdentity, adjoint_symbol, compose_mobius, corner_truncate)
from bergmanlab.toeplitz import TruncatedOperator, assemble, identity_operator

PARAMS = SpaceParams(1, 0.0)
RULES = RuleProvider(PARAMS)
TAU = Indicator(0.5) + Monomial((1,), (0,)) * Indicator(0.7)
GRID = points_on_grid(PARAMS, [0.0, 0.4, 0.8], 4)


@lru_cache(maxsize=None)
def table_for(max_degree, channels, params=PARAMS):
    return enumerate_basis(params, max_degree, channels, rule_for_degree(params, 2 * max_degree))


def dense_symbol():
    return DenseMatrix((
        (Indicator(0.5), Monomial((1,), (0,)) * Indicator(0.7), None),
        (Constant(0.3j), RadialPower(2), Monomial((0,), (1,))),
        (None, Constant(-0.5), Indicator(0.7))
    ))


def samples_points():
    return [Point.of(0.0), Point.of(0.5), Point.of(0.3 + 0.4j), Point.of(-0.7j)]


@pytest.mark.parametrize('z', samples_points())
def test_berezin_of_constant_matrix(z):
    c = np.array([[1.0, 2j], [-0.5, 3.0]])
    b = DenseMatrix(tuple(tuple(Constant(v) for v in row) for row in c))

    actual = berezin_symbol(b, z, RULES)

    np.testing.assert_allclose(actual, c, atol=1e-10)


@pytest.mark.parametrize('z', samples_points())
def test_berezin_of_scalar_times_identity(z):
    actual = berezin_symbol(ScalarTimesIdentity(TAU, 3), z, RULES)

    np.testing.assert_allclose(actual, berezin_symbol(ScalarSymbol(TAU), z, RULES)[0, 0] * np.eye(3), atol=1e-14)


@pytest.mark.parametrize('r', [0.3, 0.5, 0.9])
def test_berezin_of_indicator_at_origin(r):
    actual = berezin_symbol(ScalarSymbol(Indicator(r)), Point.of(0.0), RULES)

    assert actual[0, 0] == pytest.approx(r * r, abs=1e-12)


@pytest.mark.parametrize('z', [Point.of(0.6), Point.of(0.2 - 0.5j)])
def test_berezin_of_indicator(z):
    r, t = 0.5, z.norm ** 2

    actual = berezin_symbol(ScalarSymbol(Indicator(r)), z, RULES)

    assert actual[0, 0] == pytest.approx((1 - t) ** 2 * r * r / (1 - t * r * r) ** 2, abs=1e-10)


@pytest.mark.parametrize('a, w', [(Point.of(0.3), Point.of(0.2j)), (Point.of(-0.2 + 0.4j), Point.of(0.5))])
def test_berezin_mobius_covariance(a, w):
    b = DiagonalGeometric(TAU, 2)

    actual = berezin_symbol(compose_mobius(b, a), w, RULES)

    np.testing.assert_allclose(actual, berezin_symbol(b, mobius(PARAMS, a, w), RULES), atol=1e-7)


@pytest.mark.parametrize('z', samples_points())
def test_berezin_entrywise(z):
    b = dense_symbol()

    actual = berezin_symbol(b, z, RULES)

    for j, row in enumerate(b.grid):
        for k, function in enumerate(row):
            expected = berezin_symbol(ScalarSymbol(function), z, RULES)[0, 0] if function else 0.0
            assert actual[j, k] == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize('z', samples_points())
def test_berezin_adjoint_duality(z):
    b = dense_symbol()
    rng = np.random.default_rng(3)
    e, h = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))

    adjoint = berezin_symbol(adjoint_symbol(b), z, RULES)
    berezin = berezin_symbol(b, z, RULES)

    assert np.vdot(h, adjoint @ e) == pytest.approx(np.vdot(berezin @ h, e), abs=1e-9)


@pytest.mark.parametrize('d0', [1, 2, 3])
def test_berezin_corner_commutation(d0):
    b, z = dense_symbol(), Point.of(0.3 - 0.2j)

    actual = berezin_symbol(corner_truncate(b, d0), z, RULES)

    np.testing.assert_allclose(actual, berezin_symbol(b, z, RULES)[:d0, :d0], atol=1e-10)


def test_berezin_field():
    b = DiagonalGeometric(TAU, 2)

    actual = berezin_field(b, GRID, RULES, workers=2)

    assert actual.values.shape == (len(GRID), 2, 2)
    for z, value in zip(GRID, actual.values):
        np.testing.assert_array_equal(value, berezin_symbol(b, z, RULES))
    assert actual.sup_norm() == pytest.approx(np.max(np.linalg.norm(actual.values, 2, axis=(1, 2))))


def test_berezin_field_exports(tmp_path):
    field = BerezinField(PARAMS, [Point.of(0.5j)], np.array([[[1.0, 2j], [0.0, -1.0]]]), {'symbol': 'test'})

    field.to_csv(tmp_path / 'field.csv')
    field.to_json(tmp_path / 'field.json')

    lines = (tmp_path / 'field.csv').read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'z1_re,z1_im,b11_re,b11_im,b12_re,b12_im,b21_re,b21_im,b22_re,b22_im'
    assert lines[1] == '0,0.5,1,0,0,2,0,0,-1,0'
    data = json.loads((tmp_path / 'field.json').read_text(encoding='utf-8'))
    assert data['values'][0][0][1] == {'re': 0.0, 'im': 2.0}


def test_berezin_field_shape_mismatch():
    with pytest.raises(IllegalArgumentException):
        BerezinField(PARAMS, [Point.of(0.5j)], np.zeros((2, 1, 1)), {})


@pytest.mark.parametrize('z', [Point.of(0.0), Point.of(0.5)])
def test_berezin_of_identity_operator(z):
    actual = berezin_operator(identity_operator(table_for(40, 2)), z)

    np.testing.assert_allclose(actual, np.eye(2), atol=1e-6)


def test_berezin_of_zero_operator():
    table = table_for(8, 2)

    actual = berezin_operator(TruncatedOperator(table, np.zeros((table.size, table.size))), Point.of(0.3))

    np.testing.assert_array_equal(actual, np.zeros((2, 2)))


@pytest.mark.parametrize('z', [Point.of(0.0), Point.of(0.4j), Point.of(0.4 - 0.5j)])
def test_berezin_of_assembled_operator(z):
    b = DiagonalGeometric(TAU, 2)

    actual = berezin_operator(assemble(b, table_for(24, 2), RULES), z)

    np.testing.assert_allclose(actual, berezin_symbol(b, z, RULES), atol=5e-6)


def test_berezin_operator_table_mismatch():
    with pytest.raises(IllegalArgumentException):
        berezin_operator(identity_operator(table_for(8, 2)), Point.of(0.1), table_for(8, 1))


def test_bmo_of_constant():
    b = ScalarTimesIdentity(Constant(2 - 1j), 2)

    actual = bmo1_seminorm(b, RULES, points_on_grid(PARAMS, [0.0, 0.35, 0.7], 4))

    assert actual == pytest.approx(0.0, abs=1e-10)


def test_bmo_of_indicator_at_origin():
    actual = bmo1_seminorm(ScalarSymbol(Indicator(0.5)), RULES, [Point.of(0.0)])

    assert actual == pytest.approx(0.375, abs=1e-10)


@pytest.mark.parametrize('kind', list(NormKind))
def test_bmo_diagonal_geometric_below_scalar(kind):
    diagonal = bmo1_seminorm(DiagonalGeometric(TAU, 3), RULES, GRID, kind)
    scalar = bmo1_seminorm(ScalarSymbol(TAU), RULES, GRID, kind)

    assert diagonal <= scalar


def test_bmo_entrywise_bound():
    b = dense_symbol()
    rule = build_rule(PARAMS, 60, 96, (0.5, 0.7))

    actual = bmo1_profile(b, rule, GRID)

    for row in b.grid:
        for function in row:
            if function is not None:
                assert np.all(bmo1_profile(ScalarSymbol(function), rule, GRID) <= actual + 1e-12)


def test_bmo_empty_grid():
    with pytest.raises(IllegalArgumentException):
        bmo1_seminorm(ScalarSymbol(TAU), RULES, [])


def test_bloch_norm_of_constant():
    table = table_for(4, 2)
    coefficients = np.zeros(table.size, dtype=complex)
    coefficients[:2] = [1.0, -2j]

    actual = bloch_norm(coefficients, table, GRID)

    assert actual == 0.0


def test_bloch_norm_of_identity_function():
    table = table_for(4, 1)
    coefficients = np.zeros(table.size, dtype=complex)
    coefficients[table.index(MultiIndex.of(1), 1)] = table.norm_of(MultiIndex.of(1))

    actual = bloch_norm(coefficients, table, GRID)

    assert actual == pytest.approx(1.0, abs=1e-14)


def test_bloch_norm_of_square():
    table = table_for(4, 1)
    coefficients = np.zeros(table.size, dtype=complex)
    coefficients[table.index(MultiIndex.of(2), 1)] = table.norm_of(MultiIndex.of(2))
    grid = points_on_grid(PARAMS, [0.1, 0.3, math.sqrt(1 / 3), 0.7, 0.9], 3)

    actual = bloch_norm(coefficients, table, grid)

    assert actual == pytest.approx(2 * (2 / 3) * math.sqrt(1 / 3), abs=1e-12)


def test_bloch_norm_adds_partial_derivatives():
    params = SpaceParams(2, 0.0)
    table = enumerate_basis(params, 2, 1, build_rule(params, 3, 6))
    coefficients = np.zeros(table.size, dtype=complex)
    for m in (MultiIndex.of(1, 0), MultiIndex.of(0, 1)):
        coefficients[table.index(m, 1)] = table.norm_of(m)

    actual = bloch_norm(coefficients, table, [Point.zero(2), Point.of(0.3, 0.3j)])

    assert actual == pytest.approx(2.0, abs=1e-14)


def test_tail_decay_of_full_truncation():
    actual = tail_decay_profile(DiagonalGeometric(TAU, 3), RULES, GRID, [3])

    assert actual == [0.0]


def test_tail_decay_of_scalar_times_identity_is_flat():
    actual = tail_decay_profile(ScalarTimesIdentity(Indicator(0.5), 4), RULES, GRID, [0, 1, 2, 3])

    assert max(actual) - min(actual) < 1e-10
    assert actual[0] > 0.2


def test_tail_decay_of_diagonal_geometric():
    b = DiagonalGeometric(Indicator(0.5), 6)
    sup = max(berezin_symbol(ScalarSymbol(Indicator(0.5)), z, RULES)[0, 0].real for z in GRID)

    actual = tail_decay_profile(b, RULES, GRID, list(range(6)))

    for d0, value in enumerate(actual):
        assert value <= sup * 2.0 ** -d0 / math.sqrt(3) + 1e-10
    for first, second in zip(actual, actual[1:]):
        assert second == pytest.approx(first / 2, rel=1e-12)


def test_tail_decay_rejects_index():
    with pytest.raises(IllegalArgumentException):
        tail_decay_profile(DiagonalGeometric(TAU, 3), RULES, GRID, [4])
