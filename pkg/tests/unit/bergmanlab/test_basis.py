import math
from unittest import mock

import numpy as np
import pytest

from bergmanlab import basis
from bergmanlab.basis import MultiIndex, enumerate_basis, enumerate_multi_indices, kernel_coefficients
from bergmanlab.cache import RuleCache
from bergmanlab.exceptions import IllegalArgumentException, IllegalStateException, PrecisionException
from bergmanlab.geometry import Point, SpaceParams, kernel_phase, mobius, normalized_kernel_nodes
from bergmanlab.quadrature import RuleProvider, build_rule


def rule_for(params, max_degree):
    return build_rule(params, max_degree // 2 + 2, 2 * max_degree + 2)


def table_for(params, max_degree, channels=1):
    return enumerate_basis(params, max_degree, channels, rule_for(params, max_degree))


def samples_monomial_norm():
    return [
        ((0,), 1.0),
        ((1,), math.sqrt(1 / 2)),
        ((2,), math.sqrt(1 / 3))
    ]


@pytest.mark.parametrize('exponents, expected', samples_monomial_norm())
def test_monomial_norm(exponents, expected):
    actual = basis.monomial_norm(SpaceParams(1, 0.0), build_rule(SpaceParams(1, 0.0), 4, 8), MultiIndex(exponents))

    assert actual == pytest.approx(expected, abs=1e-14)


def test_monomial_norm_insufficient_exactness():
    rule = build_rule(SpaceParams(1, 0.0), 1, 2)

    with pytest.raises(PrecisionException):
        basis.monomial_norm(SpaceParams(1, 0.0), rule, MultiIndex.of(1))


def test_multi_index():
    actual = MultiIndex.of(2, 3)

    assert actual.total_degree == 5
    assert actual.sort_key == (5, (2, 3))
    assert list(actual) == [2, 3]


def test_multi_index_rejects_negative_exponent():
    with pytest.raises(IllegalArgumentException):
        MultiIndex.of(1, -1)


def test_enumerate_multi_indices_ordering():
    actual = enumerate_multi_indices(2, 2)

    assert [m.exponents for m in actual] == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]


@pytest.mark.parametrize('n, max_degree, channels, expected', [
    (1, 3, 2, 8),
    (2, 2, 1, 6),
    (2, 4, 3, 45),
    (1, 0, 4, 4)
])
def test_enumerate_basis_count(n, max_degree, channels, expected):
    actual = table_for(SpaceParams(n, 0.5), max_degree, channels)

    assert actual.size == expected
    assert len(actual.entries) == expected


def test_enumerate_basis_entry_order():
    actual = table_for(SpaceParams(2, 0.0), 1, 2)

    assert [(m.exponents, j) for m, j in actual.entries] == [
        ((0, 0), 1), ((0, 0), 2), ((0, 1), 1), ((0, 1), 2), ((1, 0), 1), ((1, 0), 2)
    ]
    assert actual.index(MultiIndex.of(1, 0), 2) == 5
    np.testing.assert_array_equal(actual.degrees, [0, 0, 1, 1, 1, 1])
    np.testing.assert_array_equal(actual.block(0), [0, 1])


def test_basis_table_index_outside_table():
    table = table_for(SpaceParams(1, 0.0), 2)

    with pytest.raises(IllegalArgumentException):
        table.index(MultiIndex.of(3), 1)
    with pytest.raises(IllegalArgumentException):
        table.index(MultiIndex.of(1), 2)


@pytest.mark.parametrize('n, max_degree', [(1, 12), (2, 6)])
def test_basis_gram_is_identity(n, max_degree):
    params = SpaceParams(n, 1.5)
    rule = rule_for(params, max_degree)
    table = enumerate_basis(params, max_degree, 1, rule)
    values = table.monomial_values(rule.nodes)

    actual = np.einsum('q,qa,qb->ab', rule.weights, np.conj(values), values)

    np.testing.assert_allclose(actual, np.eye(table.monomial_count), atol=1e-8)


def test_basis_norms_decrease_in_degree_and_alpha():
    low = table_for(SpaceParams(1, 0.0), 8)
    high = table_for(SpaceParams(1, 2.0), 8)

    assert np.all(np.diff(low.norms) < 0)
    assert np.all(high.norms[1:] < low.norms[1:])
    assert high.norms[0] == pytest.approx(1.0)


def test_enumerate_basis_rejects_coarse_rule():
    with pytest.raises(PrecisionException):
        enumerate_basis(SpaceParams(1, 0.0), 6, 1, build_rule(SpaceParams(1, 0.0), 2, 8))


def test_enumerate_basis_oracle_disagreement():
    with mock.patch('bergmanlab.basis.radial_moment_oracle', return_value=0.5):
        with pytest.raises(IllegalStateException):
            table_for(SpaceParams(1, 0.0), 2)


def test_enumerate_basis_uses_cache(tmp_path):
    params = SpaceParams(1, 1.0)
    cache = RuleCache(tmp_path)
    first = enumerate_basis(params, 4, 1, rule_for(params, 4), cache=cache)

    with mock.patch('bergmanlab.basis.monomial_norm') as monomial_norm:
        second = enumerate_basis(params, 4, 1, rule_for(params, 4), cache=cache)

    monomial_norm.assert_not_called()
    np.testing.assert_array_equal(first.norms, second.norms)


def test_basis_table_with_channels():
    table = table_for(SpaceParams(1, 0.0), 3)

    actual = table.with_channels(3)

    assert actual.size == 12
    np.testing.assert_array_equal(actual.norms, table.norms)


def test_basis_table_matches_explicit_rule():
    params = SpaceParams(2, 0.5)

    actual = basis.basis_table(params, 3, 2)

    assert actual.size == 20
    assert actual.same_as(table_for(params, 3, 2))


def test_kernel_coefficients_at_origin():
    table = table_for(SpaceParams(2, 0.0), 2, 2)
    e = np.array([0.6, 0.8j])

    actual = kernel_coefficients(table, Point.zero(2), e)

    expected = np.zeros(table.size, dtype=complex)
    expected[:2] = e
    np.testing.assert_allclose(actual, expected, atol=1e-15)


@pytest.mark.parametrize('radius', [0.5, 0.8])
def test_kernel_coefficients_norm_converges(radius):
    params = SpaceParams(1, 0.0)
    table = enumerate_basis(params, 40, 1, build_rule(params, 21, 82))

    actual = kernel_coefficients(table, Point.of(radius * 1j), np.ones(1))

    assert np.sum(np.abs(actual) ** 2) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize('params, z', [
    (SpaceParams(1, 0.0), Point.of(0.5)),
    (SpaceParams(1, 2.5), Point.of(-0.3 + 0.4j)),
    (SpaceParams(2, 1.0), Point.of(0.3, -0.2j))
])
def test_kernel_coefficients_match_quadrature(params, z):
    table = table_for(params, 6, 2)
    rule = build_rule(params, 20, 40) if params.n == 1 else build_rule(params, 10, 28)
    e = np.array([1.0, -0.5j])

    actual = kernel_coefficients(table, z, e)

    expected = basis.project(table, rule, lambda nodes: normalized_kernel_nodes(params, nodes, z.coords)[:, None] * e)
    np.testing.assert_allclose(actual, expected, atol=1e-8)


def test_kernel_coefficients_wrong_channels():
    table = table_for(SpaceParams(1, 0.0), 2, 2)

    with pytest.raises(IllegalArgumentException):
        kernel_coefficients(table, Point.of(0.1), np.ones(3))


def test_project_and_synthesize_polynomial():
    params = SpaceParams(2, 0.5)
    table = table_for(params, 3, 2)
    rule = rule_for(params, 3)

    def field(nodes):
        return np.stack([1 + 2 * nodes[:, 0] * nodes[:, 1], nodes[:, 1] ** 3], axis=1)

    coefficients = basis.project(table, rule, field)
    actual = basis.synthesize(table, coefficients, rule.nodes)

    np.testing.assert_allclose(actual, field(rule.nodes), atol=1e-12)


def test_uz_matrix_at_origin():
    params = SpaceParams(1, 0.0)
    table = table_for(params, 5, 2)

    actual = basis.uz_matrix(table, rule_for(params, 5), Point.zero(1))

    expected = np.diag(np.repeat([(-1.0) ** k for k in range(6)], 2))
    np.testing.assert_allclose(actual.matrix, expected, atol=1e-13)


@pytest.mark.parametrize('params, z', [
    (SpaceParams(1, 0.0), Point.of(0.2)),
    (SpaceParams(1, 1.5), Point.of(0.1 - 0.15j))
])
def test_uz_matrix_is_involution_on_valid_block(params, z):
    max_degree = 20
    table = table_for(params, max_degree)
    uz = basis.uz_matrix(table, RuleProvider(params).resolve(z.norm, degree=2 * max_degree), z)
    block = uz.valid_indices()

    actual = (uz.matrix @ uz.matrix)[np.ix_(block, block)]

    assert 0 < uz.valid_degree < max_degree // 2
    np.testing.assert_allclose(actual, np.eye(block.size), atol=1e-6)


@pytest.mark.parametrize('radius', [0.2, 0.4])
def test_uz_matrix_columns_are_unit_on_valid_block(radius):
    params = SpaceParams(1, 0.0)
    max_degree = 24
    table = table_for(params, max_degree)
    uz = basis.uz_matrix(table, RuleProvider(params).resolve(radius, degree=2 * max_degree), Point.of(radius * 1j))

    actual = np.linalg.norm(uz.matrix[:, uz.valid_indices()], axis=0)

    assert np.all(actual <= 1 + 1e-8)
    assert np.all(1 - actual ** 2 <= basis.UZ_TAIL_TOLERANCE)
    assert uz.provenance['valid_degree'] == uz.valid_degree


def test_uz_matrix_valid_degree_shrinks_with_radius():
    params = SpaceParams(1, 0.0)
    max_degree = 24
    table = table_for(params, max_degree)

    def valid_degree(radius):
        rule = RuleProvider(params).resolve(radius, degree=2 * max_degree)
        return basis.uz_matrix(table, rule, Point.of(radius)).valid_degree

    assert valid_degree(0.0) == max_degree // 2
    assert valid_degree(0.2) > valid_degree(0.4) == 2
    leaking = np.linalg.norm(basis.uz_matrix(table, RuleProvider(params).resolve(0.4, degree=2 * max_degree),
                                             Point.of(0.4)).matrix[:, table.block(max_degree // 2)], axis=0)
    assert np.min(leaking) < 0.9


def test_uz_matrix_without_reliable_block_warns():
    params = SpaceParams(1, 0.0)
    table = table_for(params, 4)

    with mock.patch.object(basis.logger, 'warning') as warning:
        actual = basis.uz_matrix(table, RuleProvider(params).resolve(0.6, degree=8), Point.of(0.6))

    assert actual.valid_degree == 0
    warning.assert_called_once()


@pytest.mark.parametrize('params, z, a, max_degree, points', [
    (SpaceParams(1, 0.0), Point.of(0.2), Point.of(0.15j), 20, None),
    (SpaceParams(1, 0.5), Point.of(-0.1 + 0.1j), Point.of(0.2), 20, None),
    (SpaceParams(2, 0.0), Point.of(0.1, 0.1j), Point.of(-0.15, 0.05), 6, (10, 20))
])
def test_uz_matrix_moves_normalized_kernels(params, z, a, max_degree, points):
    table = table_for(params, max_degree, 2)
    rule = build_rule(params, *points) if points else RuleProvider(params).resolve(z.norm, degree=2 * max_degree)
    uz = basis.uz_matrix(table, rule, z)
    e = np.array([0.6, 0.8])
    block = table.block(max_degree // 2)

    actual = (uz.matrix @ kernel_coefficients(table, a, e))[block]

    expected = kernel_phase(params, z, a) * kernel_coefficients(table, mobius(params, z, a), e)[block]
    np.testing.assert_allclose(actual, expected, atol=1e-6)
