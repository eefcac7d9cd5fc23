from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from bergmanlab.exceptions import IllegalArgumentException, IllegalStateException, PrecisionException
from bergmanlab.functions import parallel_map, require, return_values_as
from bergmanlab.geometry import Point, SpaceParams, mobius_nodes, normalized_kernel_nodes
from bergmanlab.quadrature import (
    QuadratureRule,
    build_rule,
    integrate,
    radial_moment_oracle,
    rule_for_degree,
    weighted_sum
)

if TYPE_CHECKING:
    from bergmanlab.cache import RuleCache
    from bergmanlab.toeplitz import TruncatedOperator

__all__ = [
    'MultiIndex',
    'BasisTable',
    'enumerate_multi_indices',
    'monomial_norm',
    'enumerate_basis',
    'basis_table',
    'kernel_coefficients',
    'project',
    'synthesize',
    'uz_matrix'
]

logger = logging.getLogger(__name__)

# relative agreement required between quadrature norms and the radial oracle
ORACLE_TOLERANCE = 1e-10
SHADOW_TOLERANCE = 1e-8
# squared norm a column of U_z may lose above the truncation degree
UZ_TAIL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MultiIndex:
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'exponents', tuple(int(k) for k in self.exponents))
        require(all(k >= 0 for k in self.exponents), f'exponents must be nonnegative, got {self.exponents}')

    @staticmethod
    def of(*exponents: int) -> MultiIndex:
        return MultiIndex(exponents)

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return self.total_degree, self.exponents

    def __len__(self):
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __repr__(self):
        return f'MultiIndex{self.exponents}'


@return_values_as(tuple)
def enumerate_multi_indices(n: int, max_degree: int) -> Iterator[MultiIndex]:
    """
    All multi-indices of length n with total degree at most ``max_degree``, by total degree and then
    lexicographically.
    """

    require(n >= 1, f'n must be positive, got {n}')
    require(max_degree >= 0, f'max degree must be nonnegative, got {max_degree}')
    for degree in range(max_degree + 1):
        for exponents in itertools.product(range(degree + 1), repeat=n):
            if sum(exponents) == degree:
                yield MultiIndex(exponents)


def _monomial_column(nodes: np.ndarray, exponents: Sequence[int]) -> np.ndarray:
    values = np.ones(nodes.shape[0], dtype=complex)
    for k, e in enumerate(exponents):
        if e:
            values = values * nodes[:, k] ** e
    return values


@dataclass(frozen=True, eq=False)
class BasisTable:
    """
    The truncated orthonormal basis z^m e_j / ||z^m|| of A^2_alpha(B_n, C^d) for |m| <= max_degree. Entries
    are ordered by (total degree, exponents, channel); channel j of multi-index number i sits at position
    i * d + (j - 1).
    """

    params: SpaceParams
    max_degree: int
    channels: int
    multi_indices: Tuple[MultiIndex, ...]
    norms: np.ndarray
    exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        require(self.channels >= 1, f'channels must be positive, got {self.channels}')
        require(len(self.multi_indices) == self.norms.size, 'one norm per multi-index is required')
        require(bool(np.all(self.norms > 0)), 'basis norms must be positive')
        exponents = np.array([m.exponents for m in self.multi_indices], dtype=int).reshape(-1, self.params.n)
        exponents.setflags(write=False)
        self.norms.setflags(write=False)
        object.__setattr__(self, 'exponents', exponents)

    @property
    def monomial_count(self) -> int:
        return len(self.multi_indices)

    @property
    def size(self) -> int:
        return self.monomial_count * self.channels

    @property
    def entries(self) -> List[Tuple[MultiIndex, int]]:
        return [(m, j) for m in self.multi_indices for j in range(1, self.channels + 1)]

    @property
    def degrees(self) -> np.ndarray:
        """ Total degree of every entry, in entry order. """

        return np.repeat(self.exponents.sum(axis=1), self.channels)

    def index(self, m: MultiIndex, channel: int) -> int:
        """
        Position of the entry (m, channel); channels are numbered from 1.

        :raise IllegalArgumentException: when the entry is not part of the table
        """

        require(1 <= channel <= self.channels, f'channel {channel} is outside 1..{self.channels}')
        try:
            position = self.multi_indices.index(m)
        except ValueError as e:
            raise IllegalArgumentException(f'{m} is not in a table of degree {self.max_degree}') from e
        return position * self.channels + channel - 1

    def block(self, max_degree: int) -> np.ndarray:
        """ Entry positions of total degree at most ``max_degree``. """

        return np.flatnonzero(self.degrees <= max_degree)

    def norm_of(self, m: MultiIndex) -> float:
        return float(self.norms[self.multi_indices.index(m)])

    def monomial_values(self, nodes: np.ndarray) -> np.ndarray:
        """
        The normalized monomials at every node as a (q, M) array, one column per multi-index.
        """

        nodes = np.asarray(nodes, dtype=complex)
        values = np.ones((nodes.shape[0], self.monomial_count), dtype=complex)
        for k in range(self.params.n):
            values *= nodes[:, k, None] ** self.exponents[None, :, k]
        return values / self.norms

    def with_channels(self, channels: int) -> BasisTable:
        return BasisTable(self.params, self.max_degree, channels, self.multi_indices, self.norms.copy())

    def same_as(self, other: BasisTable) -> bool:
        return (self.params == other.params and self.max_degree == other.max_degree
                and self.channels == other.channels)

    def to_dict(self) -> dict:
        return {
            'params': self.params.to_dict(),
            'max_degree': self.max_degree,
            'channels': self.channels,
            'size': self.size
        }


def monomial_norm(params: SpaceParams, rule: QuadratureRule, m: MultiIndex) -> float:
    """
    The norm sqrt(integral of |z^m|^2 d nu_alpha) computed with the rule.

    :raise PrecisionException: when the rule is not exact for degree 2|m|
    """

    require(len(m) == params.n, f'{m} does not have {params.n} exponents')
    if rule.declared_exactness < 2 * m.total_degree:
        raise PrecisionException(
            f'rule exact to degree {rule.declared_exactness} cannot integrate |z^m|^2 for |m| = {m.total_degree}')
    return math.sqrt(integrate(rule, lambda nodes: np.abs(_monomial_column(nodes, m.exponents)) ** 2).real)


def _shadow_point(params: SpaceParams) -> Point:
    if params.n == 1:
        return Point.of(0.25 * complex(math.cos(0.3), math.sin(0.3)))
    return Point.of(0.2, 0.15j)


def _check_kernel_coefficients(table: BasisTable) -> None:
    z = _shadow_point(table.params)
    rule = build_rule(table.params, table.max_degree // 2 + 4, table.max_degree + 20)
    closed = kernel_coefficients(table.with_channels(1), z, np.ones(1))
    values = rule.weights * normalized_kernel_nodes(table.params, rule.nodes, z.coords)

    for i, m in enumerate(table.multi_indices):
        column = _monomial_column(rule.nodes, m.exponents) / table.norms[i]
        quadrature = complex(np.sum(values * np.conj(column)))
        if abs(quadrature - closed[i]) > SHADOW_TOLERANCE:
            raise IllegalStateException(
                f'kernel coefficient of {m} is {closed[i]} in closed form and {quadrature} by quadrature')


def enumerate_basis(params: SpaceParams, max_degree: int, channels: int, rule: QuadratureRule,
                    cache: Optional[RuleCache] = None, workers: int = 1) -> BasisTable:
    """
    Builds the basis table of all (m, j) with |m| <= max_degree and 1 <= j <= channels. Norms come from the
    rule and are cross-checked against the one-dimensional radial oracle; the closed-form kernel coefficients
    are compared with quadrature at a sample point.

    :raise PrecisionException: when the rule is not exact for degree 2 * max_degree
    :raise IllegalStateException: when the norms or the kernel coefficients fail their cross-checks
    """

    require(max_degree >= 0, f'max degree must be nonnegative, got {max_degree}')
    require(channels >= 1, f'channels must be positive, got {channels}')
    multi_indices = enumerate_multi_indices(params.n, max_degree)

    cached = cache.load_norms(params, max_degree) if cache is not None else None
    if cached is not None and cached.is_present() and cached.get()[0] == [m.exponents for m in multi_indices]:
        norms = cached.get()[1]
    else:
        norms = np.array(parallel_map(lambda m: monomial_norm(params, rule, m), multi_indices, workers))
        if cache is not None:
            cache.save_norms(params, max_degree, [m.exponents for m in multi_indices], norms)

    for m, norm in zip(multi_indices, norms):
        expected = math.sqrt(radial_moment_oracle(params, m.exponents))
        if abs(norm - expected) > ORACLE_TOLERANCE * expected:
            raise IllegalStateException(f'norm of {m} is {norm} by quadrature and {expected} by the radial oracle')

    table = BasisTable(params, max_degree, channels, multi_indices, norms)
    _check_kernel_coefficients(table)
    logger.debug('basis table n=%d alpha=%s D=%d d=%d size=%d', params.n, params.alpha, max_degree, channels,
                  table.size)
    return table


def basis_table(params: SpaceParams, max_degree: int, channels: int, cache: Optional[RuleCache] = None,
                workers: int = 1) -> BasisTable:
    """ The basis table with norms from the smallest rule exact to degree 2 * max_degree. """

    return enumerate_basis(params, max_degree, channels, rule_for_degree(params, 2 * max_degree), cache, workers)


def kernel_coefficients(table: BasisTable, z: Point, e: np.ndarray) -> np.ndarray:
    """
    Coefficients of k_z e in the table's orthonormal basis. With N = n + 1 + alpha the coefficient of
    (m, j) is (1 - |z|^2)^(N/2) (N)_|m| / m! conj(z^m) ||z^m|| e_j, the Taylor coefficients of
    (1 - <w, z>)^-N against the normalized monomials.
    """

    e = np.asarray(e, dtype=complex).reshape(-1)
    require(e.size == table.channels, f'vector of size {e.size} used with {table.channels} channels')
    require(bool(np.all(np.isfinite(e))), 'vector must be finite')
    require(z.dim == table.params.n, f'point of dimension {z.dim} used with n = {table.params.n}')

    big_n = table.params.kernel_exponent
    degrees = table.exponents.sum(axis=1)
    log_series = gammaln(big_n + degrees) - gammaln(big_n) - gammaln(table.exponents + 1).sum(axis=1)
    conj_power = np.prod(np.conj(z.coords)[None, :] ** table.exponents, axis=1)
    scale = (1.0 - z.norm ** 2) ** (big_n / 2.0)
    scalar = scale * np.exp(log_series) * conj_power * table.norms
    return np.kron(scalar, e)


def project(table: BasisTable, rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Coefficients <f, z^m e_j / ||z^m||> of a C^d valued function given at the rule's nodes as a (q, d) array.
    """

    values = np.asarray(f(rule.nodes), dtype=complex).reshape(rule.size, -1)
    require(values.shape[1] == table.channels, f'function has {values.shape[1]} channels, table {table.channels}')
    basis = np.conj(table.monomial_values(rule.nodes))
    return weighted_sum(rule.weights, basis[:, :, None] * values[:, None, :]).reshape(-1)


def synthesize(table: BasisTable, coefficients: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """
    Evaluates the expansion with the given coefficients at every node, as a (q, d) array.
    """

    coefficients = np.asarray(coefficients).reshape(table.monomial_count, table.channels)
    return table.monomial_values(nodes) @ coefficients


def uz_matrix(table: BasisTable, rule: QuadratureRule, z: Point) -> TruncatedOperator:
    """
    The matrix of U_z f = (f o phi_z) k_z on the truncated basis, entry [row, col] = <U_z phi_col, phi_row>.

    U_z is unitary, so a column keeps norm one unless part of it lies above degree D. The valid degree is the
    largest k <= D / 2 such that every column of degree at most k loses at most ``UZ_TAIL_TOLERANCE`` of its
    squared norm; products with U_z are then accurate to the square root of that on the block.
    """

    from bergmanlab.toeplitz import TruncatedOperator  # pylint: disable=import-outside-toplevel

    require(z.dim == table.params.n, f'point of dimension {z.dim} used with n = {table.params.n}')
    basis = table.monomial_values(rule.nodes)
    moved = table.monomial_values(mobius_nodes(z.coords, rule.nodes))
    weights = rule.weights * normalized_kernel_nodes(table.params, rule.nodes, z.coords)
    scalar = np.einsum('q,qa,qc->ac', weights, np.conj(basis), moved)
    matrix = np.kron(scalar, np.eye(table.channels))
    valid_degree = _uz_valid_degree(table, scalar, z)
    provenance = {'operator': 'U_z', 'z': list(z.coords), 'valid_degree': valid_degree}
    return TruncatedOperator(table, matrix, provenance, valid_degree)


def _uz_valid_degree(table: BasisTable, scalar: np.ndarray, z: Point) -> int:
    degrees = table.exponents.sum(axis=1)
    lost = 1.0 - np.sum(np.abs(scalar) ** 2, axis=0)
    leaking = degrees[(lost > UZ_TAIL_TOLERANCE) & (degrees <= table.max_degree // 2)]
    if leaking.size == 0:
        return table.max_degree // 2
    valid_degree = int(leaking.min()) - 1
    if valid_degree < 0:
        logger.warning('U_z at |z|=%.4g loses %.3g of the kernel above degree %d, no block is reliable', z.norm,
                       float(lost[0]), table.max_degree)
        return 0
    logger.debug('U_z at |z|=%.4g is reliable up to degree %d of %d', z.norm, valid_degree, table.max_degree)
    return valid_degree
