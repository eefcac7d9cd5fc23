from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from bergmanlab.basis import BasisTable, kernel_coefficients
from bergmanlab.enums import NormKind
from bergmanlab.functions import parallel_map, require
from bergmanlab.geometry import Point, SpaceParams, mobius, normalized_kernel_nodes
from bergmanlab.io import write_csv, write_json
from bergmanlab.norms import diagonal_norms, pointwise_norms
from bergmanlab.quadrature import weighted_sum
from bergmanlab.settings import NormSearchSettings
from bergmanlab.symbols import MobiusComposed, Symbol, pullback, tail_truncate
from bergmanlab.toeplitz import Rules, TruncatedOperator

__all__ = [
    'BerezinField',
    'berezin_symbol',
    'berezin_field',
    'berezin_operator',
    'bmo1_profile',
    'bmo1_seminorm',
    'bloch_norm',
    'tail_decay_profile'
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BerezinField:
    """
    Berezin transforms sampled on a grid; ``values`` is a (len(grid), d, d) stack.
    """

    params: SpaceParams
    grid: List[Point]
    values: np.ndarray
    source: dict

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        require(values.ndim == 3 and values.shape[0] == len(self.grid) and values.shape[1] == values.shape[2],
                f'expected one d x d value per grid point, got shape {values.shape}')
        object.__setattr__(self, 'values', values)

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    def norms(self, kind: NormKind = NormKind.OP_2TO2, settings: Optional[NormSearchSettings] = None) -> np.ndarray:
        return pointwise_norms(self.values, kind, settings)

    def sup_norm(self, kind: NormKind = NormKind.OP_2TO2, settings: Optional[NormSearchSettings] = None) -> float:
        """ Grid maximum of the pointwise norm, a lower bound for the supremum over the ball. """

        return float(np.max(self.norms(kind, settings), initial=0.0))

    def header(self) -> List[str]:
        columns = [f'z{k}_{part}' for k in range(1, self.params.n + 1) for part in ('re', 'im')]
        columns += [f'b{j}{k}_{part}' for j in range(1, self.channels + 1) for k in range(1, self.channels + 1)
                    for part in ('re', 'im')]
        return columns

    def rows(self) -> List[list]:
        rows = []
        for z, value in zip(self.grid, self.values):
            row = [part for c in z.coords for part in (c.real, c.imag)]
            row += [part for c in value.ravel() for part in (c.real, c.imag)]
            rows.append(row)
        return rows

    def to_csv(self, path: Union[str, Path]) -> Path:
        return write_csv(path, self.header(), self.rows())

    def to_dict(self) -> dict:
        return {
            'params': self.params.to_dict(),
            'source': self.source,
            'grid': [list(z.coords) for z in self.grid],
            'values': self.values
        }

    def to_json(self, path: Union[str, Path]) -> Path:
        return write_json(path, self.to_dict())


def _concentration(b: Symbol, params: SpaceParams, z: Point) -> float:
    if isinstance(b, MobiusComposed):
        return mobius(params, b.point, z).norm
    return z.norm


def _symbol_values(b: Symbol, nodes: np.ndarray) -> np.ndarray:
    if not b.is_diagonal:
        return b.evaluate(nodes)
    values = np.zeros((nodes.shape[0], b.channels), dtype=complex)
    for (i, _), entry in b.entries(nodes).items():
        values[:, i] = entry
    return values


def _kernel_average(b: Symbol, z: Point, rules: Rules, transform: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Integral of |k_z(w)|^2 transform(b(w)) d nu_alpha(w). For diagonal symbols ``transform`` receives the (q, d)
    array of diagonals, otherwise the (q, d, d) stack of matrices.
    """

    params = rules.params
    require(z.dim == params.n, f'point of dimension {z.dim} used with n = {params.n}')
    rule = rules.resolve(_concentration(b, params, z), b.jump_radii)
    pulled = pullback(b, rule)
    weights = pulled.weights * np.abs(normalized_kernel_nodes(params, pulled.function_nodes, z.coords)) ** 2
    return weighted_sum(weights, transform(_symbol_values(pulled.symbol, pulled.symbol_nodes)))


def berezin_symbol(b: Symbol, z: Point, rules: Rules) -> np.ndarray:
    """
    The Berezin transform b~(z) = integral of |k_z(w)|^2 b(w) d nu_alpha(w) as a d x d matrix.

    :raise PrecisionException: when a fixed resolution falls short of the policy at z
    """

    value = _kernel_average(b, z, rules, lambda values: values)
    return np.diag(value) if value.ndim == 1 else value


def berezin_field(b: Symbol, grid: Sequence[Point], rules: Rules, workers: int = 1) -> BerezinField:
    grid = list(grid)
    values = parallel_map(lambda z: berezin_symbol(b, z, rules), grid, workers)
    shape = (0, b.channels, b.channels)
    return BerezinField(rules.params, grid, np.array(values) if values else np.zeros(shape),
                        {'symbol': b.to_dict()})


def berezin_operator(s: TruncatedOperator, z: Point, table: Optional[BasisTable] = None) -> np.ndarray:
    """
    The Berezin transform of an operator, entry [y, x] = <S k_z e_x, k_z e_y> from the truncated kernel
    coefficients.
    """

    table = table or s.table
    require(table.same_as(s.table), 'the operator is not defined on the given table')
    columns = np.stack([kernel_coefficients(table, z, e) for e in np.eye(table.channels)], axis=1)
    return columns.conj().T @ s.matrix @ columns


def _deviation_norms(values: np.ndarray, center: np.ndarray, kind: NormKind,
                     settings: Optional[NormSearchSettings]) -> np.ndarray:
    if values.ndim == 2:
        return diagonal_norms(values - np.diagonal(center), kind)
    return pointwise_norms(values - center, kind, settings)


def _oscillation(b: Symbol, z: Point, rules: Rules, kind: NormKind, settings: Optional[NormSearchSettings]) -> float:
    center = berezin_symbol(b, z, rules)
    value = _kernel_average(b, z, rules, lambda values: _deviation_norms(values, center, kind, settings))
    return float(np.real(value))


def bmo1_profile(b: Symbol, rules: Rules, z_grid: Sequence[Point], kind: NormKind = NormKind.OP_2TO2,
                 settings: Optional[NormSearchSettings] = None, workers: int = 1) -> np.ndarray:
    """
    The mean oscillation integral of ||b o phi_z - b~(z)|| for every grid point. After the substitution
    w = phi_z(u) it is the |k_z|^2-weighted integral of ||b(u) - b~(z)||, so jumps of b stay radial.
    """

    z_grid = list(z_grid)
    require(len(z_grid) > 0, 'the z grid must not be empty')
    return np.array(parallel_map(lambda z: _oscillation(b, z, rules, kind, settings), z_grid, workers))


def bmo1_seminorm(b: Symbol, rules: Rules, z_grid: Sequence[Point], kind: NormKind = NormKind.OP_2TO2,
                  settings: Optional[NormSearchSettings] = None, workers: int = 1) -> float:
    """
    Grid maximum of the mean oscillation, a lower bound for the BMO seminorm.

    :raise IllegalArgumentException: for an empty grid
    """

    value = float(np.max(bmo1_profile(b, rules, z_grid, kind, settings, workers)))
    logger.debug('BMO seminorm (%s) of %s on %d points: %.12g', kind.value, b.kind, len(z_grid), value)
    return value


def _gradient(table: BasisTable, coefficients: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """ (q, n, d) array of the partial derivatives of the expansion. """

    coefficients = np.asarray(coefficients, dtype=complex).reshape(table.monomial_count, table.channels)
    gradient = np.zeros((nodes.shape[0], table.params.n, table.channels), dtype=complex)
    for k in range(table.params.n):
        lowered = table.exponents.copy()
        lowered[:, k] = np.maximum(lowered[:, k] - 1, 0)
        derivative = np.ones((nodes.shape[0], table.monomial_count), dtype=complex) * table.exponents[None, :, k]
        for i in range(table.params.n):
            derivative = derivative * nodes[:, i, None] ** lowered[None, :, i]
        gradient[:, k, :] = (derivative / table.norms) @ coefficients
    return gradient


def bloch_norm(coefficients: np.ndarray, table: BasisTable, grid: Sequence[Point]) -> float:
    """
    Grid maximum of (1 - |z|^2) ||grad f(z)|| for the expansion f with the given coefficients. The gradient norm
    adds the l1 norms of the n partial derivatives.
    """

    grid = list(grid)
    require(len(grid) > 0, 'the grid must not be empty')
    nodes = np.stack([z.coords for z in grid])
    gradient = _gradient(table, coefficients, nodes)
    weights = 1.0 - np.sum(np.abs(nodes) ** 2, axis=1)
    return float(np.max(weights * np.sum(np.abs(gradient), axis=(1, 2))))


def tail_decay_profile(b: Symbol, rules: Rules, z_grid: Sequence[Point], d_values: Sequence[int],
                       workers: int = 1) -> List[float]:
    """
    For every d0 the grid maximum of the Berezin transform of w -> ||b_(d0)(w)||, the operator norm of the symbol
    with its first d0 channels removed.

    :raise IllegalArgumentException: when some d0 exceeds the channel dimension
    """

    z_grid = list(z_grid)
    require(len(z_grid) > 0, 'the z grid must not be empty')
    zero = np.zeros((b.channels, b.channels))
    profile = []
    for d0 in d_values:
        tail = tail_truncate(b, d0)

        def average(z: Point, symbol: Symbol = tail) -> float:
            return float(np.real(_kernel_average(
                symbol, z, rules, lambda values: _deviation_norms(values, zero, NormKind.OP_2TO2, None))))

        profile.append(max(parallel_map(average, z_grid, workers)))
    logger.debug('tail decay profile of %s: %s', b.kind, profile)
    return profile
