from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from bergmanlab.basis import BasisTable, MultiIndex, kernel_coefficients, uz_matrix
from bergmanlab.exceptions import IllegalArgumentException, PrecisionException
from bergmanlab.functions import parallel_map, require
from bergmanlab.geometry import Point, SpaceParams
from bergmanlab.io import read_json, to_jsonable, write_json
from bergmanlab.quadrature import QuadratureRule, RuleProvider
from bergmanlab.symbols import Symbol, pullback

__all__ = [
    'Rules',
    'TruncatedOperator',
    'identity_operator',
    'assemble',
    'apply_to_kernel',
    'conjugate',
    'truncation_matrices',
    'compose',
    'adjoint'
]

logger = logging.getLogger(__name__)

Rules = Union[QuadratureRule, RuleProvider]

# kernels past this radius lose mass beyond degree D unless D is large
_KERNEL_RADIUS = 0.9
_KERNEL_MIN_DEGREE = 60


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """
    The matrix of an operator on the truncated space of a basis table, ``matrix[row, col] = <S phi_col, phi_row>``.
    Entries of total degree up to ``valid_degree`` are reliable; for assembled Toeplitz matrices that is the
    whole table, for conjugated operators at most the degree D / 2 block, less as |z| grows.
    """

    table: BasisTable
    matrix: np.ndarray
    provenance: dict = field(default_factory=dict)
    valid_degree: Optional[int] = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        require(matrix.shape == (self.table.size, self.table.size),
                f'matrix of shape {matrix.shape} does not match a table of size {self.table.size}')
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        if self.valid_degree is None:
            object.__setattr__(self, 'valid_degree', self.table.max_degree)

    @property
    def size(self) -> int:
        return self.table.size

    def norm(self) -> float:
        """ The largest singular value. """

        return float(np.linalg.norm(self.matrix, 2)) if self.size else 0.0

    def singular_values(self) -> np.ndarray:
        """ Singular values in decreasing order. """

        return np.linalg.svd(self.matrix, compute_uv=False)

    def apply(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        require(coefficients.size == self.size, f'vector of size {coefficients.size} applied to size {self.size}')
        return self.matrix @ coefficients

    def valid_indices(self) -> np.ndarray:
        return self.table.block(self.valid_degree)

    def valid_block(self) -> np.ndarray:
        indices = self.valid_indices()
        return self.matrix[np.ix_(indices, indices)]

    def channel_block(self, row_channel: int, col_channel: int) -> np.ndarray:
        """
        The scalar matrix between channel ``col_channel`` and channel ``row_channel``, numbered from 1.
        """

        d = self.table.channels
        require(1 <= row_channel <= d and 1 <= col_channel <= d,
                f'channels ({row_channel}, {col_channel}) are outside 1..{d}')
        m = self.table.monomial_count
        return self.matrix.reshape(m, d, m, d)[:, row_channel - 1, :, col_channel - 1]

    def restrict_channels(self, channels: int) -> TruncatedOperator:
        """
        The compression to the first ``channels`` channels, an operator on the narrower table.
        """

        require(1 <= channels <= self.table.channels,
                f'cannot restrict {self.table.channels} channels to {channels}')
        d, m = self.table.channels, self.table.monomial_count
        matrix = self.matrix.reshape(m, d, m, d)[:, :channels, :, :channels].reshape(m * channels, m * channels)
        provenance = dict(self.provenance, restricted_channels=channels)
        return TruncatedOperator(self.table.with_channels(channels), matrix, provenance, self.valid_degree)

    def to_dict(self) -> dict:
        return {
            'table': self.table.to_dict(),
            'valid_degree': self.valid_degree,
            'provenance': self.provenance,
            'norm': self.norm()
        }

    def save(self, path: Union[str, Path], tolerances: Optional[dict] = None) -> Path:
        """
        Writes the matrix to ``<path>.npy`` and the table, provenance and tolerances to ``<path>.json``.

        :return: the path of the matrix file
        """

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        matrix_path = path.with_suffix('.npy')
        np.save(matrix_path, np.ascontiguousarray(self.matrix), allow_pickle=False)
        write_json(path.with_suffix('.json'), {
            'params': self.table.params.to_dict(),
            'max_degree': self.table.max_degree,
            'channels': self.table.channels,
            'exponents': [list(m.exponents) for m in self.table.multi_indices],
            'norms': self.table.norms,
            'valid_degree': self.valid_degree,
            'provenance': to_jsonable(self.provenance),
            'tolerances': tolerances or {}
        })
        logger.info('saved operator of size %d to %s', self.size, matrix_path)
        return matrix_path

    @staticmethod
    def load(path: Union[str, Path]) -> TruncatedOperator:
        path = Path(path)
        sidecar = read_json(path.with_suffix('.json'))
        params = SpaceParams(**sidecar['params'])
        table = BasisTable(params, sidecar['max_degree'], sidecar['channels'],
                           tuple(MultiIndex(tuple(e)) for e in sidecar['exponents']),
                           np.array(sidecar['norms'], dtype=float))
        matrix = np.load(path.with_suffix('.npy'), allow_pickle=False)
        return TruncatedOperator(table, matrix, sidecar['provenance'], sidecar['valid_degree'])


def identity_operator(table: BasisTable) -> TruncatedOperator:
    return TruncatedOperator(table, np.eye(table.size, dtype=complex), {'operator': 'identity'})


def _entry_block(values: np.ndarray, weights: np.ndarray, basis: np.ndarray, diagonal: bool) -> np.ndarray:
    scaled = weights * values
    if diagonal:
        return np.diag(np.einsum('q,qa,qa->a', scaled, np.conj(basis), basis))
    return np.einsum('q,qa,qc->ac', scaled, np.conj(basis), basis)


def assemble(b: Symbol, table: BasisTable, rules: Rules, fast_path: Optional[bool] = None,
             workers: int = 1) -> TruncatedOperator:
    """
    Assembles the truncated Toeplitz matrix <T_b phi_i, phi_j> = integral of <b(w) phi_i(w), phi_j(w)> d nu_alpha.
    Every structurally non-zero entry of the symbol contributes one scalar block; block (l, k) holds the
    integrals of b_lk against conj(phi_a) phi_c.

    For radial symbols the fast path keeps only the monomial diagonal of every block, since the angular
    integrals vanish off the diagonal. By default it is taken whenever the symbol is radial.

    :param b: the symbol, with as many channels as the table
    :param table: the basis table
    :param rules: a fixed rule or a provider resolved at the symbol's radius and jump radii
    :param fast_path: force or disable the radial fast path
    :param workers: threads used across symbol entries
    :raise IllegalArgumentException: when the symbol and the table disagree on the channels
    :raise PrecisionException: when the rule cannot integrate products of degree 2D exactly
    """

    if b.channels != table.channels:
        raise IllegalArgumentException(f'symbol with {b.channels} channels assembled on {table.channels} channels')
    degree = 2 * table.max_degree
    rule = rules.resolve(b.resolution_radius, b.jump_radii, degree)
    if rule.declared_exactness < degree:
        raise PrecisionException(f'rule exact to degree {rule.declared_exactness} cannot assemble degree {degree}')
    missing = sorted(set(b.jump_radii) - set(rule.breakpoints))
    if missing:
        logger.warning('rule does not split at the jump radii %s of the symbol', missing)

    radial = b.is_radial
    if fast_path is None:
        fast_path = radial
    elif fast_path and not radial:
        raise IllegalArgumentException('the radial fast path needs a radial symbol')

    pulled = pullback(b, rule)
    basis = table.monomial_values(pulled.function_nodes)
    entries = pulled.symbol.entries(pulled.symbol_nodes)
    support = sorted(entries)
    blocks = parallel_map(lambda e: _entry_block(entries[e], pulled.weights, basis, fast_path), support, workers)

    d, m = table.channels, table.monomial_count
    matrix = np.zeros((m, d, m, d), dtype=complex)
    for (row, col), block in zip(support, blocks):
        matrix[:, row, :, col] = block
    logger.debug('assembled %s on D=%d d=%d with %d nodes%s', b.kind, table.max_degree, d, rule.size,
                 ' (radial fast path)' if fast_path else '')
    provenance = {'operator': 'toeplitz', 'symbol': b.to_dict(), 'rule': rule.describe(), 'fast_path': fast_path}
    return TruncatedOperator(table, matrix.reshape(m * d, m * d), provenance)


def apply_to_kernel(s: TruncatedOperator, z: Point, e: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Applies the operator to the truncated normalized kernel k_z e; the norm is the l2 norm of the coefficients.
    """

    if z.norm > _KERNEL_RADIUS and s.table.max_degree < _KERNEL_MIN_DEGREE:
        logger.warning('kernel at |z|=%.4g is truncated at degree %d, norms are underestimated', z.norm,
                       s.table.max_degree)
    coefficients = s.matrix @ kernel_coefficients(s.table, z, e)
    return coefficients, float(np.linalg.norm(coefficients))


def conjugate(s: TruncatedOperator, z: Point, rules: Rules) -> TruncatedOperator:
    """
    S^z = U_z S U_z, reliable on the valid block of U_z, which shrinks as |z| grows.
    """

    rule = rules.resolve(z.norm, (), 2 * s.table.max_degree)
    u = uz_matrix(s.table, rule, z)
    matrix = u.matrix @ s.matrix @ u.matrix
    provenance = {'operator': 'conjugate', 'z': list(z.coords), 'base': s.provenance}
    return TruncatedOperator(s.table, matrix, provenance, min(s.valid_degree, u.valid_degree))


def truncation_matrices(table: BasisTable, d0: int) -> Tuple[TruncatedOperator, TruncatedOperator]:
    """
    The projections onto channels 1..d0 and d0+1..d, in this order; they sum to the identity.
    """

    require(0 <= d0 <= table.channels, f'truncation index {d0} is outside 0..{table.channels}')
    upper = np.tile(np.arange(table.channels) < d0, table.monomial_count)
    return (TruncatedOperator(table, np.diag(upper.astype(complex)), {'operator': 'upper', 'd0': d0}),
            TruncatedOperator(table, np.diag((~upper).astype(complex)), {'operator': 'lower', 'd0': d0}))


def compose(s: TruncatedOperator, t: TruncatedOperator) -> TruncatedOperator:
    """
    The product S T.

    :raise IllegalArgumentException: when the operators live on different tables
    """

    if not s.table.same_as(t.table):
        raise IllegalArgumentException(f'cannot compose operators on {s.table.to_dict()} and {t.table.to_dict()}')
    return TruncatedOperator(s.table, s.matrix @ t.matrix, {'operator': 'compose', 'left': s.provenance,
                                                             'right': t.provenance},
                             min(s.valid_degree, t.valid_degree))


def adjoint(s: TruncatedOperator) -> TruncatedOperator:
    return TruncatedOperator(s.table, s.matrix.conj().T, {'operator': 'adjoint', 'base': s.provenance},
                             s.valid_degree)
