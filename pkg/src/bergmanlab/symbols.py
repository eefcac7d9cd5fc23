from __future__ import annotations

import abc
import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Optional, Tuple, Type, Union

import numpy as np

from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.functions import require
from bergmanlab.geometry import Point, mobius_nodes, normalized_kernel_nodes
from bergmanlab.option import Option
from bergmanlab.quadrature import QuadratureRule

__all__ = [
    'ScalarFunction',
    'Constant',
    'Indicator',
    'RadialPower',
    'Monomial',
    'Product',
    'Sum',
    'Symbol',
    'ScalarSymbol',
    'ScalarTimesIdentity',
    'DiagonalGeometric',
    'DenseMatrix',
    'TailTruncated',
    'CornerTruncated',
    'Adjoint',
    'LiftBkj',
    'LiftA1j',
    'LiftA2kj',
    'MobiusComposed',
    'Pullback',
    'evaluate',
    'tail_truncate',
    'corner_truncate',
    'adjoint_symbol',
    'compose_mobius',
    'pullback',
    'parse_symbol'
]

logger = logging.getLogger(__name__)

Entry = Tuple[int, int]


def _complex(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(value.get('re', 0.0), value.get('im', 0.0))
    return complex(value)


def _complex_to_dict(value: complex) -> Union[float, dict]:
    if value.imag == 0.0:
        return value.real
    return {'re': value.real, 'im': value.imag}


def _lookup(registry: Dict[str, type], data: Any, family: str) -> type:
    if not isinstance(data, dict) or 'kind' not in data:
        raise IllegalArgumentException(f'{family} description must be a mapping with a kind, got {data!r}')
    return Option.of_nullable(registry.get(data['kind'])).or_else_raise(
        IllegalArgumentException, f'unknown {family} kind {data["kind"]!r}, expected one of {sorted(registry)}')


class ScalarFunction(abc.ABC):
    """
    A complex function on the ball evaluated on (q, n) node arrays.
    """

    kind: ClassVar[str] = ''
    _kinds: ClassVar[Dict[str, Type[ScalarFunction]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.kind:
            ScalarFunction._kinds[cls.kind] = cls

    @abc.abstractmethod
    def values(self, nodes: np.ndarray) -> np.ndarray:
        """ One complex value per node row. """

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return ()

    @property
    def is_radial(self) -> bool:
        """ True when the value depends only on the moduli |w_1|, ..., |w_n|. """

        return False

    @abc.abstractmethod
    def to_dict(self) -> dict:
        pass

    @staticmethod
    def from_dict(data: Any) -> ScalarFunction:
        """
        :raise IllegalArgumentException: for an unknown kind or invalid parameters
        """

        cls = _lookup(ScalarFunction._kinds, data, 'function')
        params = {k: v for k, v in data.items() if k != 'kind'}
        try:
            return cls.parse(params)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, IllegalArgumentException):
                raise
            raise IllegalArgumentException(f'invalid {cls.kind} function {params}: {e}') from e

    @classmethod
    def parse(cls, params: dict) -> ScalarFunction:
        return cls(**params)

    def __call__(self, w: Point) -> complex:
        return complex(self.values(w.as_nodes())[0])

    def __mul__(self, other: ScalarFunction) -> Product:
        return Product((self, other))

    def __add__(self, other: ScalarFunction) -> Sum:
        return Sum((self, other))


@dataclass(frozen=True)
class Constant(ScalarFunction):
    kind: ClassVar[str] = 'constant'

    value: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'value', _complex(self.value))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        return np.full(nodes.shape[0], self.value, dtype=complex)

    @property
    def is_radial(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'value': _complex_to_dict(self.value)}


@dataclass(frozen=True)
class Indicator(ScalarFunction):
    """ The indicator of the open ball of the given radius. """

    kind: ClassVar[str] = 'indicator'

    radius: float

    def __post_init__(self):
        require(0.0 <= self.radius <= 1.0, f'indicator radius must lie in [0, 1], got {self.radius}')
        object.__setattr__(self, 'radius', float(self.radius))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        return (np.linalg.norm(nodes, axis=1) < self.radius).astype(complex)

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return (self.radius,) if 0.0 < self.radius < 1.0 else ()

    @property
    def is_radial(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'radius': self.radius}


@dataclass(frozen=True)
class RadialPower(ScalarFunction):
    """ |w|^power """

    kind: ClassVar[str] = 'radial_power'

    power: float

    def __post_init__(self):
        require(self.power >= 0.0, f'power must be nonnegative, got {self.power}')
        object.__setattr__(self, 'power', float(self.power))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        return (np.linalg.norm(nodes, axis=1) ** self.power).astype(complex)

    @property
    def is_radial(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'power': self.power}


@dataclass(frozen=True)
class Monomial(ScalarFunction):
    """ w^p conj(w)^q """

    kind: ClassVar[str] = 'monomial'

    p: Tuple[int, ...]
    q: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'p', tuple(int(k) for k in self.p))
        object.__setattr__(self, 'q', tuple(int(k) for k in self.q))
        require(len(self.p) == len(self.q), f'exponents {self.p} and {self.q} differ in length')
        require(all(k >= 0 for k in self.p + self.q), 'exponents must be nonnegative')

    def values(self, nodes: np.ndarray) -> np.ndarray:
        if nodes.shape[1] != len(self.p):
            raise IllegalArgumentException(f'monomial with {len(self.p)} exponents evaluated in dimension '
                                           f'{nodes.shape[1]}')
        values = np.ones(nodes.shape[0], dtype=complex)
        for k, (pk, qk) in enumerate(zip(self.p, self.q)):
            values = values * nodes[:, k] ** pk * np.conj(nodes[:, k]) ** qk
        return values

    @property
    def is_radial(self) -> bool:
        return self.p == self.q

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'p': list(self.p), 'q': list(self.q)}


@dataclass(frozen=True)
class Product(ScalarFunction):
    kind: ClassVar[str] = 'product'

    factors: Tuple[ScalarFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(self.factors))
        require(len(self.factors) >= 1, 'a product needs at least one factor')

    @classmethod
    def parse(cls, params: dict) -> Product:
        return cls(tuple(ScalarFunction.from_dict(f) for f in params['factors']))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        values = self.factors[0].values(nodes)
        for factor in self.factors[1:]:
            values = values * factor.values(nodes)
        return values

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return tuple(sorted({r for f in self.factors for r in f.jump_radii}))

    @property
    def is_radial(self) -> bool:
        return all(f.is_radial for f in self.factors)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'factors': [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class Sum(ScalarFunction):
    kind: ClassVar[str] = 'sum'

    terms: Tuple[ScalarFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, 'terms', tuple(self.terms))
        require(len(self.terms) >= 1, 'a sum needs at least one term')

    @classmethod
    def parse(cls, params: dict) -> Sum:
        return cls(tuple(ScalarFunction.from_dict(f) for f in params['terms']))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        values = self.terms[0].values(nodes)
        for term in self.terms[1:]:
            values = values + term.values(nodes)
        return values

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return tuple(sorted({r for f in self.terms for r in f.jump_radii}))

    @property
    def is_radial(self) -> bool:
        return all(f.is_radial for f in self.terms)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'terms': [f.to_dict() for f in self.terms]}


class Symbol(abc.ABC):
    """
    An operator-valued symbol b: B_n -> C^(d x d). Evaluation produces the matrices
    [j, k] = <b(w) e_k, e_j>, so column k is the image of e_k; rows and columns are numbered from 0 here and
    channels from 1 in the constructors of the lifts.

    Kinds only list their structurally non-zero entries; consumers skip the rest.
    """

    kind: ClassVar[str] = ''
    _kinds: ClassVar[Dict[str, Type[Symbol]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.kind:
            Symbol._kinds[cls.kind] = cls

    @property
    @abc.abstractmethod
    def channels(self) -> int:
        pass

    @abc.abstractmethod
    def support(self) -> Tuple[Entry, ...]:
        """ Entries (row, col) that may be non-zero, sorted. """

    @abc.abstractmethod
    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        """ Values of the supported entries at every node. """

    @abc.abstractmethod
    def to_dict(self) -> dict:
        pass

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return ()

    @property
    def is_radial(self) -> bool:
        return False

    @property
    def resolution_radius(self) -> float:
        """ Distance from the origin where integrands against this symbol concentrate. """

        return 0.0

    @property
    def is_diagonal(self) -> bool:
        return all(row == col for row, col in self.support())

    def evaluate(self, nodes: np.ndarray) -> np.ndarray:
        """ The (q, d, d) stack of matrices at the node rows. """

        nodes = np.asarray(nodes, dtype=complex)
        values = np.zeros((nodes.shape[0], self.channels, self.channels), dtype=complex)
        for (row, col), entry in self.entries(nodes).items():
            values[:, row, col] = entry
        return values

    def __call__(self, w: Point) -> np.ndarray:
        return self.evaluate(w.as_nodes())[0]

    @staticmethod
    def from_dict(data: Any) -> Symbol:
        """
        :raise IllegalArgumentException: for an unknown kind or invalid parameters
        """

        cls = _lookup(Symbol._kinds, data, 'symbol')
        params = {k: v for k, v in data.items() if k != 'kind'}
        try:
            return cls.parse(params)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, IllegalArgumentException):
                raise
            raise IllegalArgumentException(f'invalid {cls.kind} symbol {params}: {e}') from e

    @classmethod
    @abc.abstractmethod
    def parse(cls, params: dict) -> Symbol:
        pass


def _check_channels(d: int) -> None:
    require(isinstance(d, (int, np.integer)) and d >= 1, f'channel dimension must be a positive integer, got {d}')


@dataclass(frozen=True)
class ScalarSymbol(Symbol):
    """ A scalar function acting on C. """

    kind: ClassVar[str] = 'scalar'

    function: ScalarFunction

    @property
    def channels(self) -> int:
        return 1

    def support(self) -> Tuple[Entry, ...]:
        return (0, 0),

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {(0, 0): self.function.values(nodes)}

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return self.function.jump_radii

    @property
    def is_radial(self) -> bool:
        return self.function.is_radial

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'function': self.function.to_dict()}

    @classmethod
    def parse(cls, params: dict) -> ScalarSymbol:
        return cls(ScalarFunction.from_dict(params['function']))


@dataclass(frozen=True)
class _DiagonalSymbol(Symbol):
    function: ScalarFunction
    d: int

    def __post_init__(self):
        _check_channels(self.d)
        object.__setattr__(self, 'd', int(self.d))

    @property
    def channels(self) -> int:
        return self.d

    @abc.abstractmethod
    def factors(self) -> np.ndarray:
        pass

    def support(self) -> Tuple[Entry, ...]:
        return tuple((i, i) for i in range(self.d))

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        values = self.function.values(nodes)
        return {(i, i): factor * values for i, factor in enumerate(self.factors())}

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return self.function.jump_radii

    @property
    def is_radial(self) -> bool:
        return self.function.is_radial

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'function': self.function.to_dict(), 'channels': self.d}

    @classmethod
    def parse(cls, params: dict) -> Symbol:
        return cls(ScalarFunction.from_dict(params['function']), params['channels'])


@dataclass(frozen=True)
class ScalarTimesIdentity(_DiagonalSymbol):
    """ tau(w) I_d """

    kind: ClassVar[str] = 'scalar_times_identity'

    def factors(self) -> np.ndarray:
        return np.ones(self.d)


@dataclass(frozen=True)
class DiagonalGeometric(_DiagonalSymbol):
    """ b(w) e_i = tau(w) 2^-i e_i for i = 1..d """

    kind: ClassVar[str] = 'diagonal_geometric'

    def factors(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.d + 1)


@dataclass(frozen=True)
class DenseMatrix(Symbol):
    """
    A d x d grid of scalar functions, ``grid[j][k] = <b e_k, e_j>``; None marks a zero entry.
    """

    kind: ClassVar[str] = 'dense'

    grid: Tuple[Tuple[Optional[ScalarFunction], ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.grid)
        _check_channels(len(grid))
        require(all(len(row) == len(grid) for row in grid), 'the function grid must be square')
        object.__setattr__(self, 'grid', grid)

    @property
    def channels(self) -> int:
        return len(self.grid)

    def support(self) -> Tuple[Entry, ...]:
        return tuple((j, k) for j, row in enumerate(self.grid) for k, f in enumerate(row) if f is not None)

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {(j, k): self.grid[j][k].values(nodes) for j, k in self.support()}

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return tuple(sorted({r for j, k in self.support() for r in self.grid[j][k].jump_radii}))

    @property
    def is_radial(self) -> bool:
        return all(self.grid[j][k].is_radial for j, k in self.support())

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'grid': [[f.to_dict() if f else None for f in row] for row in self.grid]}

    @classmethod
    def parse(cls, params: dict) -> DenseMatrix:
        return cls(tuple(tuple(ScalarFunction.from_dict(f) if f else None for f in row) for row in params['grid']))


@dataclass(frozen=True)
class _Wrapper(Symbol):
    base: Symbol

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return self.base.jump_radii

    @property
    def is_radial(self) -> bool:
        return self.base.is_radial


@dataclass(frozen=True)
class TailTruncated(_Wrapper):
    """ b(w) e_i = 0 for i <= d0 and b(w) e_i otherwise. """

    kind: ClassVar[str] = 'tail_truncated'

    d0: int

    def __post_init__(self):
        require(0 <= self.d0 <= self.base.channels,
                f'tail truncation index {self.d0} is outside 0..{self.base.channels}')

    @property
    def channels(self) -> int:
        return self.base.channels

    def support(self) -> Tuple[Entry, ...]:
        return tuple(e for e in self.base.support() if e[1] >= self.d0)

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {e: v for e, v in self.base.entries(nodes).items() if e[1] >= self.d0}

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'base': self.base.to_dict(), 'd0': self.d0}

    @classmethod
    def parse(cls, params: dict) -> TailTruncated:
        return cls(Symbol.from_dict(params['base']), int(params['d0']))


@dataclass(frozen=True)
class CornerTruncated(_Wrapper):
    """ The leading d0 x d0 block of b, a symbol with d0 channels. """

    kind: ClassVar[str] = 'corner_truncated'

    d0: int

    def __post_init__(self):
        require(1 <= self.d0 <= self.base.channels,
                f'corner truncation index {self.d0} is outside 1..{self.base.channels}')

    @property
    def channels(self) -> int:
        return self.d0

    def support(self) -> Tuple[Entry, ...]:
        return tuple(e for e in self.base.support() if e[0] < self.d0 and e[1] < self.d0)

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {e: v for e, v in self.base.entries(nodes).items() if e[0] < self.d0 and e[1] < self.d0}

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'base': self.base.to_dict(), 'd0': self.d0}

    @classmethod
    def parse(cls, params: dict) -> CornerTruncated:
        return cls(Symbol.from_dict(params['base']), int(params['d0']))


@dataclass(frozen=True)
class Adjoint(_Wrapper):
    """ w -> b(w)* """

    kind: ClassVar[str] = 'adjoint'

    @property
    def channels(self) -> int:
        return self.base.channels

    def support(self) -> Tuple[Entry, ...]:
        return tuple(sorted((col, row) for row, col in self.base.support()))

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {(col, row): np.conj(v) for (row, col), v in self.base.entries(nodes).items()}

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'base': self.base.to_dict()}

    @classmethod
    def parse(cls, params: dict) -> Adjoint:
        return cls(Symbol.from_dict(params['base']))


class _Lift(Symbol):
    """
    A scalar function placed at a single entry of a d x d symbol; channel indices are numbered from 1.
    """

    function: ScalarFunction
    d: int

    def _check(self, *indices: int) -> None:
        _check_channels(self.d)
        require(all(1 <= i <= self.d for i in indices), f'lift indices {indices} are outside 1..{self.d}')

    @property
    def channels(self) -> int:
        return self.d

    @property
    @abc.abstractmethod
    def position(self) -> Entry:
        pass

    def support(self) -> Tuple[Entry, ...]:
        return self.position,

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return {self.position: self.function.values(nodes)}

    @property
    def jump_radii(self) -> Tuple[float, ...]:
        return self.function.jump_radii

    @property
    def is_radial(self) -> bool:
        return self.function.is_radial


@dataclass(frozen=True)
class LiftBkj(_Lift):
    """ <B(w) e_j, e_k> = beta(w), so T_B g = T_beta(g_j) e_k """

    kind: ClassVar[str] = 'lift_b'

    function: ScalarFunction
    k: int
    j: int
    d: int

    def __post_init__(self):
        self._check(self.k, self.j)

    @property
    def position(self) -> Entry:
        return self.k - 1, self.j - 1

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'function': self.function.to_dict(), 'k': self.k, 'j': self.j, 'channels': self.d}

    @classmethod
    def parse(cls, params: dict) -> LiftBkj:
        return cls(ScalarFunction.from_dict(params['function']), int(params['k']), int(params['j']),
                   int(params['channels']))


@dataclass(frozen=True)
class LiftA2kj(_Lift):
    """ <A(w) e_k, e_j> = a(w), so T_A g = T_a(g_k) e_j """

    kind: ClassVar[str] = 'lift_a2'

    function: ScalarFunction
    k: int
    j: int
    d: int

    def __post_init__(self):
        self._check(self.k, self.j)

    @property
    def position(self) -> Entry:
        return self.j - 1, self.k - 1

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'function': self.function.to_dict(), 'k': self.k, 'j': self.j, 'channels': self.d}

    @classmethod
    def parse(cls, params: dict) -> LiftA2kj:
        return cls(ScalarFunction.from_dict(params['function']), int(params['k']), int(params['j']),
                   int(params['channels']))


@dataclass(frozen=True)
class LiftA1j(_Lift):
    """ <A(w) e_j, e_j> = a(w) """

    kind: ClassVar[str] = 'lift_a1'

    function: ScalarFunction
    j: int
    d: int

    def __post_init__(self):
        self._check(self.j)

    @property
    def position(self) -> Entry:
        return self.j - 1, self.j - 1

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'function': self.function.to_dict(), 'j': self.j, 'channels': self.d}

    @classmethod
    def parse(cls, params: dict) -> LiftA1j:
        return cls(ScalarFunction.from_dict(params['function']), int(params['j']), int(params['channels']))


@dataclass(frozen=True)
class MobiusComposed(_Wrapper):
    """
    The symbol w -> b(phi_z(w)). Pointwise evaluation composes directly; integrals use `pullback` so that
    radial jumps of b stay radial for the quadrature rule.
    """

    kind: ClassVar[str] = 'mobius_composed'

    point: Point

    def __post_init__(self):
        require(not isinstance(self.base, MobiusComposed), 'nested Mobius compositions are not supported')

    @property
    def channels(self) -> int:
        return self.base.channels

    @property
    def is_radial(self) -> bool:
        return False

    @property
    def resolution_radius(self) -> float:
        return self.point.norm

    def support(self) -> Tuple[Entry, ...]:
        return self.base.support()

    def entries(self, nodes: np.ndarray) -> Dict[Entry, np.ndarray]:
        return self.base.entries(mobius_nodes(self.point.coords, nodes))

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'base': self.base.to_dict(), 'z': [_complex_to_dict(c) for c in self.point]}

    @classmethod
    def parse(cls, params: dict) -> MobiusComposed:
        return cls(Symbol.from_dict(params['base']), Point([_complex(c) for c in params['z']]))


@dataclass(frozen=True)
class Pullback:
    """
    Integration data for a symbol: the integral of G(b(w), w) is the weighted sum of
    G(symbol(symbol_nodes), function_nodes).
    """

    symbol: Symbol
    symbol_nodes: np.ndarray
    function_nodes: np.ndarray
    weights: np.ndarray


def evaluate(b: Symbol, w: Point) -> np.ndarray:
    """
    The matrix [j, k] = <b(w) e_k, e_j>.
    """

    return b(w)


def tail_truncate(b: Symbol, d0: int) -> Symbol:
    """
    :raise IllegalArgumentException: when d0 is outside 0..d
    """

    if isinstance(b, MobiusComposed):
        return MobiusComposed(tail_truncate(b.base, d0), b.point)
    return TailTruncated(b, d0)


def corner_truncate(b: Symbol, d0: int) -> Symbol:
    """
    :raise IllegalArgumentException: when d0 is outside 1..d
    """

    if isinstance(b, MobiusComposed):
        return MobiusComposed(corner_truncate(b.base, d0), b.point)
    return CornerTruncated(b, d0)


def adjoint_symbol(b: Symbol) -> Symbol:
    if isinstance(b, Adjoint):
        return b.base
    if isinstance(b, MobiusComposed):
        return MobiusComposed(adjoint_symbol(b.base), b.point)
    return Adjoint(b)


def compose_mobius(b: Symbol, z: Point) -> Symbol:
    """
    The symbol b o phi_z.

    :raise IllegalArgumentException: when b is already composed with an automorphism
    """

    return MobiusComposed(b, z)


def pullback(b: Symbol, rule: QuadratureRule) -> Pullback:
    """
    Applies the change of variables: the integral of F(phi_z w) over nu_alpha equals the integral of
    F(u) |k_z(u)|^2. For b = c o phi_z the symbol c is evaluated at the rule nodes u and everything else at
    phi_z(u).
    """

    if not isinstance(b, MobiusComposed):
        return Pullback(b, rule.nodes, rule.nodes, rule.weights)
    z = b.point.coords
    moved = mobius_nodes(z, rule.nodes)
    weights = rule.weights * np.abs(normalized_kernel_nodes(rule.params, rule.nodes, z)) ** 2
    return Pullback(b.base, rule.nodes, moved, weights)


def parse_symbol(data: Any, channels: Optional[int] = None) -> Symbol:
    """
    Parses a symbol description. A bare function description is read as tau I_d when ``channels`` is given and
    as a scalar symbol otherwise.

    :raise IllegalArgumentException: for unknown kinds or invalid parameters
    """

    if isinstance(data, dict) and data.get('kind') in ScalarFunction._kinds:  # pylint: disable=protected-access
        function = ScalarFunction.from_dict(data)
        return ScalarSymbol(function) if channels is None else ScalarTimesIdentity(function, channels)
    return Symbol.from_dict(data)
