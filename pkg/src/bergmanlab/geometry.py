from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.functions import require

__all__ = [
    'BALL_MARGIN',
    'SpaceParams',
    'Point',
    'inner',
    'mobius',
    'mobius_nodes',
    'kernel',
    'kernel_nodes',
    'normalized_kernel',
    'normalized_kernel_nodes',
    'unimodular_gamma',
    'kernel_phase',
    'points_on_grid'
]

# points with |z| >= 1 - BALL_MARGIN are rejected by the Point constructor
BALL_MARGIN = 1e-12


@dataclass(frozen=True)
class SpaceParams:
    """
    Parameters of the weighted Bergman space A^2_alpha(B_n, C^d): the ball dimension n and the weight alpha.
    The normalizing constant c_alpha makes nu_alpha a probability measure.
    """

    n: int
    alpha: float

    def __post_init__(self):
        require(isinstance(self.n, (int, np.integer)) and self.n >= 1, f'n must be a positive integer, got {self.n}')
        require(self.alpha > -1.0, f'alpha must be > -1, got {self.alpha}')
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'alpha', float(self.alpha))

    @cached_property
    def c_alpha(self) -> float:
        """ Gamma(n + alpha + 1) / (n! Gamma(alpha + 1)) """

        return math.exp(gammaln(self.n + self.alpha + 1) - gammaln(self.n + 1) - gammaln(self.alpha + 1))

    @property
    def kernel_exponent(self) -> float:
        """ The exponent n + 1 + alpha of the reproducing kernel. """

        return self.n + 1 + self.alpha

    def to_dict(self) -> dict:
        return {'n': self.n, 'alpha': self.alpha}


class Point:
    """
    A point of the open unit ball of C^n, stored as a read-only complex vector.
    """

    __slots__ = ('_coords',)

    def __init__(self, coords: Union[Sequence[complex], np.ndarray]):
        coords = np.array(coords, dtype=complex).reshape(-1)
        require(coords.size >= 1, 'a point needs at least one coordinate')
        require(bool(np.all(np.isfinite(coords))), f'non-finite coordinates {coords}')
        norm = float(np.linalg.norm(coords))
        require(norm < 1.0 - BALL_MARGIN, f'point {coords} is outside the open unit ball, |z| = {norm}')
        coords.setflags(write=False)
        self._coords = coords

    @staticmethod
    def of(*coords: complex) -> Point:
        return Point(coords)

    @staticmethod
    def zero(n: int) -> Point:
        return Point(np.zeros(n, dtype=complex))

    @staticmethod
    def polar(radius: float, direction: Union[Sequence[complex], np.ndarray]) -> Point:
        """
        Returns radius * u for the normalized direction u.
        """

        direction = np.asarray(direction, dtype=complex).reshape(-1)
        length = np.linalg.norm(direction)
        require(length > 0, 'direction must be non-zero')
        return Point(radius * direction / length)

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def dim(self) -> int:
        return self._coords.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self._coords))

    def as_nodes(self) -> np.ndarray:
        """ The point as a (1, n) node array. """

        return self._coords.reshape(1, -1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return False
        return bool(np.array_equal(self._coords, other._coords))

    def __hash__(self):
        return hash(tuple(self._coords.tolist()))

    def __iter__(self):
        return iter(self._coords.tolist())

    def __repr__(self):
        return f'Point({", ".join(repr(complex(c)) for c in self._coords)})'


def _check_same_dim(params: SpaceParams, *points: Point) -> None:
    for point in points:
        if point.dim != params.n:
            raise IllegalArgumentException(f'point of dimension {point.dim} used in a space of dimension {params.n}')


def inner(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Hermitian product <z, w> = sum z_i conj(w_i) along the last axis, broadcasting over leading axes.
    """

    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def mobius_nodes(a: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """
    Applies the involutive automorphism phi_a to every row of a (q, n) node array.
    """

    a = np.asarray(a, dtype=complex).reshape(-1)
    nodes = np.asarray(nodes, dtype=complex)
    norm_sq = float(np.real(np.vdot(a, a)))
    if norm_sq == 0.0:
        return -nodes

    za = inner(nodes, a)[..., None]
    projection = za / norm_sq * a
    s_a = math.sqrt(1.0 - norm_sq)
    return (a - projection - s_a * (nodes - projection)) / (1.0 - za)


def mobius(params: SpaceParams, a: Point, z: Point) -> Point:
    """
    The Mobius automorphism phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), with phi_0(z) = -z.

    :raise IllegalArgumentException: when the points do not live in dimension n
    """

    _check_same_dim(params, a, z)
    return Point(mobius_nodes(a.coords, z.as_nodes())[0])


def _kernel_base(nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    base = 1.0 - inner(nodes, w)
    if np.any(np.real(base) <= 0.0):
        raise IllegalArgumentException('1 - <z, w> left the right half plane, points are not inside the ball')
    return base


def kernel_nodes(params: SpaceParams, nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    K_w(z) = (1 - <z, w>)^-(n+1+alpha) at every row z of the node array, principal branch.
    """

    return np.power(_kernel_base(np.asarray(nodes, dtype=complex), np.asarray(w, dtype=complex)),
                    -params.kernel_exponent)


def normalized_kernel_nodes(params: SpaceParams, nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    k_w(z) = (1 - |w|^2)^((n+1+alpha)/2) K_w(z) at every row z of the node array.
    """

    w = np.asarray(w, dtype=complex).reshape(-1)
    scale = (1.0 - float(np.real(np.vdot(w, w)))) ** (params.kernel_exponent / 2.0)
    return scale * kernel_nodes(params, nodes, w)


def kernel(params: SpaceParams, z: Point, w: Point) -> complex:
    """
    The reproducing kernel K^alpha_w(z) = 1 / (1 - <z, w>)^(n+1+alpha). Re(1 - <z, w>) > 0 inside the ball,
    so the principal branch is continuous there.
    """

    _check_same_dim(params, z, w)
    return complex(kernel_nodes(params, z.as_nodes(), w.coords)[0])


def normalized_kernel(params: SpaceParams, z: Point, w: Point) -> complex:
    """
    The unit-norm kernel k^alpha_w(z).
    """

    _check_same_dim(params, z, w)
    return complex(normalized_kernel_nodes(params, z.as_nodes(), w.coords)[0])


def unimodular_gamma(z: Point, a: Point) -> complex:
    """
    gamma_{z,a} = |1 - <z, a>| / (1 - <z, a>).
    """

    if z.dim != a.dim:
        raise IllegalArgumentException(f'dimension mismatch {z.dim} != {a.dim}')
    base = 1.0 - complex(inner(z.coords, a.coords))
    return abs(base) / base


def kernel_phase(params: SpaceParams, z: Point, a: Point) -> complex:
    """
    The unimodular factor of U_z k_a = kernel_phase(z, a) k_{phi_z(a)}, that is gamma_{z,a} raised to the
    kernel exponent n+1+alpha on the principal branch.
    """

    _check_same_dim(params, z, a)
    return cmath.exp(1j * params.kernel_exponent * cmath.phase(unimodular_gamma(z, a)))


def points_on_grid(params: SpaceParams, radii: Iterable[float], angles: int) -> list:
    """
    Tensor grid of points: every non-zero radius is combined with ``angles`` phases per complex coordinate,
    the modulus being shared equally between coordinates when n = 2. The origin is listed once.
    """

    require(angles >= 1, 'angles must be positive')
    points, seen_origin = [], False
    for radius in radii:
        if radius == 0.0:
            if not seen_origin:
                points.append(Point.zero(params.n))
                seen_origin = True
            continue
        thetas = 2.0 * np.pi * np.arange(angles) / angles
        if params.n == 1:
            points.extend(Point([radius * np.exp(1j * t)]) for t in thetas)
            continue
        for t1 in thetas:
            for t2 in thetas:
                coords = np.zeros(params.n, dtype=complex)
                coords[0] = radius * np.exp(1j * t1) / math.sqrt(2.0)
                coords[1] = radius * np.exp(1j * t2) / math.sqrt(2.0)
                points.append(Point(coords))
    return points
