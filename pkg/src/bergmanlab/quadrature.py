from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from bergmanlab.exceptions import IllegalArgumentException, PrecisionException, UnsupportedDimensionException
from bergmanlab.functions import require
from bergmanlab.geometry import SpaceParams
from bergmanlab.settings import QuadraturePolicy

if TYPE_CHECKING:
    from bergmanlab.cache import RuleCache

__all__ = [
    'SUPPORTED_DIMENSIONS',
    'QuadratureRule',
    'RuleProvider',
    'build_rule',
    'rule_for_degree',
    'integrate',
    'integrate_matrix',
    'weighted_sum',
    'exact_moment',
    'radial_moment_oracle'
]

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (1, 2)

# nodes closer than this to a jump radius are moved inward
_JUMP_CLEARANCE = 1e-14


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Nodes and weights approximating integrals against nu_alpha on B_n. Weights are nonnegative and sum to one;
    the rule integrates every monomial z^p conj(z)^q of total degree up to ``declared_exactness`` exactly.
    """

    params: SpaceParams
    nodes: np.ndarray
    weights: np.ndarray
    declared_exactness: int
    radial_points: int
    angular_points: int
    breakpoints: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        require(self.nodes.ndim == 2 and self.nodes.shape[1] == self.params.n, 'nodes must be a (q, n) array')
        require(self.weights.shape == (self.nodes.shape[0],), 'one weight per node is required')
        require(bool(np.all(self.weights >= 0.0)), 'weights must be nonnegative')
        require(abs(math.fsum(self.weights) - 1.0) <= 1e-10, 'weights must sum to one')
        require(bool(np.all(np.linalg.norm(self.nodes, axis=1) < 1.0)), 'nodes must lie inside the ball')
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.weights.size

    def resolve(self, radius: float = 0.0, breakpoints: Iterable[float] = (), degree: int = 0) -> QuadratureRule:
        """
        A fixed rule is its own resolution at every radius.
        """

        return self

    def describe(self) -> dict:
        return {
            'n': self.params.n,
            'alpha': self.params.alpha,
            'radial_points': self.radial_points,
            'angular_points': self.angular_points,
            'breakpoints': list(self.breakpoints),
            'declared_exactness': self.declared_exactness,
            'size': self.size
        }

    def __repr__(self):
        return f'QuadratureRule({self.describe()})'


def _check_dimension(params: SpaceParams) -> None:
    if params.n not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimensionException(f'quadrature supports n in {SUPPORTED_DIMENSIONS}, got n={params.n}')


def _integer_excess(params: SpaceParams) -> int:
    return int(math.ceil(max(params.alpha, 0.0))) + params.n - 1


def _radial_rule(params: SpaceParams, points: int, cuts: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and unnormalized weights in rho = |z|^2 for the density rho^(n-1) (1 - rho)^alpha on [0, 1].
    """

    a, b = params.alpha, float(params.n - 1)
    if not cuts:
        x, w = roots_jacobi(points, a, b)
        return (1.0 + x) / 2.0, w * 2.0 ** -(a + b + 1.0)

    nodes, weights = [], []
    gx, gw = roots_legendre(points)
    edges = [0.0] + list(cuts)
    for lo, hi in zip(edges[:-1], edges[1:]):
        rho = lo + (hi - lo) * (gx + 1.0) / 2.0
        nodes.append(rho)
        weights.append(gw * (hi - lo) / 2.0 * rho ** b * (1.0 - rho) ** a)

    lo = edges[-1]
    x, w = roots_jacobi(points, a, 0.0)
    rho = lo + (1.0 - lo) * (1.0 + x) / 2.0
    nodes.append(rho)
    weights.append(w * ((1.0 - lo) / 2.0) ** (a + 1.0) * rho ** b)
    return np.concatenate(nodes), np.concatenate(weights)


def _nudge_inward(nodes: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    norms = np.linalg.norm(nodes, axis=1)
    for radius in radii:
        close = np.abs(norms - radius) < _JUMP_CLEARANCE
        if np.any(close):
            logger.debug('moving %d nodes inside the jump radius %s', int(np.sum(close)), radius)
            nodes[close] *= ((radius - _JUMP_CLEARANCE) / norms[close])[:, None]
    return nodes


@lru_cache(maxsize=128)
def build_rule(params: SpaceParams, radial_points: int, angular_points: int,
               breakpoints: Tuple[float, ...] = ()) -> QuadratureRule:
    """
    Builds a tensor rule for nu_alpha. The radial variable rho = |z|^2 uses Gauss-Jacobi nodes for the density
    rho^(n-1) (1 - rho)^alpha; for n = 2 the split of rho between the coordinates uses Gauss-Legendre nodes
    (the Duffy substitution t1 = rho u, t2 = rho (1 - u)); every coordinate phase uses a uniform grid.

    When breakpoints are given, rho is split at their squares: interior segments use Gauss-Legendre with the
    density in the integrand and the last segment uses mapped Gauss-Jacobi, so radial jumps of a symbol
    never fall inside a segment.

    :param params: the weighted space
    :param radial_points: points per radial segment
    :param angular_points: points per phase grid
    :param breakpoints: radii in (0, 1) where the integrand may jump
    :return: an immutable rule
    :raise UnsupportedDimensionException: when n is not 1 or 2
    """

    _check_dimension(params)
    require(radial_points >= 1 and angular_points >= 1, 'radial_points and angular_points must be positive')
    radii = tuple(sorted({float(r) for r in breakpoints if 0.0 < r < 1.0}))
    cuts = [r * r for r in radii]

    rho, w_rho = _radial_rule(params, radial_points, cuts)
    thetas = 2.0 * np.pi * np.arange(angular_points) / angular_points
    phases = np.exp(1j * thetas)

    if params.n == 1:
        nodes = (np.sqrt(rho)[:, None] * phases[None, :]).reshape(-1, 1)
        weights = np.repeat(w_rho, angular_points) / angular_points
    else:
        ux, uw = roots_legendre(radial_points)
        u = (ux + 1.0) / 2.0
        uw = uw / 2.0
        r_grid, u_grid, t1_grid, t2_grid = np.meshgrid(rho, u, np.arange(angular_points), np.arange(angular_points),
                                                       indexing='ij')
        z1 = np.sqrt(r_grid * u_grid) * phases[t1_grid]
        z2 = np.sqrt(r_grid * (1.0 - u_grid)) * phases[t2_grid]
        nodes = np.stack([z1.ravel(), z2.ravel()], axis=1)
        weights = (w_rho[:, None, None, None] * uw[None, :, None, None]
                   * np.ones((1, 1, angular_points, angular_points))).ravel() / angular_points ** 2

    weights = weights / math.fsum(weights)
    nodes = _nudge_inward(np.ascontiguousarray(nodes), radii)

    excess = _integer_excess(params) if cuts else 0
    exactness = max(min(2 * (2 * radial_points - 1 - excess) + 1, angular_points - 1), 0)
    logger.debug('built rule n=%d alpha=%s radial=%d angular=%d breakpoints=%s nodes=%d',
                 params.n, params.alpha, radial_points, angular_points, radii, weights.size)
    return QuadratureRule(params, nodes, np.ascontiguousarray(weights), exactness, radial_points, angular_points,
                          radii)


def _points_for_degree(params: SpaceParams, degree: int, with_cuts: bool) -> Tuple[int, int]:
    excess = _integer_excess(params) if with_cuts else 0
    return int(math.ceil((degree + 1) / 4.0)) + excess + 1, degree + 2


def rule_for_degree(params: SpaceParams, degree: int, breakpoints: Tuple[float, ...] = ()) -> QuadratureRule:
    """
    The smallest rule in this family whose declared exactness covers the given total degree.
    """

    radial, angular = _points_for_degree(params, max(degree, 0), bool(breakpoints))
    return build_rule(params, radial, angular, tuple(breakpoints))


class RuleProvider:
    """
    Selects a rule per evaluation radius following the resolution policy: kernel-weighted integrands centred at z
    need more radial and angular points as |z| grows. With a fixed resolution in the policy the provider always
    returns that rule and raises a PrecisionException wherever the rule falls short of the policy. Rules without
    breakpoints are read from and written to ``cache`` when one is given.
    """

    def __init__(self, params: SpaceParams, policy: Optional[QuadraturePolicy] = None,
                 cache: Optional[RuleCache] = None):
        _check_dimension(params)
        self.params = params
        self.policy = policy or QuadraturePolicy()
        self.cache = cache
        self._loaded: Dict[Tuple[int, int], QuadratureRule] = {}
        self._lock = threading.Lock()

    def requirement(self, radius: float, degree: int = 0, with_cuts: bool = False) -> Tuple[int, int]:
        radial_deg, angular_deg = _points_for_degree(self.params, degree, with_cuts)
        return (max(self.policy.radial_requirement(self.params.n, radius), radial_deg),
                max(self.policy.angular_requirement(self.params.n, radius), angular_deg))

    def resolve(self, radius: float = 0.0, breakpoints: Iterable[float] = (), degree: int = 0) -> QuadratureRule:
        """
        Returns a rule adequate for integrands centred at distance ``radius`` from the origin with polynomial
        factors up to ``degree``.

        :raise PrecisionException: when a fixed resolution is too coarse
        """

        breakpoints = tuple(sorted({float(r) for r in breakpoints if 0.0 < r < 1.0}))
        radial, angular = self.requirement(radius, degree, bool(breakpoints))
        fixed = self.policy.fixed
        if fixed is not None:
            if fixed[0] < radial or fixed[1] < angular:
                raise PrecisionException(
                    f'fixed rule {fixed} is below the resolution policy ({radial}, {angular}) at |z|={radius:.4g}')
            radial, angular = fixed
        if self.cache is None or breakpoints:
            return build_rule(self.params, radial, angular, breakpoints)
        with self._lock:
            if (radial, angular) not in self._loaded:
                self._loaded[radial, angular] = self.cache.get_or_build(self.params, radial, angular)
            return self._loaded[radial, angular]


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Sum over the leading node axis of weights * values. The node axis is moved last so that every entry is
    reduced by the same pairwise summation as a scalar integral.
    """

    weighted = weights.reshape((-1,) + (1,) * (values.ndim - 1)) * values
    return np.sum(np.ascontiguousarray(np.moveaxis(weighted, 0, -1)), axis=-1)


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> complex:
    """
    Returns sum_i w_i f(z_i). The integrand receives the (q, n) node array and returns q values or a scalar.
    """

    values = np.asarray(f(rule.nodes))
    if values.ndim == 0:
        values = np.broadcast_to(values, rule.weights.shape)
    if values.shape != rule.weights.shape:
        raise IllegalArgumentException(f'integrand returned shape {values.shape}, expected {rule.weights.shape}')
    return complex(weighted_sum(rule.weights, values))


def integrate_matrix(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Entrywise integral of a matrix-valued integrand; the integrand returns a (q, d1, d2) array or a constant
    (d1, d2) matrix.

    :raise IllegalArgumentException: when the values are not one matrix per node
    """

    values = np.asarray(f(rule.nodes))
    if values.ndim == 2:
        values = np.broadcast_to(values, (rule.size,) + values.shape)
    if values.ndim != 3 or values.shape[0] != rule.size:
        raise IllegalArgumentException(f'integrand returned shape {values.shape}, expected ({rule.size}, d1, d2)')
    return weighted_sum(rule.weights, values)


def exact_moment(params: SpaceParams, exponents: Sequence[int]) -> float:
    """
    Closed form of the integral of |z^m|^2 against nu_alpha: m! Gamma(n+alpha+1) / Gamma(n+|m|+alpha+1).
    """

    require(len(exponents) == params.n, f'expected {params.n} exponents, got {len(exponents)}')
    total = sum(exponents)
    log_value = sum(gammaln(k + 1) for k in exponents) + gammaln(params.n + params.alpha + 1) \
        - gammaln(params.n + total + params.alpha + 1)
    return math.exp(log_value)


def radial_moment_oracle(params: SpaceParams, exponents: Sequence[int]) -> float:
    """
    The same moment as `exact_moment` computed by one-dimensional rules: a Gauss-Jacobi rule in rho = |z|^2
    for the radial density, times a Gauss-Legendre rule for the split of rho between two coordinates.
    """

    _check_dimension(params)
    require(len(exponents) == params.n, f'expected {params.n} exponents, got {len(exponents)}')
    total = sum(exponents)
    points = total // 2 + 3

    x, w = roots_jacobi(points, params.alpha, float(params.n - 1))
    rho = (1.0 + x) / 2.0
    radial = math.fsum(w * rho ** total) / math.fsum(w)
    if params.n == 1:
        return radial

    ux, uw = roots_legendre(points)
    u = (1.0 + ux) / 2.0
    split = math.fsum(uw / 2.0 * u ** exponents[0] * (1.0 - u) ** exponents[1])
    return radial * split
