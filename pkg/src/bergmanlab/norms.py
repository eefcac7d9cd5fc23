from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import digamma, polygamma

from bergmanlab.enums import NormKind
from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.functions import require
from bergmanlab.settings import NormSearchSettings

__all__ = [
    'NormEstimate',
    'opnorm_2to2',
    'estimate_2to1',
    'opnorm_2to1',
    'norm_intersection',
    'operator_norm',
    'pointwise_norms',
    'diagonal_norms',
    'harmonic_witness',
    'harmonic_divergence_index'
]

logger = logging.getLogger(__name__)

_EULER_GAMMA = 0.57721566490153286061
_CHUNK = 2 ** 16


@dataclass(frozen=True)
class NormEstimate:
    """
    An attained lower bound ``value`` of a norm with a certified ``upper_bound``. ``exact`` is set when the
    two are close enough for the value to be taken as the norm.
    """

    value: float
    upper_bound: float
    exact: bool

    @property
    def gap(self) -> float:
        return self.upper_bound - self.value

    def to_dict(self) -> dict:
        return {'value': self.value, 'upper_bound': self.upper_bound, 'exact': self.exact}


def _as_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    require(m.ndim == 2, f'expected a matrix, got shape {m.shape}')
    return m


def _is_diagonal(m: np.ndarray) -> bool:
    return m.shape[0] == m.shape[1] and not np.any(m - np.diag(np.diag(m)))


def opnorm_2to2(m: np.ndarray) -> float:
    """ Largest singular value. """

    m = _as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def _phase(x: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    magnitude = np.abs(x)
    return np.where(magnitude > 0, x / np.where(magnitude > 0, magnitude, 1.0), fallback)


def _grid_size(settings: NormSearchSettings, free: int) -> int:
    if free == 0:
        return 1
    budget = max(1, settings.max_grid // 4)
    phases = min(settings.phases, max(1, int(math.floor(budget ** (1.0 / free)))))
    while phases > 1 and phases ** free > budget:
        phases -= 1
    while phases < settings.phases and (phases + 1) ** free <= budget:
        phases += 1
    return phases


def _grid_cells(phases: int, free: int, flat: np.ndarray) -> np.ndarray:
    index = np.unravel_index(flat, (phases,) * free)
    return np.stack(index, axis=1) * (2.0 * np.pi / phases)


def _evaluate(gram: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    g = c* G c for c = (1, e^(i theta)) row by row, with the l1 norm of the gradient of g in theta.
    """

    g = np.empty(len(theta))
    slope = np.empty(len(theta))
    for start in range(0, len(theta), _CHUNK):
        part = theta[start:start + _CHUNK]
        c = np.concatenate([np.ones((len(part), 1)), np.exp(1j * part)], axis=1)
        y = c @ gram.T
        g[start:start + _CHUNK] = np.real(np.sum(c.conj() * y, axis=1))
        slope[start:start + _CHUNK] = np.sum(np.abs(2.0 * np.imag(c[:, 1:].conj() * y[:, 1:])), axis=1)
    return g, slope


def _ascent(gram: np.ndarray, c: np.ndarray, iterations: int) -> float:
    """ Fixed-point ascent c <- phase(G c); returns the largest g = c* G c reached. """

    value = float(np.real(np.vdot(c, gram @ c)))
    for _ in range(iterations):
        updated = _phase(gram @ c, c)
        new_value = float(np.real(np.vdot(updated, gram @ updated)))
        if new_value <= value * (1.0 + 1e-15):
            break
        c, value = updated, new_value
    return value


def estimate_2to1(m: np.ndarray, settings: Optional[NormSearchSettings] = None) -> NormEstimate:
    """
    Estimates ||M||_(l2 -> l1) = max over unimodular c of ||M* c||_2 with the first coordinate of c fixed to 1.

    A phase grid of at most ``phases`` points per free coordinate seeds fixed-point ascent from its best cells.
    Every grid cell is a box in phase space whose maximum of g = ||M* c||^2 is bounded by the value and slope at
    its center plus 2 R k h^2, where R is the largest absolute row sum of M M*, k the number of free phases and
    h the half width of the box. Boxes whose bound can still beat the best value are halved until the bound
    meets the value or ``max_grid`` evaluations are spent, which gives the upper bound. Refinement only runs up
    to ``exact_max_channels`` rows and ``exact`` is set when the certified gap is at most ``exact_gap``.
    Diagonal matrices use the closed form ||diag(delta)|| = ||delta||_2.
    """

    settings = settings or NormSearchSettings()
    m = _as_matrix(m)
    if _is_diagonal(m):
        value = float(np.linalg.norm(np.diag(m)))
        return NormEstimate(value, value, True)
    m = m[np.any(m != 0, axis=1)]
    rows = m.shape[0]
    if rows == 0:
        return NormEstimate(0.0, 0.0, True)
    if rows == 1:
        value = float(np.linalg.norm(m))
        return NormEstimate(value, value, True)

    gram = m @ m.conj().T
    curvature = 2.0 * float(np.max(np.sum(np.abs(gram), axis=1)))
    free = rows - 1
    phases = _grid_size(settings, free)
    cells = phases ** free
    half = math.pi / phases

    g, slope = _evaluate(gram, _grid_cells(phases, free, np.arange(cells)))
    best = float(g.max())
    for i in np.argsort(-g, kind='stable')[:settings.ascent_starts]:
        theta = _grid_cells(phases, free, np.array([i]))[0]
        start = np.concatenate([[1.0 + 0j], np.exp(1j * theta)])
        best = max(best, _ascent(gram, start, settings.ascent_iterations))

    tolerance = settings.exact_gap * math.sqrt(best)
    bound = g + half * slope + curvature * free * half ** 2
    keep = bound > best + tolerance
    ceiling = float(bound[~keep].max(initial=best))
    active, active_bound = _grid_cells(phases, free, np.flatnonzero(keep)), bound[keep]
    evaluations = cells
    children = np.array(list(itertools.product((-0.5, 0.5), repeat=free)))
    refine = rows <= settings.exact_max_channels

    while len(active):
        if not refine or evaluations + len(active) * len(children) > settings.max_grid:
            ceiling = max(ceiling, float(active_bound.max()))
            break
        active = (active[:, None, :] + children[None, :, :] * half).reshape(-1, free)
        half /= 2.0
        g, slope = _evaluate(gram, active)
        evaluations += len(active)
        best = max(best, float(g.max()))
        bound = g + half * slope + curvature * free * half ** 2
        keep = bound > best + tolerance
        ceiling = max(ceiling, float(bound[~keep].max(initial=best)))
        active, active_bound = active[keep], bound[keep]

    value = math.sqrt(best)
    upper = max(math.sqrt(ceiling), value)
    exact = refine and upper - value <= settings.exact_gap
    logger.debug('2->1 search rows=%d phases=%d evaluations=%d value=%.12g upper=%.12g', rows, phases,
                 evaluations, value, upper)
    return NormEstimate(value, upper, exact)


def opnorm_2to1(m: np.ndarray, settings: Optional[NormSearchSettings] = None) -> float:
    """
    The l2 -> l1 operator norm; a search that is not exact returns a lower bound and logs a warning.
    """

    estimate = estimate_2to1(m, settings)
    if not estimate.exact:
        logger.warning('l2 -> l1 norm of a %s matrix is a lower bound, upper bound %.6g', np.shape(m),
                       estimate.upper_bound)
    return estimate.value


def norm_intersection(m: np.ndarray, settings: Optional[NormSearchSettings] = None) -> float:
    """
    The norm into l1 n l2 with ||x|| = max(||x||_1, ||x||_2); the two maxima over the unit sphere commute, so it
    equals max(||M||_(2->2), ||M||_(2->1)).
    """

    return max(opnorm_2to2(m), opnorm_2to1(m, settings))


def operator_norm(m: np.ndarray, kind: NormKind, settings: Optional[NormSearchSettings] = None) -> float:
    if kind == NormKind.OP_2TO2:
        return opnorm_2to2(m)
    if kind == NormKind.OP_2TO1:
        return opnorm_2to1(m, settings)
    if kind == NormKind.INTERSECTION:
        return norm_intersection(m, settings)
    raise IllegalArgumentException(f'unknown norm kind {kind}')


def pointwise_norms(values: np.ndarray, kind: NormKind, settings: Optional[NormSearchSettings] = None,
                    diagonal: bool = False) -> np.ndarray:
    """
    Norms of a (q, d, d) stack of matrices. Diagonal stacks use the closed forms max|delta| and ||delta||_2.
    """

    values = np.asarray(values, dtype=complex)
    require(values.ndim == 3, f'expected a (q, d, d) stack, got shape {values.shape}')
    if diagonal or values.shape[1] == 1:
        return diagonal_norms(np.diagonal(values, axis1=1, axis2=2), kind)
    if kind == NormKind.OP_2TO2:
        return np.linalg.norm(values, ord=2, axis=(1, 2))
    return np.array([operator_norm(v, kind, settings) for v in values])


def harmonic_witness(size: int) -> Tuple[float, float]:
    """
    The l1 and l2 norms of e_N with coordinates (sqrt(6) / pi) / i for i = 1..N, from the harmonic partial sums
    H_N = digamma(N + 1) + gamma and sum 1/i^2 = pi^2 / 6 - trigamma(N + 1).
    """

    require(size >= 1, f'size must be positive, got {size}')
    scale = math.sqrt(6.0) / math.pi
    l1 = scale * (float(digamma(size + 1)) + _EULER_GAMMA)
    l2 = math.sqrt(max(0.0, 1.0 - scale ** 2 * float(polygamma(1, size + 1))))
    return l1, l2


def harmonic_divergence_index(threshold: float, limit: int = 10 ** 9) -> int:
    """
    The smallest N with ||e_N||_1 > threshold.

    :raise IllegalArgumentException: when no N up to ``limit`` exceeds the threshold
    """

    if harmonic_witness(1)[0] > threshold:
        return 1
    if harmonic_witness(limit)[0] <= threshold:
        raise IllegalArgumentException(f'||e_N||_1 stays below {threshold} for N <= {limit}')
    low, high = 1, 2
    while harmonic_witness(high)[0] <= threshold:
        low, high = high, min(2 * high, limit)
    while high - low > 1:
        middle = (low + high) // 2
        if harmonic_witness(middle)[0] > threshold:
            high = middle
        else:
            low = middle
    return high


def diagonal_norms(delta: np.ndarray, kind: NormKind) -> np.ndarray:
    """
    Norms of diag(delta) for every row of a (q, d) array: max|delta| for the operator norm, ||delta||_2 for the
    norms into l1 and into the intersection.
    """

    magnitude = np.abs(np.asarray(delta, dtype=complex))
    require(magnitude.ndim == 2, f'expected a (q, d) array, got shape {magnitude.shape}')
    if kind == NormKind.OP_2TO2:
        return magnitude.max(axis=1, initial=0.0)
    return np.sqrt(np.sum(magnitude ** 2, axis=1))
