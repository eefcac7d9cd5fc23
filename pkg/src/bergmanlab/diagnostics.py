from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from bergmanlab.basis import BasisTable, MultiIndex, basis_table, kernel_coefficients, synthesize
from bergmanlab.berezin import berezin_symbol, bmo1_seminorm, tail_decay_profile
from bergmanlab.enums import NormKind, Verdict
from bergmanlab.exceptions import IllegalArgumentException
from bergmanlab.functions import parallel_map, require
from bergmanlab.geometry import Point, SpaceParams, points_on_grid
from bergmanlab.io import to_jsonable, write_csv, write_json
from bergmanlab.norms import opnorm_2to2
from bergmanlab.quadrature import weighted_sum
from bergmanlab.settings import DecaySettings, GridSettings
from bergmanlab.symbols import Symbol, adjoint_symbol, compose_mobius, corner_truncate
from bergmanlab.toeplitz import Rules, TruncatedOperator, apply_to_kernel, assemble, conjugate

if TYPE_CHECKING:
    from bergmanlab.cache import RuleCache

__all__ = [
    'FINITE_D_NOTE',
    'CriterionResult',
    'CompactnessReport',
    'SingularValueProfile',
    'DecayCurve',
    'BoundaryDecay',
    'singular_value_profile',
    'boundary_decay',
    'decay_verdict',
    'tail_verdict',
    'localization_threshold',
    'localization_profile',
    'sufficiently_localized_functional',
    'companion_functional',
    'fourfold_report',
    'essential_norm_proxy'
]

logger = logging.getLogger(__name__)

FINITE_D_NOTE = (
    'At a finite channel dimension the tail-decay condition on b and on its adjoint reads the same as the '
    'vanishing-tail hypothesis for sufficiently localized operators; the report does not separate the two roles.')

# relative slack on the halving ratio of tail profiles
_HALVING_SLACK = 1e-9
_UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CriterionResult:
    """
    One judged condition: the verdict, the threshold it was judged against, the rule used to judge and the
    numeric evidence.
    """

    name: str
    verdict: Verdict
    threshold: float
    rule: str
    evidence: dict

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'verdict': self.verdict.value,
            'threshold': self.threshold,
            'rule': self.rule,
            'evidence': to_jsonable(self.evidence)
        }


@dataclass(frozen=True)
class CompactnessReport:
    symbol: dict
    params: SpaceParams
    truncation: dict
    grids: dict
    criteria: List[CriterionResult]
    note: str = FINITE_D_NOTE

    @property
    def verdict(self) -> Verdict:
        return Verdict.worst(c.verdict for c in self.criteria)

    def criterion(self, name: str) -> CriterionResult:
        for c in self.criteria:
            if c.name == name:
                return c
        raise IllegalArgumentException(f'no criterion {name!r} in the report')

    def to_dict(self) -> dict:
        return {
            'symbol': self.symbol,
            'params': self.params.to_dict(),
            'truncation': self.truncation,
            'grids': self.grids,
            'criteria': [c.to_dict() for c in self.criteria],
            'verdict': self.verdict.value,
            'note': self.note
        }

    def to_text(self) -> str:
        """
        Aligned plain-text rendering. Sup-type values are grid lower bounds.
        """

        header = ('criterion', 'verdict', 'threshold', 'rule')
        rows = [(c.name, c.verdict.value, format(c.threshold, '.6g'), c.rule) for c in self.criteria]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = [f'symbol: {self.symbol.get("kind", "?")}',
                 f'space: n={self.params.n} alpha={self.params.alpha}',
                 f'truncation: D={self.truncation.get("max_degree")} d={self.truncation.get("channels")}',
                 '']
        for row in [header] + rows:
            lines.append('  '.join(value.ljust(width) for value, width in zip(row, widths)).rstrip())
        lines.append('')
        for c in self.criteria:
            evidence = ', '.join(f'{k}={_short(v)}' for k, v in sorted(c.evidence.items()))
            lines.append(f'{c.name} (grid lower bound): {evidence}')
        lines += ['', f'overall: {self.verdict.value}', '', self.note]
        return '\n'.join(lines) + '\n'

    def write(self, directory: Union[str, Path], stem: str = 'report') -> Tuple[Path, Path]:
        directory = Path(directory)
        json_path = write_json(directory / f'{stem}.json', self.to_dict())
        text_path = directory / f'{stem}.txt'
        text_path.write_text(self.to_text(), encoding='utf-8')
        return json_path, text_path


def _short(value) -> str:
    if isinstance(value, float):
        return format(value, '.6g')
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_short(v) for v in value) + ']'
    if isinstance(value, dict):
        return '{' + ', '.join(f'{k}: {_short(v)}' for k, v in sorted(value.items())) + '}'
    return str(value)


@dataclass(frozen=True)
class SingularValueProfile:
    """ Singular values of assembled sections, one row (D, d, values) per section, values decreasing. """

    rows: List[Tuple[int, int, np.ndarray]]

    def kth_largest(self, k: int) -> Dict[Tuple[int, int], float]:
        """
        The k-th largest singular value of every section, counted from 1; nan when a section is smaller than k.
        """

        require(k >= 1, f'k must be positive, got {k}')
        return {(D, d): float(values[k - 1]) if values.size >= k else math.nan for D, d, values in self.rows}

    def values(self, max_degree: int, channels: int) -> np.ndarray:
        for D, d, values in self.rows:
            if (D, d) == (max_degree, channels):
                return values
        raise IllegalArgumentException(f'no section D={max_degree} d={channels} in the profile')

    def to_csv(self, path: Union[str, Path]) -> Path:
        rows = [(D, d, rank, sigma) for D, d, values in self.rows for rank, sigma in enumerate(values, 1)]
        return write_csv(path, ['D', 'd', 'rank', 'sigma'], rows)

    def to_dict(self) -> dict:
        return {'sections': [{'D': D, 'd': d, 'singular_values': values} for D, d, values in self.rows]}


def singular_value_profile(b: Symbol, degrees: Sequence[int], channels: Sequence[int], rules: Rules,
                           cache: Optional[RuleCache] = None, workers: int = 1) -> SingularValueProfile:
    """
    Assembles every section (D, d) and records its singular values. Sections with fewer channels than the symbol
    use its corner truncation.

    :raise IllegalArgumentException: for empty lists or a channel count above the symbol's
    """

    require(len(degrees) > 0 and len(channels) > 0, 'degree and channel lists must not be empty')
    require(all(1 <= d <= b.channels for d in channels),
            f'channel counts {list(channels)} must lie in 1..{b.channels}')
    rows = []
    for max_degree in degrees:
        table = basis_table(rules.params, max_degree, 1, cache)
        for d in channels:
            symbol = corner_truncate(b, d) if d < b.channels else b
            s = assemble(symbol, table.with_channels(d), rules, workers=workers)
            rows.append((max_degree, d, s.singular_values()))
            logger.debug('section D=%d d=%d: largest singular value %.12g', max_degree, d, rows[-1][2][0])
    return SingularValueProfile(rows)


@dataclass(frozen=True)
class DecayCurve:
    """ Values of one quantity along a ray z = radius * direction. """

    label: str
    quantity: str
    direction: Tuple[complex, ...]
    radii: Tuple[float, ...]
    values: np.ndarray
    vector: Optional[Tuple[complex, ...]] = None
    kernel_norms: Optional[np.ndarray] = None

    def outer_rings(self) -> List[float]:
        return [float(v) for v in self.values[-2:]]

    def normalized(self) -> np.ndarray:
        """
        Kernel values divided by the norm of the truncated kernel they were read on, ||S P_D k_z e|| / ||P_D k_z e||.
        Zero kernels give zero.
        """

        require(self.kernel_norms is not None, f'curve {self.label!r} carries no kernel norms')
        norms = np.asarray(self.kernel_norms, dtype=float)
        return np.divide(self.values, norms, out=np.zeros_like(norms), where=norms > 0)


@dataclass(frozen=True)
class BoundaryDecay:
    curves: List[DecayCurve] = field(default_factory=list)

    def curve(self, label: str) -> DecayCurve:
        for c in self.curves:
            if c.label == label:
                return c
        raise IllegalArgumentException(f'no decay curve {label!r}')

    def to_csv(self, path: Union[str, Path]) -> Path:
        rows = [(c.label, c.quantity, r, v) for c in self.curves for r, v in zip(c.radii, c.values)]
        return write_csv(path, ['curve', 'quantity', 'radius', 'value'], rows)

    def gnuplot_script(self, csv_name: str) -> str:
        lines = ['set datafile separator ","',
                 'set key autotitle columnhead',
                 'set xlabel "|z|"',
                 'set ylabel "norm"',
                 'set logscale y']
        plots = [f'"{csv_name}" using 3:(strcol(1) eq "{c.label}" ? $4 : 1/0) with linespoints title "{c.label}"'
                 for c in self.curves]
        if plots:
            lines.append('plot ' + ', \\\n     '.join(plots))
        return '\n'.join(lines) + '\n'

    def write(self, directory: Union[str, Path], stem: str = 'decay') -> Tuple[Path, Path]:
        directory = Path(directory)
        csv_path = self.to_csv(directory / f'{stem}.csv')
        script_path = directory / f'{stem}.gp'
        script_path.write_text(self.gnuplot_script(csv_path.name), encoding='utf-8')
        return csv_path, script_path


def _label(vector: np.ndarray) -> str:
    parts = [f'{c.real:.3g}' if c.imag == 0 else f'{c.real:.3g}{c.imag:+.3g}j' for c in np.asarray(vector, complex)]
    return '(' + ','.join(parts) + ')'


def boundary_decay(b: Symbol, radii: Sequence[float], directions: Sequence[np.ndarray],
                   e_vectors: Sequence[np.ndarray], table: BasisTable, rules: Rules, workers: int = 1,
                   with_berezin: bool = True) -> BoundaryDecay:
    """
    Along every unit direction u of C^n, at z = radius * u: ||T_b(k_z e)|| for each vector e, and the operator norm
    of the Berezin transform of b. Kernels near the sphere lose mass beyond degree D, so kernel curves also carry
    the norms of the truncated kernels.

    :raise IllegalArgumentException: when a radius is outside [0, 1) or a direction is not a unit vector of C^n
    """

    radii = tuple(float(r) for r in radii)
    require(len(radii) > 0 and all(0.0 <= r < 1.0 for r in radii), f'radii must lie in [0, 1), got {radii}')
    directions = [np.asarray(u, dtype=complex).reshape(-1) for u in directions]
    for u in directions:
        require(u.size == table.params.n, f'direction of dimension {u.size} used with n = {table.params.n}')
        require(abs(np.linalg.norm(u) - 1.0) <= _UNIT_TOLERANCE, f'direction {_label(u)} is not a unit vector')
    s = assemble(b, table, rules, workers=workers)
    curves = []
    for u in directions:
        points = [Point(r * u) for r in radii]
        direction = tuple(complex(c) for c in u)
        for e in e_vectors:
            e = np.asarray(e, dtype=complex)
            values = np.array(parallel_map(lambda z, v=e: apply_to_kernel(s, z, v)[1], points, workers))
            norms = np.array([np.linalg.norm(kernel_coefficients(table, z, e)) for z in points])
            curves.append(DecayCurve(f'kernel{_label(u)}{_label(e)}', 'kernel', direction, radii, values,
                                     tuple(complex(c) for c in e), norms))
        if not with_berezin:
            continue
        values = np.array(parallel_map(lambda z: opnorm_2to2(berezin_symbol(b, z, rules)), points, workers))
        curves.append(DecayCurve(f'berezin{_label(u)}', 'berezin', direction, radii, values))
    return BoundaryDecay(curves)


def decay_verdict(values: Sequence[float], settings: DecaySettings = DecaySettings()) -> Verdict:
    """
    PASS when the last value is below ``decay_ratio`` times the first, FAIL when it stays at or above
    ``flat_ratio`` times the first, INCONCLUSIVE in between. Curves within ``atol`` of zero pass.
    """

    values = np.abs(np.asarray(values, dtype=float))
    require(values.size >= 2, 'a trend needs at least two values')
    if np.max(values) <= settings.atol:
        return Verdict.PASS
    first, last = values[0], values[-1]
    if first <= settings.atol:
        return Verdict.INCONCLUSIVE
    if last < settings.decay_ratio * first:
        return Verdict.PASS
    if last >= settings.flat_ratio * first:
        return Verdict.FAIL
    return Verdict.INCONCLUSIVE


def tail_verdict(profile: Sequence[float], settings: DecaySettings = DecaySettings()) -> Verdict:
    """
    Judges a tail profile indexed by d0 = 0, 1, ...: PASS when every step at least divides it by
    1 / ``tail_halving``, FAIL when the last value keeps ``flat_ratio`` of the first. A single value carries no
    trend and is INCONCLUSIVE unless it vanishes.
    """

    profile = np.asarray(profile, dtype=float)
    require(profile.size >= 1, 'the tail profile must not be empty')
    if np.max(profile) <= settings.atol:
        return Verdict.PASS
    if profile.size == 1 or profile[0] <= settings.atol:
        return Verdict.INCONCLUSIVE
    limit = settings.tail_halving * (1.0 + _HALVING_SLACK)
    halving = all(after <= limit * before or after <= settings.atol for before, after in zip(profile, profile[1:]))
    if halving:
        return Verdict.PASS
    if profile[-1] >= settings.flat_ratio * profile[0]:
        return Verdict.FAIL
    return Verdict.INCONCLUSIVE


def localization_threshold(params: SpaceParams) -> float:
    """ The exponent bound (n + 2 + 2 alpha) / (1 + alpha); the functionals need p above it. """

    return (params.n + 2 + 2 * params.alpha) / (1 + params.alpha)


def _localized_value(b: Symbol, p: float, z: Point, j_list: Sequence[int], table: BasisTable,
                     rules: Rules) -> Dict[int, float]:
    s = assemble(compose_mobius(b, z), table, rules)
    rule = rules.resolve(0.0, (), int(math.ceil(p)) * table.max_degree)
    constant = MultiIndex((0,) * table.params.n)
    values = {}
    for j in j_list:
        column = s.matrix[:, table.index(constant, j)]
        aggregate = np.sum(np.abs(synthesize(table, column, rule.nodes)), axis=1)
        values[j] = float(np.real(weighted_sum(rule.weights, aggregate ** p))) ** (1.0 / p)
    return values


def localization_profile(b: Symbol, p: float, z_grid: Sequence[Point], j_list: Sequence[int], table: BasisTable,
                         rules: Rules, workers: int = 1) -> Dict[int, float]:
    """
    For every channel j the grid maximum over z of the L^p norm of u -> sum_i |<(T_{b o phi_z} e_j)(u), e_i>|,
    where T_{b o phi_z} acts on the constant function e_j. The channel sum is the exact finite sum over the
    table's channels.

    :raise IllegalArgumentException: when p is at or below the threshold or a channel is outside 1..d
    """

    threshold = localization_threshold(table.params)
    if p <= threshold:
        raise IllegalArgumentException(f'p = {p} must exceed (n + 2 + 2 alpha) / (1 + alpha) = {threshold:.6g}')
    j_list = list(j_list)
    require(len(j_list) > 0, 'the channel list must not be empty')
    require(all(1 <= j <= table.channels for j in j_list), f'channels {j_list} must lie in 1..{table.channels}')
    z_grid = list(z_grid)
    require(len(z_grid) > 0, 'the z grid must not be empty')
    cells = parallel_map(lambda z: _localized_value(b, p, z, j_list, table, rules), z_grid, workers)
    return {j: max(cell[j] for cell in cells) for j in j_list}


def sufficiently_localized_functional(b: Symbol, p: float, z_grid: Sequence[Point], j_list: Sequence[int],
                                      table: BasisTable, rules: Rules, workers: int = 1) -> float:
    """
    Maximum of `localization_profile` over the channels, a grid lower bound.
    """

    value = max(localization_profile(b, p, z_grid, j_list, table, rules, workers).values())
    logger.info('localized functional of %s at p=%g: %.12g', b.kind, p, value)
    return value


def companion_functional(b: Symbol, p: float, z_grid: Sequence[Point], j_list: Sequence[int], table: BasisTable,
                         rules: Rules, workers: int = 1) -> float:
    return sufficiently_localized_functional(adjoint_symbol(b), p, z_grid, j_list, table, rules, workers)


def _boundedness(b: Symbol, grid: List[Point], rules: Rules, decay: DecaySettings, workers: int) -> CriterionResult:
    bmo = bmo1_seminorm(b, rules, grid, NormKind.OP_2TO2, workers=workers)
    berezin = max(parallel_map(lambda z: opnorm_2to2(berezin_symbol(b, z, rules)), grid, workers))
    bounded = all(math.isfinite(v) and v <= decay.bounded_limit for v in (bmo, berezin))
    return CriterionResult('bmo_and_berezin_bounded', Verdict.PASS if bounded else Verdict.FAIL,
                           decay.bounded_limit, 'both grid suprema finite and at most the threshold',
                           {'bmo_seminorm': bmo, 'berezin_sup': berezin})


def _tail(name: str, b: Symbol, grid: List[Point], rules: Rules, decay: DecaySettings,
          workers: int) -> CriterionResult:
    profile = tail_decay_profile(b, rules, grid, range(b.channels + 1), workers)
    judged = profile[:-1] if len(profile) > 1 else profile
    return CriterionResult(name, tail_verdict(judged, decay), decay.tail_halving,
                           f'profile at least halves per step; fails when the last value keeps {decay.flat_ratio} '
                           f'of the first', {'profile': profile})


def _corner_decay(b: Symbol, table: BasisTable, rules: Rules, decay: DecaySettings,
                  workers: int) -> CriterionResult:
    direction = np.eye(table.params.n, dtype=complex)[0]
    verdicts, evidence = [], {}
    for d in range(1, b.channels + 1):
        corner = corner_truncate(b, d) if d < b.channels else b
        vectors = [np.eye(d, dtype=complex)[0]]
        if d > 1:
            vectors.append(np.ones(d, dtype=complex) / math.sqrt(d))
        curves = boundary_decay(corner, decay.radii, [direction], vectors, table.with_channels(d), rules, workers,
                                with_berezin=False)
        verdicts += [decay_verdict(c.normalized(), decay) for c in curves.curves]
        evidence[f'd={d}'] = {c.label: {'value': c.outer_rings(),
                                        'normalized': [float(v) for v in c.normalized()[-2:]],
                                        'kernel_norm': [float(v) for v in c.kernel_norms[-2:]]}
                              for c in curves.curves}
    return CriterionResult('corner_kernel_decay', Verdict.worst(verdicts), decay.decay_ratio,
                           f'||T(P k_z e)|| / ||P k_z e|| at the outermost radius below the threshold times its value '
                           f'at radius {decay.radii[0]}, P the projection onto degree {table.max_degree}', evidence)


def fourfold_report(b: Symbol, table: BasisTable, rules: Rules, grid: GridSettings = GridSettings(),
                    decay: DecaySettings = DecaySettings(), workers: int = 1) -> CompactnessReport:
    """
    Evaluates the four compactness conditions on finite sections: boundedness of the BMO seminorm and the
    Berezin transform, tail decay of b, tail decay of its adjoint, and boundary decay of ||T(k_z e)|| for
    every corner truncation. Every value is read on finite grids, so the verdicts are trend judgements.

    :raise IllegalArgumentException: when the symbol and the table disagree on the channels
    """

    require(b.channels == table.channels, f'symbol with {b.channels} channels on a table with {table.channels}')
    points = points_on_grid(table.params, grid.radii, grid.angles)
    criteria = [
        _boundedness(b, points, rules, decay, workers),
        _tail('tail_decay', b, points, rules, decay, workers),
        _tail('adjoint_tail_decay', adjoint_symbol(b), points, rules, decay, workers),
        _corner_decay(b, table, rules, decay, workers)
    ]
    report = CompactnessReport(b.to_dict(), table.params, {'max_degree': table.max_degree, 'channels': b.channels},
                               {'z_grid': grid.dict(), 'decay': decay.dict()}, criteria)
    logger.info('fourfold report for %s: %s', b.kind, ', '.join(f'{c.name}={c.verdict.value}' for c in criteria))
    return report


def essential_norm_proxy(s: TruncatedOperator, f_samples: Sequence[np.ndarray], z_ring: Sequence[Point],
                         rules: Rules) -> float:
    """
    Grid proxy for the essential norm: the maximum over samples f and ring points z of ||S^z f||. It is not the
    essential norm; it only reads the trend of the conjugates near the sphere.

    :raise IllegalArgumentException: when a sample is not a unit vector supported on the degree D / 2 block
    """

    f_samples = [np.asarray(f, dtype=complex).reshape(-1) for f in f_samples]
    z_ring = list(z_ring)
    require(len(f_samples) > 0 and len(z_ring) > 0, 'samples and ring must not be empty')
    outside = np.setdiff1d(np.arange(s.size), s.table.block(s.table.max_degree // 2))
    for f in f_samples:
        require(f.size == s.size, f'sample of size {f.size} used with an operator of size {s.size}')
        require(abs(np.linalg.norm(f) - 1.0) <= _UNIT_TOLERANCE, 'samples must be unit vectors')
        require(not np.any(f[outside]), 'samples must be supported on the block of degree D / 2')
    value = 0.0
    for z in z_ring:
        conjugated = conjugate(s, z, rules)
        unreliable = np.setdiff1d(np.arange(s.size), conjugated.valid_indices())
        if any(np.any(f[unreliable]) for f in f_samples):
            logger.warning('samples reach above degree %d, where the conjugate at |z|=%.4g is not reliable',
                           conjugated.valid_degree, z.norm)
        value = max(value, max(float(np.linalg.norm(conjugated.matrix @ f)) for f in f_samples))
    logger.info('essential norm grid proxy over %d ring points: %.12g', len(z_ring), value)
    return value
