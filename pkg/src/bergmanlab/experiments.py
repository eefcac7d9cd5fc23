from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError, validator
from scipy.special import betainc

from bergmanlab import config
from bergmanlab.basis import basis_table, enumerate_multi_indices
from bergmanlab.berezin import berezin_field, berezin_operator, berezin_symbol, bmo1_seminorm, tail_decay_profile
from bergmanlab.cache import CACHE_VERSION, RuleCache
from bergmanlab.config import ConfigException, ConfigFactory
from bergmanlab.diagnostics import (boundary_decay, companion_functional, decay_verdict, essential_norm_proxy,
                                    fourfold_report, localization_profile, localization_threshold,
                                    singular_value_profile, sufficiently_localized_functional)
from bergmanlab.enums import NormKind, Verdict
from bergmanlab.exceptions import ManifestException, PrecisionException
from bergmanlab.functions import require
from bergmanlab.geometry import (Point, SpaceParams, inner, kernel_phase, mobius, mobius_nodes, normalized_kernel,
                                 normalized_kernel_nodes, points_on_grid, unimodular_gamma)
from bergmanlab.io import digest, to_jsonable, write_json
from bergmanlab.norms import harmonic_witness
from bergmanlab.quadrature import RuleProvider
from bergmanlab.settings import (DecaySettings, GridSettings, NormSearchSettings, QuadraturePolicy, SpaceSettings,
                                 Tolerances)
from bergmanlab.symbols import (Constant, DenseMatrix, DiagonalGeometric, Indicator, LiftA1j, LiftA2kj, LiftBkj,
                                Monomial, ScalarSymbol, ScalarTimesIdentity, Symbol, adjoint_symbol, compose_mobius,
                                corner_truncate, parse_symbol, tail_truncate)
from bergmanlab.toeplitz import (TruncatedOperator, adjoint, apply_to_kernel, assemble, compose, conjugate,
                                 truncation_matrices)

__all__ = [
    'EXIT_OK',
    'EXIT_FAILURE',
    'EXIT_INCONCLUSIVE',
    'EXIT_USAGE',
    'ExperimentManifest',
    'CheckResult',
    'RunResult',
    'exit_code',
    'random_points',
    'battery_symbol',
    'geometry_checks',
    'operator_checks',
    'indicator_eigenvalues',
    'diagonal_oracle',
    'cmd_identity_suite',
    'cmd_e1_compact_diagonal',
    'cmd_e2_noncompact_tau_identity',
    'cmd_e3_localized',
    'cmd_berezin',
    'cmd_bmo',
    'cmd_assemble',
    'cmd_svd',
    'cmd_cache',
    'COMMANDS',
    'CACHE_ACTIONS'
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 4

CACHE_ACTIONS = ('list', 'build', 'verify', 'purge')

_DEFAULTS = {'cache_dir': '${envs.BERGMANLAB_CACHE_DIR?.bergmanlab-cache}'}

# operator Berezin transforms are compared on a wider table so that kernels at |z| = 0.7 are not truncated
_BEREZIN_DEGREE = 48
_BEREZIN_RADII = {1: (0.0, 0.4, 0.7), 2: (0.0, 0.3)}
_SAMPLE_RADIUS = 0.9

_ORACLE_TOLERANCE = 1e-8
_MULTIPLICITY_TOLERANCE = 1e-10
_FLATNESS_TOLERANCE = 1e-10
_LOCALIZATION_TOLERANCE = 1e-6


class ExperimentManifest(BaseModel):
    """
    A complete description of a run: re-running the same manifest reproduces every CSV and JSON output.
    ``threads``, ``out`` and ``cache_dir`` change where and how fast a run happens, not what it writes, so they
    are left out of the manifest hash.
    """

    class Config:  # pylint: disable=too-few-public-methods
        extra = 'forbid'
        allow_mutation = False

    experiment: str = 'identity-suite'
    space: SpaceSettings = SpaceSettings()
    symbol: Optional[dict] = None
    radius: float = Field(0.5, ge=0.0, le=1.0)
    degrees: List[int] = [16]
    channels: List[int] = [3]
    p: Optional[float] = Field(None, gt=0)
    ring: List[float] = [0.3, 0.6, 0.9]
    samples: int = Field(200, ge=1)
    seed: int = 0
    threads: int = Field(1, ge=1)
    out: str = 'results'
    cache_dir: Optional[str] = None
    quadrature: QuadraturePolicy = QuadraturePolicy()
    norm_search: NormSearchSettings = NormSearchSettings()
    grid: GridSettings = GridSettings()
    decay: DecaySettings = DecaySettings()
    tolerances: Tolerances = Tolerances()

    @validator('degrees')
    def _check_degrees(cls, value):  # pylint: disable=no-self-argument
        if not value:
            raise ValueError('the degree sweep must not be empty')
        if any(v < 0 for v in value):
            raise ValueError('degrees must be nonnegative')
        return sorted(set(value))

    @validator('channels')
    def _check_channels(cls, value):  # pylint: disable=no-self-argument
        if not value:
            raise ValueError('the channel sweep must not be empty')
        if any(v < 1 for v in value):
            raise ValueError('channel counts must be positive')
        return sorted(set(value))

    @validator('ring')
    def _check_ring(cls, value):  # pylint: disable=no-self-argument
        if not value:
            raise ValueError('the ring must not be empty')
        if any(r < 0.0 or r >= 1.0 for r in value):
            raise ValueError('ring radii must lie in [0, 1)')
        return value

    @property
    def params(self) -> SpaceParams:
        return self.space.params

    @property
    def rules(self) -> RuleProvider:
        return RuleProvider(self.params, self.quadrature, self.cache)

    @property
    def cache(self) -> Optional[RuleCache]:
        return RuleCache(self.cache_dir) if self.cache_dir else None

    @property
    def max_degree(self) -> int:
        return self.degrees[-1]

    @property
    def max_channels(self) -> int:
        return self.channels[-1]

    def symbol_for(self, channels: int) -> Symbol:
        """
        The manifest symbol; without one, the indicator of the ball of ``radius`` times the identity.
        """

        if self.symbol is None:
            return ScalarTimesIdentity(Indicator(self.radius), channels)
        return parse_symbol(self.symbol, channels)

    def manifest_hash(self) -> str:
        return digest(self.dict(exclude={'threads', 'out', 'cache_dir'}))

    def provenance(self, command: str) -> dict:
        return {
            'command': command,
            'experiment': self.experiment,
            'manifest_hash': self.manifest_hash(),
            'cache_version': CACHE_VERSION,
            'space': self.params.to_dict(),
            'tolerances': self.tolerances.dict()
        }

    @staticmethod
    def load(path: Optional[str] = None, argv: Optional[Sequence[str]] = None) -> ExperimentManifest:
        """
        Reads a manifest file (JSON or YAML) with ``--key.subkey value`` overrides on top.

        :raise ManifestException: on syntax errors, unreadable files and invalid fields
        """

        try:
            layered = ConfigFactory.load(path, argv, config.Config(dict(_DEFAULTS)))
        except ConfigException as e:
            raise ManifestException(f'{path or "manifest"}: {e}') from e
        except OSError as e:
            raise ManifestException(f'cannot read manifest {path}: {e}') from e

        try:
            return ExperimentManifest.parse_obj(layered.to_dict())
        except ValidationError as e:
            reasons = '; '.join(f'{".".join(str(p) for p in error["loc"])}: {error["msg"]}' for error in e.errors())
            raise ManifestException(f'{path or "manifest"}: {reasons}') from e


@dataclass(frozen=True)
class CheckResult:
    name: str
    verdict: Verdict
    error: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ''

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'verdict': self.verdict.value,
            'error': self.error,
            'tolerance': self.tolerance,
            'detail': self.detail
        }


def exit_code(checks: Sequence[CheckResult]) -> int:
    verdict = Verdict.worst(c.verdict for c in checks)
    if verdict == Verdict.FAIL:
        return EXIT_FAILURE
    if verdict == Verdict.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


@dataclass(frozen=True)
class RunResult:
    command: str
    directory: Path
    provenance: dict
    checks: List[CheckResult] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        return Verdict.worst(c.verdict for c in self.checks)

    @property
    def exit_code(self) -> int:
        return exit_code(self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            'provenance': self.provenance,
            'verdict': self.verdict.value,
            'exit_code': self.exit_code,
            'checks': [c.to_dict() for c in self.checks],
            'outputs': sorted(p.name for p in self.outputs),
            'summary': to_jsonable(self.summary)
        }


def _directory(manifest: ExperimentManifest, command: str) -> Path:
    directory = Path(manifest.out) / command
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _finish(manifest: ExperimentManifest, command: str, checks: List[CheckResult], summary: dict,
            outputs: List[Path]) -> RunResult:
    directory = _directory(manifest, command)
    result = RunResult(command, directory, manifest.provenance(command), checks, summary, outputs)
    write_json(directory / 'summary.json', result.to_dict())
    logger.info('%s finished: %s (exit %d)', command, result.verdict.value, result.exit_code)
    for c in checks:
        if c.verdict != Verdict.PASS:
            logger.warning('%s: %s (error %s, tolerance %s) %s', c.name, c.verdict.value, c.error, c.tolerance,
                           c.detail)
    return result


def _max_abs(values) -> float:
    return float(np.max(np.abs(np.asarray(values)), initial=0.0))


def _within(name: str, error: float, tolerance: float) -> CheckResult:
    return CheckResult(name, Verdict.PASS if error <= tolerance else Verdict.FAIL, float(error), tolerance)


def _guarded(name: str, tolerance: float, check: Callable[[], float]) -> CheckResult:
    """ Runs a check returning its error; a rule below the resolution policy makes it inconclusive. """

    try:
        return _within(name, check(), tolerance)
    except PrecisionException as e:
        return CheckResult(name, Verdict.INCONCLUSIVE, None, tolerance, str(e))


def random_points(n: int, count: int, rng: np.random.Generator, max_radius: float = _SAMPLE_RADIUS) -> List[Point]:
    """ Points spread uniformly in volume over the ball of radius ``max_radius``. """

    directions = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = max_radius * rng.uniform(size=count) ** (1.0 / (2 * n))
    return [Point(r * u) for r, u in zip(radii, directions)]


def geometry_checks(params: SpaceParams, samples: int, seed: int, tolerance: float) -> List[CheckResult]:
    """
    Automorphism and kernel identities on random samples; the kernel identities are judged relative to their
    right-hand sides.
    """

    rng = np.random.default_rng(seed)
    a_points, z_points, w_points = (random_points(params.n, samples, rng) for _ in range(3))
    origin = Point.zero(params.n)
    involution, endpoints, distance, gamma, multiplicative, phase = ([] for _ in range(6))
    for a, z, w in zip(a_points, z_points, w_points):
        moved = mobius(params, a, z)
        involution.append(_max_abs(mobius(params, a, moved).coords - z.coords))
        endpoints.append(max(_max_abs(mobius(params, a, origin).coords - a.coords), mobius(params, a, a).norm))
        expected = (1 - a.norm ** 2) * (1 - z.norm ** 2) / abs(1 - complex(inner(z.coords, a.coords))) ** 2
        distance.append(abs(1 - moved.norm ** 2 - expected))
        gamma.append(abs(abs(unimodular_gamma(z, a)) - 1))

        rhs = abs(normalized_kernel(params, w, mobius(params, z, a)))
        lhs = abs(normalized_kernel(params, mobius(params, z, w), a)) * abs(normalized_kernel(params, w, z))
        multiplicative.append(abs(lhs - rhs) / rhs)

        nodes = w.as_nodes()
        lhs = normalized_kernel_nodes(params, mobius_nodes(z.coords, nodes), a.coords) \
            * normalized_kernel_nodes(params, nodes, z.coords)
        rhs = kernel_phase(params, z, a) * normalized_kernel_nodes(params, nodes, mobius(params, z, a).coords)
        phase.append(_max_abs((lhs - rhs) / rhs))

    return [
        _within('mobius_involution', max(involution), tolerance),
        _within('mobius_endpoints', max(endpoints), tolerance),
        _within('mobius_distance_identity', max(distance), tolerance),
        _within('gamma_unimodular', max(gamma), tolerance),
        _within('kernel_multiplicativity', max(multiplicative), tolerance),
        _within('kernel_phase_identity', max(phase), tolerance)
    ]


def _coordinate(n: int, power: int = 1) -> tuple:
    return tuple(power if k == 0 else 0 for k in range(n))


def battery_symbol(n: int, channels: int) -> DenseMatrix:
    """
    A non-radial, non-normal symbol with jumps: indicators plus constants on the diagonal, holomorphic
    monomials above it and cut-off antiholomorphic monomials below it.
    """

    zero = (0,) * n
    holomorphic, antiholomorphic = Monomial(_coordinate(n), zero), Monomial(zero, _coordinate(n))
    grid = []
    for j in range(channels):
        row = []
        for k in range(channels):
            if j == k:
                row.append(Indicator(0.6) + Constant(0.25 * (j + 1)))
            elif j < k:
                row.append(holomorphic * Constant(0.5j))
            else:
                row.append(Indicator(0.7) * antiholomorphic)
        grid.append(tuple(row))
    return DenseMatrix(tuple(grid))


def _conjugation_points(n: int) -> List[Point]:
    if n == 1:
        return [Point.of(0.2), Point.of(0.1 - 0.15j)]
    return [Point.of(0.2, 0.0), Point.of(0.1, -0.15j)]


def operator_checks(manifest: ExperimentManifest, max_degree: int, channels: int) -> List[CheckResult]:
    """
    The exact operator identities on one section (D, d), for the battery symbol: truncation, corner and
    adjoint identities, Berezin transforms of the operator against the symbol, conjugation by U_z against
    composition with phi_z, kernel norms, and the lift identities.
    """

    params, rules, tol, workers = manifest.params, manifest.rules, manifest.tolerances, manifest.threads
    tag = f'[D={max_degree},d={channels}]'
    b = battery_symbol(params.n, channels)
    table = basis_table(params, max_degree, channels, manifest.cache, workers)
    try:
        s = assemble(b, table, rules, workers=workers)
    except PrecisionException as e:
        return [CheckResult(f'assemble{tag}', Verdict.INCONCLUSIVE, None, None, str(e))]

    def tail() -> float:
        errors = []
        for d0 in range(channels + 1):
            _, lower = truncation_matrices(table, d0)
            expected = assemble(tail_truncate(b, d0), table, rules, workers=workers)
            errors.append(_max_abs(compose(s, lower).matrix - expected.matrix))
        return max(errors)

    def corner() -> float:
        errors = []
        for d0 in range(1, channels + 1):
            upper, _ = truncation_matrices(table, d0)
            compressed = compose(upper, compose(s, upper))
            expected = assemble(corner_truncate(b, d0), table.with_channels(d0), rules, workers=workers)
            errors += [abs(compressed.norm() - expected.norm()),
                       _max_abs(compressed.restrict_channels(d0).matrix - expected.matrix)]
        return max(errors)

    def adjoint_identity() -> float:
        return _max_abs(adjoint(s).matrix - assemble(adjoint_symbol(b), table, rules, workers=workers).matrix)

    def berezin() -> float:
        wide = table
        if params.n == 1 and max_degree < _BEREZIN_DEGREE:
            wide = basis_table(params, _BEREZIN_DEGREE, channels, manifest.cache, workers)
        operator = s if wide is table else assemble(b, wide, rules, workers=workers)
        points = points_on_grid(params, _BEREZIN_RADII[params.n], 3)
        return max(_max_abs(berezin_operator(operator, z) - berezin_symbol(b, z, rules)) for z in points)

    def conjugation() -> float:
        errors = []
        for z in _conjugation_points(params.n):
            conjugated = conjugate(s, z, rules)
            expected = assemble(compose_mobius(b, z), table, rules, workers=workers)
            indices = conjugated.valid_indices()
            errors.append(_max_abs(conjugated.valid_block() - expected.matrix[np.ix_(indices, indices)]))
        return max(errors)

    def kernel_norm() -> float:
        e = np.ones(channels, dtype=complex) / math.sqrt(channels)
        errors = []
        for z in _conjugation_points(params.n):
            conjugated = conjugate(s, z, rules).matrix[:, :channels] @ e
            errors.append(abs(float(np.linalg.norm(conjugated)) - apply_to_kernel(s, z, e)[1]))
        return max(errors)

    def lift_decomposition() -> float:
        total = sum(assemble(LiftBkj(b.grid[row][col], row + 1, col + 1, channels), table, rules).matrix
                    for row, col in b.support())
        return _max_abs(total - s.matrix)

    def lift_composition() -> float:
        zero = (0,) * params.n
        a1 = Indicator(0.5) + Monomial(zero, _coordinate(params.n))
        a2 = Monomial(_coordinate(params.n, 2), zero) * Indicator(0.8)
        scalar = table.with_channels(1)
        t1 = assemble(ScalarSymbol(a1), scalar, rules).matrix
        t2 = assemble(ScalarSymbol(a2), scalar, rules).matrix
        actual = compose(assemble(LiftA1j(a1, 1, channels), table, rules),
                         assemble(LiftA2kj(a2, 2, 1, channels), table, rules))
        m = table.monomial_count
        expected = np.zeros((m, channels, m, channels), dtype=complex)
        expected[:, 0, :, 1] = t1 @ t2
        return _max_abs(actual.matrix - expected.reshape(table.size, table.size))

    checks = [
        _guarded(f'tail_identity{tag}', tol.exact, tail),
        _guarded(f'corner_norm_identity{tag}', tol.exact, corner),
        _guarded(f'adjoint_identity{tag}', tol.adjoint, adjoint_identity),
        _guarded(f'berezin_operator_identity{tag}', tol.berezin, berezin),
        _guarded(f'conjugation_identity{tag}', tol.conjugation, conjugation),
        _guarded(f'kernel_norm_identity{tag}', tol.conjugation, kernel_norm),
        _guarded(f'lift_decomposition{tag}', tol.lift, lift_decomposition)
    ]
    if channels >= 2:
        checks.append(_guarded(f'lift_composition{tag}', tol.lift, lift_composition))
    return checks


def cmd_identity_suite(manifest: ExperimentManifest) -> RunResult:
    """
    The identity battery: geometry identities on random samples, then the operator identities on every
    section of the sweep. Checks whose rule falls below the resolution policy are inconclusive.
    """

    logger.info('identity suite: n=%d alpha=%s degrees=%s channels=%s', manifest.params.n, manifest.params.alpha,
                manifest.degrees, manifest.channels)
    checks = geometry_checks(manifest.params, manifest.samples, manifest.seed, manifest.tolerances.geometry)
    for max_degree in manifest.degrees:
        for channels in manifest.channels:
            checks += operator_checks(manifest, max_degree, channels)
    passed = sum(c.verdict == Verdict.PASS for c in checks)
    return _finish(manifest, 'identity-suite', checks, {'passed': passed, 'total': len(checks)}, [])


def indicator_eigenvalues(params: SpaceParams, radius: float, max_degree: int) -> np.ndarray:
    """
    Eigenvalues of the Toeplitz operator of the indicator of the ball of the given radius, one per monomial of
    total degree at most ``max_degree``: the regularized incomplete beta I_{r^2}(|m| + n, alpha + 1).
    """

    degrees = np.array([m.total_degree for m in enumerate_multi_indices(params.n, max_degree)], dtype=float)
    return betainc(degrees + params.n, params.alpha + 1.0, radius ** 2)


def diagonal_oracle(params: SpaceParams, radius: float, max_degree: int, channels: int) -> np.ndarray:
    """ Singular values of the diagonal geometric indicator symbol, in decreasing order. """

    factors = 2.0 ** -np.arange(1, channels + 1)
    values = np.outer(indicator_eigenvalues(params, radius, max_degree), factors).ravel()
    return np.sort(values)[::-1]


def _unit_vectors(channels: int) -> List[np.ndarray]:
    vectors = [np.eye(channels, dtype=complex)[0]]
    if channels > 1:
        vectors.append(np.ones(channels, dtype=complex) / math.sqrt(channels))
    return vectors


def cmd_e1_compact_diagonal(manifest: ExperimentManifest) -> RunResult:
    """
    The compact diagonal example b = diag(2^-j) times the indicator of the ball of ``radius``: the fourfold
    report at the largest section, singular values across the sweep against their closed form, and the
    boundary decay curves.
    """

    params, rules, workers = manifest.params, manifest.rules, manifest.threads
    directory = _directory(manifest, 'e1-diagonal')
    b = DiagonalGeometric(Indicator(manifest.radius), manifest.max_channels)
    logger.info('e1: %s on D=%d d=%d', b.kind, manifest.max_degree, b.channels)
    table = basis_table(params, manifest.max_degree, b.channels, manifest.cache, workers)

    report = fourfold_report(b, table, rules, manifest.grid, manifest.decay, workers)
    outputs = list(report.write(directory))

    profile = singular_value_profile(b, manifest.degrees, manifest.channels, rules, manifest.cache, workers)
    outputs.append(profile.to_csv(directory / 'singular_values.csv'))
    oracle_error = max(_max_abs(profile.values(D, d) - diagonal_oracle(params, manifest.radius, D, d))
                       for D in manifest.degrees for d in manifest.channels)

    direction = np.eye(params.n, dtype=complex)[0]
    curves = boundary_decay(b, manifest.decay.radii, [direction], _unit_vectors(b.channels), table, rules, workers)
    outputs += list(curves.write(directory))
    kernel_verdict = Verdict.worst(decay_verdict(c.normalized(), manifest.decay) for c in curves.curves
                                   if c.quantity == 'kernel')

    checks = [
        CheckResult('fourfold_verdict', report.verdict, detail=', '.join(
            f'{c.name}={c.verdict.value}' for c in report.criteria)),
        _within('singular_value_oracle', oracle_error, _ORACLE_TOLERANCE),
        CheckResult('boundary_kernel_decay', kernel_verdict, tolerance=manifest.decay.decay_ratio)
    ]
    summary = {'report': report.to_dict(), 'singular_values': profile.to_dict()}
    return _finish(manifest, 'e1-diagonal', checks, summary, outputs)


def _spread(values: Sequence[float]) -> float:
    return float(np.max(values) - np.min(values)) if len(values) else 0.0


def cmd_e2_noncompact_tau_identity(manifest: ExperimentManifest) -> RunResult:
    """
    The non-compact example tau I_d with tau the indicator of the ball of ``radius``: every spectrum is d copies
    of the scalar one, the d-th singular value does not move with d, the tail profile stays flat and the
    essential norm proxy is the same for every d.
    """

    params, rules, workers = manifest.params, manifest.rules, manifest.threads
    directory = _directory(manifest, 'e2-taui')
    tau = Indicator(manifest.radius)
    b = ScalarTimesIdentity(tau, manifest.max_channels)
    logger.info('e2: %s on degrees=%s channels=%s', b.kind, manifest.degrees, manifest.channels)

    profile = singular_value_profile(b, manifest.degrees, manifest.channels, rules, manifest.cache, workers)
    scalar = singular_value_profile(ScalarSymbol(tau), manifest.degrees, [1], rules, manifest.cache, workers)
    outputs = [profile.to_csv(directory / 'singular_values.csv')]

    multiplicity, dth = 0.0, {}
    for D in manifest.degrees:
        base = scalar.values(D, 1)
        for d in manifest.channels:
            multiplicity = max(multiplicity, _max_abs(profile.values(D, d) - np.sort(np.repeat(base, d))[::-1]))
        dth[D] = [float(profile.values(D, d)[d - 1]) for d in manifest.channels]
    dth_spread = max(_spread(values) for values in dth.values())

    points = points_on_grid(params, manifest.grid.radii, manifest.grid.angles)
    tail = tail_decay_profile(b, rules, points, range(b.channels), workers)

    base_table = basis_table(params, manifest.max_degree, 1, manifest.cache, workers)
    ring = [Point.polar(r, np.eye(params.n, dtype=complex)[0]) for r in manifest.ring]
    proxies = {}
    for d in manifest.channels:
        s = assemble(ScalarTimesIdentity(tau, d), base_table.with_channels(d), rules, workers=workers)
        sample = np.zeros(s.size, dtype=complex)
        sample[0] = 1.0
        proxies[d] = essential_norm_proxy(s, [sample], ring, rules)

    top = float(scalar.values(manifest.max_degree, 1)[0])
    if top <= manifest.decay.atol:
        signature = 'compact (zero operator)'
    elif dth_spread <= _ORACLE_TOLERANCE:
        signature = 'non-compact signature'
    else:
        signature = 'inconclusive'

    checks = [
        _within('multiplicity_law', multiplicity, _MULTIPLICITY_TOLERANCE),
        _within('dth_singular_value_constant', dth_spread, _ORACLE_TOLERANCE),
        _within('tail_profile_flat', _spread(tail), _FLATNESS_TOLERANCE),
        _within('essential_proxy_constant', _spread(list(proxies.values())), _ORACLE_TOLERANCE)
    ]
    summary = {
        'signature': signature,
        'dth_singular_values': dth,
        'tail_profile': tail,
        'essential_norm_proxy': proxies,
        'singular_values': profile.to_dict()
    }
    logger.info('e2: %s', signature)
    return _finish(manifest, 'e2-taui', checks, summary, outputs)


def _growth_check(name: str, values: Sequence[float], atol: float) -> CheckResult:
    values = list(values)
    if max(values, default=0.0) <= atol:
        return CheckResult(name, Verdict.PASS, 0.0, atol, 'zero symbol')
    if len(values) < 2:
        return CheckResult(name, Verdict.INCONCLUSIVE, None, atol, 'a single channel dimension carries no trend')
    increasing = all(after > before for before, after in zip(values, values[1:]))
    return CheckResult(name, Verdict.PASS if increasing else Verdict.FAIL, None, atol, 'strictly increasing in d')


def cmd_e3_localized(manifest: ExperimentManifest) -> RunResult:
    """
    The localization functionals of the diagonal example and of tau I_d at p above the threshold, with the
    l2 to l1 and intersection BMO grid seminorms of both for every d up to the largest channel count.
    """

    params, rules, workers = manifest.params, manifest.rules, manifest.threads
    threshold = localization_threshold(params)
    p = manifest.p if manifest.p is not None else threshold + 0.5
    d = manifest.max_channels
    tau = Indicator(manifest.radius)
    diagonal, tau_identity = DiagonalGeometric(tau, d), ScalarTimesIdentity(tau, d)
    logger.info('e3: p=%g (threshold %.6g), D=%d d=%d', p, threshold, manifest.max_degree, d)

    table = basis_table(params, manifest.max_degree, d, manifest.cache, workers)
    points = points_on_grid(params, manifest.grid.radii, manifest.grid.angles)
    channels = list(range(1, d + 1))
    diagonal_profile = localization_profile(diagonal, p, points, channels, table, rules, workers)
    scalar_value = localization_profile(ScalarSymbol(tau), p, points, [1], table.with_channels(1), rules, workers)[1]
    scaling = max(abs(diagonal_profile[j] - 2.0 ** -j * scalar_value) for j in channels)
    tau_functional = sufficiently_localized_functional(tau_identity, p, points, channels, table, rules, workers)
    tau_companion = companion_functional(tau_identity, p, points, channels, table, rules, workers)

    scalar_bmo = bmo1_seminorm(ScalarSymbol(tau), rules, points, NormKind.OP_2TO2, manifest.norm_search, workers)
    seminorms = {'diagonal': {}, 'tau_identity': {}}
    for k in channels:
        for name, symbol in (('diagonal', DiagonalGeometric(tau, k)), ('tau_identity', ScalarTimesIdentity(tau, k))):
            seminorms[name][k] = {kind.value: bmo1_seminorm(symbol, rules, points, kind, manifest.norm_search,
                                                             workers)
                                  for kind in (NormKind.OP_2TO1, NormKind.INTERSECTION)}
    bound = scalar_bmo / math.sqrt(3.0)
    excess = max(max(v.values()) - bound for v in seminorms['diagonal'].values())

    checks = [
        _within('diagonal_functional_scaling', scaling, _LOCALIZATION_TOLERANCE),
        CheckResult('tau_identity_functionals_finite',
                    Verdict.PASS if math.isfinite(tau_functional) and math.isfinite(tau_companion) else Verdict.FAIL),
        _within('diagonal_bmo_uniform', max(excess, 0.0), _FLATNESS_TOLERANCE),
        _growth_check('tau_identity_bmo_growth', [seminorms['tau_identity'][k][NormKind.OP_2TO1.value]
                                                  for k in channels], manifest.decay.atol)
    ]
    summary = {
        'p': p,
        'threshold': threshold,
        'diagonal_profile': diagonal_profile,
        'scalar_value': scalar_value,
        'tau_identity_functional': tau_functional,
        'tau_identity_companion': tau_companion,
        'scalar_bmo_seminorm': scalar_bmo,
        'bmo_seminorms': seminorms,
        'harmonic_l1': {k: harmonic_witness(k)[0] for k in channels}
    }
    return _finish(manifest, 'e3-localized', checks, summary, [])


def cmd_berezin(manifest: ExperimentManifest) -> RunResult:
    directory = _directory(manifest, 'berezin')
    b = manifest.symbol_for(manifest.max_channels)
    points = points_on_grid(manifest.params, manifest.grid.radii, manifest.grid.angles)
    values = berezin_field(b, points, manifest.rules, manifest.threads)
    outputs = [values.to_csv(directory / 'berezin.csv'), values.to_json(directory / 'berezin.json')]
    return _finish(manifest, 'berezin', [], {'symbol': b.to_dict(), 'sup_norm': values.sup_norm()}, outputs)


def cmd_bmo(manifest: ExperimentManifest) -> RunResult:
    b = manifest.symbol_for(manifest.max_channels)
    points = points_on_grid(manifest.params, manifest.grid.radii, manifest.grid.angles)
    seminorms = {kind.value: bmo1_seminorm(b, manifest.rules, points, kind, manifest.norm_search, manifest.threads)
                 for kind in NormKind}
    return _finish(manifest, 'bmo', [], {'symbol': b.to_dict(), 'seminorms': seminorms}, [])


def cmd_assemble(manifest: ExperimentManifest) -> RunResult:
    """ Assembles the manifest symbol at every degree of the sweep and saves the matrices. """

    directory = _directory(manifest, 'assemble')
    b = manifest.symbol_for(manifest.max_channels)
    outputs, norms = [], {}
    for max_degree in manifest.degrees:
        table = basis_table(manifest.params, max_degree, b.channels, manifest.cache, manifest.threads)
        s: TruncatedOperator = assemble(b, table, manifest.rules, workers=manifest.threads)
        outputs.append(s.save(directory / f'operator_D{max_degree}', manifest.tolerances.dict()))
        norms[max_degree] = s.norm()
    return _finish(manifest, 'assemble', [], {'symbol': b.to_dict(), 'norms': norms}, outputs)


def cmd_svd(manifest: ExperimentManifest) -> RunResult:
    directory = _directory(manifest, 'svd')
    b = manifest.symbol_for(manifest.max_channels)
    channels = [d for d in manifest.channels if d <= b.channels]
    require(len(channels) > 0, f'no channel count of {manifest.channels} fits a symbol with {b.channels} channels')
    profile = singular_value_profile(b, manifest.degrees, channels, manifest.rules, manifest.cache, manifest.threads)
    outputs = [profile.to_csv(directory / 'singular_values.csv')]
    return _finish(manifest, 'svd', [], {'symbol': b.to_dict(), 'singular_values': profile.to_dict()}, outputs)


def cmd_cache(manifest: ExperimentManifest, action: str = 'list') -> RunResult:
    """
    Lists, builds, verifies or purges the rule and norm cache. ``build`` stores the rules and norm tables needed
    for every degree of the sweep.

    :raise IllegalArgumentException: for an unknown action or a manifest without a cache directory
    """

    require(action in CACHE_ACTIONS, f'unknown cache action {action!r}, expected one of {CACHE_ACTIONS}')
    cache = manifest.cache
    require(cache is not None, 'the manifest has no cache directory')
    checks: List[CheckResult] = []
    summary: Dict[str, object] = {'directory': str(cache.directory), 'action': action}
    if action == 'build':
        rules = manifest.rules
        for max_degree in manifest.degrees:
            radial, angular = rules.requirement(0.0, 2 * max_degree)
            cache.get_or_build(manifest.params, radial, angular)
            basis_table(manifest.params, max_degree, 1, cache, manifest.threads)
        summary['entries'] = cache.list()
    elif action == 'list':
        summary['entries'] = cache.list()
    elif action == 'verify':
        failures = cache.verify()
        checks.append(CheckResult('cache_checksums', Verdict.FAIL if failures else Verdict.PASS,
                                  float(len(failures)), 0.0, ', '.join(failures)))
        summary['failures'] = failures
    else:
        summary['removed'] = cache.purge()
    return _finish(manifest, 'cache', checks, summary, [])


COMMANDS: Dict[str, Callable[[ExperimentManifest], RunResult]] = {
    'identity-suite': cmd_identity_suite,
    'e1-diagonal': cmd_e1_compact_diagonal,
    'e2-taui': cmd_e2_noncompact_tau_identity,
    'e3-localized': cmd_e3_localized,
    'berezin': cmd_berezin,
    'bmo': cmd_bmo,
    'assemble': cmd_assemble,
    'svd': cmd_svd
}
