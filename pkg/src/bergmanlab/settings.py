from __future__ import annotations

import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, validator

from bergmanlab.geometry import SpaceParams

__all__ = [
    'QuadraturePolicy',
    'NormSearchSettings',
    'GridSettings',
    'DecaySettings',
    'Tolerances',
    'SpaceSettings'
]


class _Settings(BaseModel):
    class Config:  # pylint: disable=too-few-public-methods
        extra = 'forbid'
        allow_mutation = False


class QuadraturePolicy(_Settings):
    """
    Rule-selection policy. For an evaluation point z the radial count is at least
    ``radial_base + radial_slope * |z|^2`` and the angular count at least
    ``angular_base + ceil(angular_slope / -ln|z|)``, both capped. A fixed resolution, when given,
    replaces the policy and is checked against it.
    """

    radial_base: int = Field(40, ge=1)
    radial_slope: float = Field(200.0, ge=0)
    angular_base: int = Field(64, ge=1)
    angular_slope: float = Field(36.0, ge=0)
    radial_cap: int = Field(400, ge=1)
    angular_cap: int = Field(512, ge=1)
    radial_cap_2d: int = Field(16, ge=1)
    angular_cap_2d: int = Field(24, ge=1)
    radial_points: Optional[int] = Field(None, ge=1)
    angular_points: Optional[int] = Field(None, ge=1)

    def radial_requirement(self, n: int, radius: float) -> int:
        cap = self.radial_cap if n == 1 else self.radial_cap_2d
        return min(int(math.ceil(self.radial_base + self.radial_slope * radius ** 2)), cap)

    def angular_requirement(self, n: int, radius: float) -> int:
        cap = self.angular_cap if n == 1 else self.angular_cap_2d
        if radius <= 0.0:
            return min(self.angular_base, cap)
        return min(self.angular_base + int(math.ceil(self.angular_slope / -math.log(radius))), cap)

    @property
    def fixed(self) -> Optional[Tuple[int, int]]:
        if self.radial_points is None or self.angular_points is None:
            return None
        return self.radial_points, self.angular_points


class NormSearchSettings(_Settings):
    """
    Search for the l2 to l1 norm: a phase grid of ``phases`` points per free coordinate, shrunk to a quarter of
    ``max_grid`` cells, seeds fixed-point ascent; box refinement then spends the rest of the ``max_grid``
    evaluations on an upper bound. A result is exact when that bound is within ``exact_gap`` of the value.
    """

    phases: int = Field(64, ge=4)
    max_grid: int = Field(2 ** 22, ge=16)
    ascent_starts: int = Field(8, ge=1)
    ascent_iterations: int = Field(200, ge=0)
    exact_max_channels: int = Field(6, ge=1)
    exact_gap: float = Field(1e-4, gt=0)


class GridSettings(_Settings):
    """
    Evaluation grid for sup-type quantities: every radius is combined with ``angles`` directions per
    complex coordinate.
    """

    radii: List[float] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95]
    angles: int = Field(8, ge=1)

    @validator('radii')
    def _check_radii(cls, value):  # pylint: disable=no-self-argument
        if not value:
            raise ValueError('radii must not be empty')
        if any(r < 0.0 or r >= 1.0 for r in value):
            raise ValueError('radii must lie in [0, 1)')
        return value


class DecaySettings(_Settings):
    """
    Thresholds of the trend verdicts: a curve passes when its last value is below ``decay_ratio`` times
    its first and fails when it stays above ``flat_ratio`` times its first.
    """

    radii: List[float] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.99]
    decay_ratio: float = Field(0.1, gt=0)
    flat_ratio: float = Field(0.9, gt=0)
    tail_halving: float = Field(0.5, gt=0)
    atol: float = Field(1e-12, ge=0)
    bounded_limit: float = Field(1e6, gt=0)

    @validator('radii')
    def _check_radii(cls, value):  # pylint: disable=no-self-argument
        if len(value) < 2:
            raise ValueError('at least two radii are needed for a trend')
        if any(r < 0.0 or r >= 1.0 for r in value):
            raise ValueError('radii must lie in [0, 1)')
        return sorted(value)


class Tolerances(_Settings):
    """
    Tolerances of the identity battery.
    """

    exact: float = 1e-10
    adjoint: float = 1e-9
    berezin: float = 5e-6
    conjugation: float = 5e-5
    lift: float = 1e-8
    geometry: float = 1e-10
    kernel_identity: float = 1e-6


class SpaceSettings(_Settings):
    """ The ball dimension n and the weight alpha of the space. """

    n: int = Field(1, ge=1)
    alpha: float = Field(0.0, gt=-1)

    @property
    def params(self) -> SpaceParams:
        return SpaceParams(self.n, self.alpha)
