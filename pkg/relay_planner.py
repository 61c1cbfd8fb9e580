"""Minimal proportion of physical relays once users standing in crossroads are credited."""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

import pandas as pd

from config import BOOTSTRAP_RESAMPLES
from crossroad_model import CrossroadGeometry, invert_for_relay_fraction
from enums import CrossingDirection, SurfaceKind
from percolation_engine import (CrossingSpec, PercolationEstimate, default_crossing_spec,
                                estimate_p_star)
from street_geometry import Window

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PercolationSettings:
    """How p* is estimated when it is not supplied"""

    gamma: float
    window: Window
    replicates: int
    master_seed: int
    direction: CrossingDirection = CrossingDirection.LEFT_RIGHT
    contact_band: float | None = None
    bootstrap: int = BOOTSTRAP_RESAMPLES
    threads: int = 1
    progress: bool = False

    def crossing_spec(self, range_r: float) -> CrossingSpec:
        if self.contact_band is None:
            return default_crossing_spec(range_r, self.gamma, self.direction)
        return CrossingSpec(direction=self.direction, contact_band=self.contact_band)


# p* does not depend on the street width or the surface kind
_P_STAR_CACHE: dict[tuple, PercolationEstimate] = {}


def cached_p_star(lam: float, range_r: float, settings: PercolationSettings) -> PercolationEstimate:
    spec = settings.crossing_spec(range_r)
    key = (settings.gamma, lam, range_r, settings.window, settings.master_seed,
           settings.replicates, spec, settings.bootstrap)
    if key not in _P_STAR_CACHE:
        _P_STAR_CACHE[key] = estimate_p_star(
            settings.gamma, lam, range_r, settings.window, settings.replicates, settings.master_seed,
            spec=spec, threads=settings.threads, bootstrap=settings.bootstrap, progress=settings.progress)
    return _P_STAR_CACHE[key]


def clear_p_star_cache() -> None:
    _P_STAR_CACHE.clear()


@dataclass(frozen=True)
class RelayPlan:
    lam: float
    range_r: float  # km
    street_width_l: float  # m
    surface_kind: SurfaceKind
    p_star: float
    p_star_se: float
    p_c_hat: float
    unclamped_solution: float
    never_percolates: bool = False


def minimal_relay_proportion(lam: float, range_r: float, geometry: CrossroadGeometry,
                             p_star: float | PercolationEstimate | None = None,
                             settings: PercolationSettings | None = None) -> RelayPlan:
    """p_c = min(1, max(0, p)) where F(lambda, p, l) = p*"""
    never = False
    p_star_se = 0.0
    if p_star is None:
        if settings is None:
            raise ValueError("either p_star or percolation settings must be given")
        p_star = cached_p_star(lam, range_r, settings)
    if isinstance(p_star, PercolationEstimate):
        never = p_star.never_percolates
        p_star_se = p_star.std_error
        p_star = p_star.p_star_hat

    if never:
        logger.warning("graph never percolates at lambda=%s r=%s; every crossroad needs a relay", lam, range_r)
        unclamped = 1.0
        p_c = 1.0
    else:
        unclamped = invert_for_relay_fraction(p_star, lam, geometry)
        p_c = min(1.0, max(0.0, unclamped))
    return RelayPlan(
        lam=lam,
        range_r=range_r,
        street_width_l=geometry.street_width_l,
        surface_kind=geometry.surface_kind,
        p_star=p_star,
        p_star_se=p_star_se,
        p_c_hat=p_c,
        unclamped_solution=unclamped,
        never_percolates=never,
    )


@dataclass(frozen=True)
class RelayCurveRow:
    lam: float
    p_star: float
    p_star_se: float
    p_c_triangle: float
    p_c_circle: float


def _p_star_for(lam: float, range_r: float, p_star, settings: PercolationSettings | None):
    if p_star is None:
        if settings is None:
            raise ValueError("either p_star or percolation settings must be given")
        return cached_p_star(lam, range_r, settings)
    if isinstance(p_star, Mapping):
        return p_star[lam]
    return p_star


def relay_curve(lambdas, range_r: float, street_width_l: float,
                settings: PercolationSettings | None = None, p_star=None) -> list[RelayCurveRow]:
    """p*, and p_c for both crossroad surfaces, along a lambda grid.

    p_star may be one value for the whole grid, a mapping from lambda, or None to
    estimate it once per lambda.
    """
    triangle = CrossroadGeometry(street_width_l, SurfaceKind.TRIANGLE)
    circle = CrossroadGeometry(street_width_l, SurfaceKind.CIRCUMCIRCLE)
    rows = []
    for lam in lambdas:
        lam = float(lam)
        threshold = _p_star_for(lam, range_r, p_star, settings)
        tri = minimal_relay_proportion(lam, range_r, triangle, p_star=threshold)
        circ = minimal_relay_proportion(lam, range_r, circle, p_star=threshold)
        rows.append(RelayCurveRow(lam=lam, p_star=tri.p_star, p_star_se=tri.p_star_se,
                                  p_c_triangle=tri.p_c_hat, p_c_circle=circ.p_c_hat))
    return rows


def relay_curve_frame(rows: list[RelayCurveRow]) -> pd.DataFrame:
    return pd.DataFrame({
        'lambda': [row.lam for row in rows],
        'p_star': [row.p_star for row in rows],
        'p_star_se': [row.p_star_se for row in rows],
        'p_c_triangle': [row.p_c_triangle for row in rows],
        'p_c_circle': [row.p_c_circle for row in rows],
    })


def compensation_lambda(rows: list[RelayCurveRow], circle: bool = True) -> float:
    """Smallest lambda of the grid from which no physical relay is needed"""
    for row in rows:
        if (row.p_c_circle if circle else row.p_c_triangle) == 0.0:
            return row.lam
    return math.inf
