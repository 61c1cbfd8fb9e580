"""Crossroad surfaces, the typical-crossroad angle density and the occupation probability.

Street widths and surfaces are in meters; user densities enter in users per km
and are converted to users per meter before forming the surface density
lambda / l.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy.special import roots_legendre

from config import (ANGLE_TOLERANCE, EXP_UNDERFLOW, QUADRATURE_MAX_NODES,
                    QUADRATURE_NODES, QUADRATURE_TOLERANCE)
from enums import SurfaceKind
from errors import CrossroadDomainError

logger = logging.getLogger(__name__)

PI = math.pi
DENSITY_PEAK = math.sqrt(3.0) / PI  # f at the symmetric crossroad
METERS_PER_KM = 1000.0


@dataclass(frozen=True)
class CrossroadAngles:
    """Two free angles of a degree-3 crossroad; the third is implied"""

    alpha: float
    beta: float

    @property
    def delta(self) -> float:
        return 2.0 * PI - self.alpha - self.beta

    @property
    def in_domain(self) -> bool:
        return 0.0 < self.alpha < PI and PI - self.alpha < self.beta < PI

    def rotations(self) -> list["CrossroadAngles"]:
        """The three circular permutations (alpha, beta), (beta, delta), (delta, alpha)"""
        return [
            self,
            CrossroadAngles(self.beta, self.delta),
            CrossroadAngles(self.delta, self.alpha),
        ]


@dataclass(frozen=True)
class CrossroadGeometry:
    street_width_l: float  # meters
    surface_kind: SurfaceKind = SurfaceKind.CIRCUMCIRCLE

    def __post_init__(self) -> None:
        if not self.street_width_l > 0:
            raise CrossroadDomainError(f"street width must be positive, got {self.street_width_l}")
        if isinstance(self.surface_kind, str):
            object.__setattr__(self, 'surface_kind', SurfaceKind(self.surface_kind))


@dataclass(frozen=True)
class OccupationInputs:
    lam: float  # users per km of street
    relay_fraction_p: float
    geometry: CrossroadGeometry

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise CrossroadDomainError(f"user density must be nonnegative, got {self.lam}")
        if not 0.0 <= self.relay_fraction_p <= 1.0:
            raise CrossroadDomainError(f"relay fraction must lie in [0, 1], got {self.relay_fraction_p}")


# Array forms of the closed-form surfaces

def _guard_domain(alpha, beta) -> tuple[np.ndarray, np.ndarray]:
    """Reject angles outside the domain and clamp near-boundary angles inward"""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    tol = ANGLE_TOLERANCE
    outside = ((alpha < -tol) | (alpha > PI + tol) | (beta > PI + tol)
               | (beta < PI - alpha - tol) | ~np.isfinite(alpha) | ~np.isfinite(beta))
    if np.any(outside):
        raise CrossroadDomainError("angles outside 0 < alpha < pi, pi - alpha < beta < pi")
    alpha = np.clip(alpha, tol, PI - tol)
    beta = np.minimum(np.maximum(beta, PI - alpha + tol), PI - tol)
    return alpha, beta


def _cot(x):
    return 1.0 / np.tan(x)


def triangle_area(l: float, alpha, beta) -> np.ndarray:
    alpha, beta = _guard_domain(alpha, beta)
    return (l * l / 4.0) * (_cot(alpha / 2) + _cot(beta / 2) - _cot((alpha + beta) / 2))


def _side_squared(l: float, a, b):
    return (l * l / 4.0) * ((_cot(a / 2) - _cot(b / 2)) ** 2 + 4.0)


def side_lengths_squared(l: float, alpha, beta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    alpha, beta = _guard_domain(alpha, beta)
    delta = 2.0 * PI - alpha - beta
    return (_side_squared(l, alpha, beta),
            _side_squared(l, beta, delta),
            _side_squared(l, delta, alpha))


def circumcircle_area(l: float, alpha, beta) -> np.ndarray:
    ab2, bc2, ca2 = side_lengths_squared(l, alpha, beta)
    s = triangle_area(l, alpha, beta)
    return PI * ab2 * bc2 * ca2 / (16.0 * s * s)


def surface_area(geometry: CrossroadGeometry, alpha, beta) -> np.ndarray:
    if geometry.surface_kind is SurfaceKind.TRIANGLE:
        return triangle_area(geometry.street_width_l, alpha, beta)
    return circumcircle_area(geometry.street_width_l, alpha, beta)


def density(alpha, beta) -> np.ndarray:
    """Joint density of the typical crossroad angles, zero off the open domain"""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    inside = (alpha > 0) & (alpha < PI) & (beta > PI - alpha) & (beta < PI)
    values = -(8.0 / (3.0 * PI)) * np.sin(alpha) * np.sin(beta) * np.sin(alpha + beta)
    return np.where(inside, values, 0.0)


# Scalar operations on domain types

def triangle_surface(geometry: CrossroadGeometry, angles: CrossroadAngles) -> float:
    """Area in m^2 of the triangle bounded by the three street borders"""
    return float(triangle_area(geometry.street_width_l, angles.alpha, angles.beta))


def side_lengths(geometry: CrossroadGeometry, angles: CrossroadAngles) -> tuple[float, float, float]:
    """Sides (AB, BC, CA) in meters, by the law of cosines"""
    squares = side_lengths_squared(geometry.street_width_l, angles.alpha, angles.beta)
    return tuple(float(np.sqrt(sq)) for sq in squares)


def circumcircle_surface(geometry: CrossroadGeometry, angles: CrossroadAngles) -> float:
    """Area in m^2 of the circumcircle of the border triangle"""
    return float(circumcircle_area(geometry.street_width_l, angles.alpha, angles.beta))


def crossroad_surface(geometry: CrossroadGeometry, angles: CrossroadAngles) -> float:
    return float(surface_area(geometry, angles.alpha, angles.beta))


def angle_density(angles: CrossroadAngles) -> float:
    return float(density(angles.alpha, angles.beta))


# Quadrature over the triangular domain

@lru_cache(maxsize=16)
def _tensor_nodes(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre product nodes with beta = pi - alpha + u * alpha"""
    x, w = roots_legendre(n)
    alpha = (PI / 2.0) * (x + 1.0)
    u = (x + 1.0) / 2.0
    a, uu = np.meshgrid(alpha, u, indexing='ij')
    b = PI - a + uu * a
    weights = ((PI / 2.0) * w)[:, None] * (w / 2.0)[None, :] * a
    for array in (a, b, weights):
        array.flags.writeable = False
    return a, b, weights


def _tensor_rule(fn, n: int) -> float:
    a, b, weights = _tensor_nodes(n)
    return math.fsum((weights * fn(a, b)).ravel())


def _adaptive(estimate, tolerance: float = QUADRATURE_TOLERANCE) -> float:
    n = QUADRATURE_NODES
    previous = estimate(n)
    while n < QUADRATURE_MAX_NODES:
        n *= 2
        current = estimate(n)
        if abs(current - previous) < tolerance:
            return current
        previous = current
    logger.warning("quadrature did not settle below %g at %d nodes", tolerance, n)
    return previous


def integrate_over_domain(fn, tolerance: float = QUADRATURE_TOLERANCE) -> float:
    """Integral of fn(alpha, beta) over 0 < alpha < pi, pi - alpha < beta < pi"""
    return _adaptive(lambda n: _tensor_rule(fn, n), tolerance)


def _safe_exp(argument: np.ndarray) -> np.ndarray:
    return np.where(argument < EXP_UNDERFLOW, 0.0, np.exp(np.maximum(argument, EXP_UNDERFLOW)))


def mean_vacancy(lam: float, geometry: CrossroadGeometry) -> float:
    """Probability that no user stands inside the typical crossroad"""
    if lam < 0:
        raise CrossroadDomainError(f"user density must be nonnegative, got {lam}")
    if lam == 0:
        return 1.0
    surface_density = (lam / METERS_PER_KM) / geometry.street_width_l  # users per m^2

    def vacancy(a, b):
        return density(a, b) * _safe_exp(-surface_density * surface_area(geometry, a, b))

    # Ratio to the same rule's mass of f keeps E inside (0, 1]
    return _adaptive(lambda n: _tensor_rule(vacancy, n) / _tensor_rule(density, n))


def mean_vacancy_mc(lam: float, geometry: CrossroadGeometry, alpha: np.ndarray,
                    beta: np.ndarray) -> tuple[float, float]:
    """Sample mean of the vacancy over given typical angles, with its standard error"""
    if lam < 0:
        raise CrossroadDomainError(f"user density must be nonnegative, got {lam}")
    surface_density = (lam / METERS_PER_KM) / geometry.street_width_l
    values = _safe_exp(-surface_density * surface_area(geometry, alpha, beta))
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def occupation_probability(inputs: OccupationInputs) -> float:
    """F = 1 - (1 - p) E: crossroad holds a relay or a user"""
    vacancy = mean_vacancy(inputs.lam, inputs.geometry)
    return 1.0 - (1.0 - inputs.relay_fraction_p) * vacancy


def invert_for_relay_fraction(p_star: float, lam: float, geometry: CrossroadGeometry) -> float:
    """Relay fraction p solving F(lambda, p, l) = p_star; unclamped, -inf when users always fill crossroads"""
    if not 0.0 <= p_star <= 1.0:
        raise CrossroadDomainError(f"p_star must lie in [0, 1], got {p_star}")
    vacancy = mean_vacancy(lam, geometry)
    if vacancy == 0.0:
        return -math.inf
    return 1.0 - (1.0 - p_star) / vacancy


def occupation_grid(lambdas, ps, geometry: CrossroadGeometry) -> pd.DataFrame:
    """F over the product of a lambda grid and a p grid"""
    rows = []
    for lam in lambdas:
        vacancy = mean_vacancy(float(lam), geometry)
        for p in ps:
            rows.append((float(lam), float(p), 1.0 - (1.0 - float(p)) * vacancy))
    return pd.DataFrame(rows, columns=['lambda', 'p', 'F'])


def sample_typical_angles(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Rejection sample of n angle pairs from the typical crossroad density"""
    alphas, betas = [], []
    needed = n
    while needed > 0:
        batch = min(max(1024, needed * 6), 1 << 20)
        a = rng.uniform(0.0, PI, batch)
        b = rng.uniform(0.0, PI, batch)
        accept = rng.uniform(0.0, DENSITY_PEAK, batch) < density(a, b)
        alphas.append(a[accept][:needed])
        betas.append(b[accept][:needed])
        needed -= len(alphas[-1])
    return np.concatenate(alphas), np.concatenate(betas)
