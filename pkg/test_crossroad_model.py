"""Crossroad surfaces, angle density and occupation probability."""

import math
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd
import pytest

from crossroad_model import (DENSITY_PEAK, CrossroadAngles, CrossroadGeometry, OccupationInputs,
                             angle_density, circumcircle_surface, crossroad_surface, density,
                             integrate_over_domain, invert_for_relay_fraction, mean_vacancy,
                             mean_vacancy_mc, occupation_grid, occupation_probability,
                             sample_typical_angles, side_lengths, triangle_surface)
from enums import SurfaceKind
from errors import CrossroadDomainError

EQUILATERAL = CrossroadAngles(2 * math.pi / 3, 2 * math.pi / 3)
TRIANGLE = CrossroadGeometry(20.0, SurfaceKind.TRIANGLE)
CIRCLE = CrossroadGeometry(20.0, SurfaceKind.CIRCUMCIRCLE)


def random_domain_angles(n: int, seed: int = 7, edge: float = 0.05) -> list[CrossroadAngles]:
    """Uniform points of the domain kept away from its edges"""
    rng = np.random.default_rng(seed)
    angles = []
    while len(angles) < n:
        a, b = rng.uniform(edge, math.pi - edge, 2)
        if b > math.pi - a + edge:
            angles.append(CrossroadAngles(float(a), float(b)))
    return angles


def border_triangle(l: float, angles: CrossroadAngles) -> np.ndarray:
    """Corners (A, B, C) from intersecting the street border lines.

    Streets leave the crossroad at directions 0, alpha and alpha + beta; the
    corner inside each gap is where the two borders facing that gap meet.
    """
    directions = [0.0, angles.alpha, angles.alpha + angles.beta]
    corners = []
    for k in range(3):
        first, second = directions[k], directions[(k + 1) % 3]
        u1 = np.array([math.cos(first), math.sin(first)])
        u2 = np.array([math.cos(second), math.sin(second)])
        n1 = np.array([-u1[1], u1[0]])  # towards the gap
        n2 = np.array([u2[1], -u2[0]])
        p1, p2 = (l / 2) * n1, (l / 2) * n2
        s, _ = np.linalg.solve(np.column_stack([u1, -u2]), p2 - p1)
        corners.append(p1 + s * u1)
    return np.array(corners)


def shoelace(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def circumcircle_oracle(points: np.ndarray) -> float:
    (ax, ay), (bx, by), (cx, cy) = points
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay) + (cx ** 2 + cy ** 2) * (ay - by)) / d
    uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx) + (cx ** 2 + cy ** 2) * (bx - ax)) / d
    return math.pi * ((ax - ux) ** 2 + (ay - uy) ** 2)


class TestSurfaces:
    def test_equilateral_values(self):
        assert triangle_surface(TRIANGLE, EQUILATERAL) == pytest.approx(100 * math.sqrt(3), rel=1e-12)
        assert circumcircle_surface(CIRCLE, EQUILATERAL) == pytest.approx(400 * math.pi / 3, rel=1e-12)
        assert list(side_lengths(TRIANGLE, EQUILATERAL)) == pytest.approx([20.0, 20.0, 20.0], rel=1e-12)

    def test_matches_coordinate_construction(self):
        for angles in random_domain_angles(1000):
            corners = border_triangle(20.0, angles)
            oracle_sides = [float(np.linalg.norm(corners[k] - corners[(k + 1) % 3])) for k in range(3)]
            assert triangle_surface(TRIANGLE, angles) == pytest.approx(shoelace(corners), rel=1e-9)
            assert list(side_lengths(TRIANGLE, angles)) == pytest.approx(oracle_sides, rel=1e-9)
            assert circumcircle_surface(CIRCLE, angles) == pytest.approx(circumcircle_oracle(corners), rel=1e-9)

    def test_heron_agrees_with_closed_form(self):
        for angles in random_domain_angles(200, seed=3):
            a, b, c = side_lengths(TRIANGLE, angles)
            s = (a + b + c) / 2
            heron = math.sqrt(s * (s - a) * (s - b) * (s - c))
            assert heron == pytest.approx(triangle_surface(TRIANGLE, angles), rel=1e-9)
            assert a + b > c and b + c > a and c + a > b

    def test_surfaces_invariant_under_rotation_and_reflection(self):
        for angles in random_domain_angles(100, seed=11):
            reflected = CrossroadAngles(angles.beta, angles.alpha)
            for geometry in (TRIANGLE, CIRCLE):
                expected = crossroad_surface(geometry, angles)
                for other in angles.rotations()[1:] + [reflected]:
                    assert crossroad_surface(geometry, other) == pytest.approx(expected, rel=1e-9)

    def test_circumcircle_exceeds_triangle(self):
        for angles in random_domain_angles(200, seed=5):
            assert circumcircle_surface(CIRCLE, angles) > triangle_surface(TRIANGLE, angles)

    def test_surfaces_scale_with_square_of_width(self):
        angles = CrossroadAngles(1.9, 2.4)
        small, double = CrossroadGeometry(0.001), CrossroadGeometry(0.002)
        assert triangle_surface(small, angles) / triangle_surface(double, angles) == pytest.approx(0.25, rel=1e-12)
        assert circumcircle_surface(small, angles) / circumcircle_surface(double, angles) == pytest.approx(0.25, rel=1e-12)

    def test_outside_domain_rejected(self):
        with pytest.raises(CrossroadDomainError):
            triangle_surface(TRIANGLE, CrossroadAngles(math.pi / 2, math.pi / 4))
        with pytest.raises(CrossroadDomainError):
            circumcircle_surface(CIRCLE, CrossroadAngles(-0.1, 3.0))

    def test_boundary_angles_stay_finite(self):
        angles = CrossroadAngles(math.pi, math.pi / 2)
        assert math.isfinite(triangle_surface(TRIANGLE, angles))
        assert math.isfinite(circumcircle_surface(CIRCLE, angles))

    def test_invalid_width(self):
        with pytest.raises(CrossroadDomainError):
            CrossroadGeometry(0.0)

    def test_surface_kind_from_string(self):
        assert CrossroadGeometry(20.0, 'triangle').surface_kind is SurfaceKind.TRIANGLE


class TestAngleDensity:
    def test_symmetric_crossroad(self):
        assert angle_density(EQUILATERAL) == pytest.approx(math.sqrt(3) / math.pi, abs=1e-12)
        assert angle_density(EQUILATERAL) == pytest.approx(0.551329, abs=1e-6)
        assert DENSITY_PEAK == pytest.approx(angle_density(EQUILATERAL))

    def test_zero_outside_domain(self):
        assert angle_density(CrossroadAngles(math.pi / 2, math.pi / 4)) == 0.0

    def test_positive_inside_domain(self):
        for angles in random_domain_angles(100, seed=2):
            assert angle_density(angles) > 0

    def test_normalized(self):
        assert integrate_over_domain(density) == pytest.approx(1.0, abs=1e-6)

    def test_typical_angle_sampler_stays_in_domain(self):
        alpha, beta = sample_typical_angles(5000, np.random.default_rng(0))
        assert len(alpha) == len(beta) == 5000
        assert np.all(density(alpha, beta) > 0)
        # E[alpha] = 2 pi / 3 by exchangeability of the three angles
        assert alpha.mean() == pytest.approx(2 * math.pi / 3, abs=0.03)


class TestVacancy:
    def test_empty_streets(self):
        assert mean_vacancy(0.0, CIRCLE) == 1.0
        assert mean_vacancy(0.0, TRIANGLE) == 1.0

    def test_dense_users(self):
        assert mean_vacancy(1e4, CIRCLE) < 1e-3

    def test_strictly_decreasing_in_lambda(self):
        values = [mean_vacancy(lam, CIRCLE) for lam in (0, 10, 30, 60, 100)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0 < v <= 1 for v in values)

    def test_circumcircle_vacates_faster(self):
        for lam in (10, 45, 80):
            assert mean_vacancy(lam, CIRCLE) < mean_vacancy(lam, TRIANGLE)

    def test_depends_on_lambda_times_width(self):
        for kind in SurfaceKind:
            left = mean_vacancy(60.0, CrossroadGeometry(20.0, kind))
            right = mean_vacancy(30.0, CrossroadGeometry(40.0, kind))
            assert left == pytest.approx(right, rel=1e-9)

    def test_negative_lambda(self):
        with pytest.raises(CrossroadDomainError):
            mean_vacancy(-1.0, CIRCLE)

    def test_quadrature_agrees_with_monte_carlo(self):
        alpha, beta = sample_typical_angles(10 ** 6, np.random.default_rng(2024))
        for geometry in (TRIANGLE, CIRCLE):
            for lam in (10.0, 30.0, 60.0):
                estimate, se = mean_vacancy_mc(lam, geometry, alpha, beta)
                assert abs(mean_vacancy(lam, geometry) - estimate) < 3 * se


class TestOccupation:
    def test_no_users(self):
        assert occupation_probability(OccupationInputs(0.0, 0.3, CIRCLE)) == pytest.approx(0.3, abs=1e-15)

    def test_certain_relay(self):
        for lam in (0.0, 20.0, 90.0):
            assert occupation_probability(OccupationInputs(lam, 1.0, CIRCLE)) == 1.0

    def test_bounded_below_by_p(self):
        for p in (0.0, 0.2, 0.7):
            for lam in (5.0, 50.0):
                assert occupation_probability(OccupationInputs(lam, p, TRIANGLE)) >= p

    def test_invalid_inputs(self):
        with pytest.raises(CrossroadDomainError):
            OccupationInputs(10.0, 1.5, CIRCLE)
        with pytest.raises(CrossroadDomainError):
            OccupationInputs(-1.0, 0.5, CIRCLE)

    def test_grid_surface(self):
        lambdas = np.arange(0, 101, 10.0)
        ps = np.linspace(0, 1, 11)
        grid = occupation_grid(lambdas, ps, CIRCLE)
        assert list(grid.columns) == ['lambda', 'p', 'F']
        assert len(grid) == len(lambdas) * len(ps)
        table = grid.pivot(index='lambda', columns='p', values='F')
        assert table.loc[0.0, 0.0] == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(table[1.0], 1.0)
        assert np.all(np.diff(table.to_numpy(), axis=0) >= -1e-15)
        assert np.all(np.diff(table.to_numpy(), axis=1) > -1e-15)
        assert isinstance(grid, pd.DataFrame)


class TestInversion:
    def test_no_users_returns_threshold(self):
        assert invert_for_relay_fraction(0.713, 0.0, CIRCLE) == pytest.approx(0.713, abs=1e-12)

    @pytest.mark.parametrize('p0', [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_roundtrip(self, p0):
        for geometry in (TRIANGLE, CIRCLE):
            target = occupation_probability(OccupationInputs(35.0, p0, geometry))
            assert invert_for_relay_fraction(target, 35.0, geometry) == pytest.approx(p0, abs=1e-12)

    def test_dense_users_compensate_relays(self):
        assert invert_for_relay_fraction(0.713, 60.0, CIRCLE) <= 0.0

    def test_threshold_out_of_range(self):
        with pytest.raises(CrossroadDomainError):
            invert_for_relay_fraction(1.2, 10.0, CIRCLE)
