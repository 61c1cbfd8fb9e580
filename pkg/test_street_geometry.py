"""Poisson-Voronoi street systems, their statistics and crossroad angles."""

import math
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from scipy import stats

from crossroad_model import sample_typical_angles
from errors import DegenerateWindowError
from street_geometry import (StreetSystem, Window, clip_segments, default_margin, generate_pvt,
                             sample_vertex_angles, street_stats)


def star_system(directions: list[float], center=(0.5, 0.5), arm: float = 0.3) -> StreetSystem:
    """One interior vertex joined to boundary stubs at the given directions"""
    cx, cy = center
    xy = [(cx, cy)] + [(cx + arm * math.cos(t), cy + arm * math.sin(t)) for t in directions]
    n = len(directions)
    return StreetSystem(
        vertex_xy=np.array(xy),
        vertex_boundary=np.array([False] + [True] * n),
        edge_ends=np.array([(0, k + 1) for k in range(n)], dtype=np.int64),
        edge_length=np.full(n, arm),
        window=Window(0.0, 0.0, 1.0, 1.0, margin=0.1),
        gamma_target=20.0,
        germ_intensity=100.0,
    )


class TestWindow:
    def test_square(self):
        window = Window.square(5.0, margin=0.5)
        assert window.area == 25.0
        assert window.inner() == (0.5, 0.5, 4.5, 4.5)
        assert window.inner_area == pytest.approx(16.0)

    def test_rejects_empty_extent(self):
        with pytest.raises(DegenerateWindowError):
            Window(1.0, 0.0, 1.0, 2.0)

    def test_rejects_margin_without_interior(self):
        with pytest.raises(DegenerateWindowError):
            Window.square(2.0, margin=1.0)
        with pytest.raises(DegenerateWindowError):
            Window.square(2.0, margin=-0.1)

    def test_default_margin(self):
        assert default_margin(20.0, 0.2) == pytest.approx(0.2 + 4.0 / 60.0)

    def test_degenerate_window_is_a_value_error(self):
        with pytest.raises(ValueError):
            Window.square(0.0)


class TestClipping:
    def test_segment_crossing_the_window(self):
        p0 = np.array([[-1.0, 0.5], [0.2, 0.2], [2.0, 2.0]])
        p1 = np.array([[2.0, 0.5], [0.8, 0.8], [3.0, 3.0]])
        t_lo, t_hi, keep = clip_segments(p0, p1, (0.0, 0.0, 1.0, 1.0))
        assert keep.tolist() == [True, True, False]
        assert t_lo[0] == pytest.approx(1 / 3)
        assert t_hi[0] == pytest.approx(2 / 3)
        assert (t_lo[1], t_hi[1]) == (0.0, 1.0)


class TestGeneratePvt:
    def test_deterministic_for_fixed_seed(self):
        first = generate_pvt(20.0, Window.square(5.0), 42)
        second = generate_pvt(20.0, Window.square(5.0), 42)
        assert np.array_equal(first.vertex_xy, second.vertex_xy)
        assert np.array_equal(first.edge_ends, second.edge_ends)
        assert np.array_equal(first.edge_length, second.edge_length)
        assert first.vertex_xy.tobytes() == second.vertex_xy.tobytes()

    def test_different_seeds_differ(self):
        first = generate_pvt(20.0, Window.square(2.0), 1)
        second = generate_pvt(20.0, Window.square(2.0), 2)
        assert first.vertex_count != second.vertex_count or not np.array_equal(first.vertex_xy, second.vertex_xy)

    def test_structural_invariants(self):
        s = generate_pvt(20.0, Window.square(3.0, margin=0.3), 5)
        s.validate()
        assert np.all(s.edge_length > 0)
        a, b = s.edge_points()
        assert np.allclose(np.hypot(*(b - a).T), s.edge_length, rtol=1e-9, atol=0)
        assert np.all(s.degrees[s.interior_mask] == 3)
        assert np.all(s.degrees[s.vertex_boundary] == 1)
        x0, y0, x1, y1 = s.window.bounds
        assert np.all((s.vertex_xy[:, 0] >= x0 - 1e-12) & (s.vertex_xy[:, 0] <= x1 + 1e-12))
        assert np.all((s.vertex_xy[:, 1] >= y0 - 1e-12) & (s.vertex_xy[:, 1] <= y1 + 1e-12))
        assert s.germ_intensity == pytest.approx(100.0)
        assert s.gamma_target == 20.0

    def test_crossroads_exclude_boundary_vertices(self):
        s = generate_pvt(20.0, Window.square(2.0), 9)
        assert not np.any(s.vertex_boundary[s.crossroad_ids])
        assert np.all(s.degrees[s.crossroad_ids] == 3)

    def test_vertex_count_near_mean(self):
        window = Window.square(5.0, margin=default_margin(20.0, 0.2))
        s = generate_pvt(20.0, window, 3)
        stats_ = street_stats(s)
        expected = 200.0 * window.inner_area
        assert abs(stats_.vertex_count - expected) < 3 * math.sqrt(expected) + 0.05 * expected

    def test_rejects_tiny_window(self):
        with pytest.raises(DegenerateWindowError):
            generate_pvt(20.0, Window.square(0.05), 1)

    def test_rejects_non_positive_gamma(self):
        with pytest.raises(DegenerateWindowError):
            generate_pvt(0.0, Window.square(5.0), 1)

    def test_arrays_are_read_only(self):
        s = generate_pvt(20.0, Window.square(1.0), 4)
        with pytest.raises(ValueError):
            s.edge_length[0] = 1.0

    def test_frames(self):
        s = generate_pvt(20.0, Window.square(1.0), 4)
        vertices, edges = s.to_frames()
        assert list(vertices.columns) == ['id', 'x_km', 'y_km', 'degree', 'boundary']
        assert list(edges.columns) == ['id', 'vertex_a', 'vertex_b', 'length_km']
        assert len(vertices) == s.vertex_count and len(edges) == s.edge_count


class TestStreetStats:
    def test_empty_interior(self):
        s = StreetSystem(
            vertex_xy=np.array([(0.0, 0.5), (1.0, 0.5)]),
            vertex_boundary=np.array([True, True]),
            edge_ends=np.array([(0, 1)], dtype=np.int64),
            edge_length=np.array([1.0]),
            window=Window(0.0, 0.0, 1.0, 1.0, margin=0.1),
            gamma_target=20.0,
            germ_intensity=100.0,
        )
        with pytest.raises(DegenerateWindowError):
            street_stats(s)

    def test_star_statistics(self):
        s = star_system([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
        result = street_stats(s)
        assert result.vertex_count == 1
        assert result.vertex_intensity_hat == pytest.approx(1 / 0.64)
        assert result.length_intensity_hat == pytest.approx(0.3 * 3 / 0.64)
        assert result.edge_count == 3

    @pytest.mark.slow
    def test_mean_value_relations(self):
        window = Window.square(10.0, margin=0.5)
        results = [street_stats(generate_pvt(20.0, window, seed)) for seed in range(20)]
        vertex = np.mean([r.vertex_intensity_hat for r in results])
        length = np.mean([r.length_intensity_hat for r in results])
        edges = np.mean([r.edge_count / window.inner_area for r in results])
        assert vertex / 200.0 == pytest.approx(1.0, abs=0.02)
        assert length / 20.0 == pytest.approx(1.0, abs=0.02)
        assert edges / 300.0 == pytest.approx(1.0, abs=0.02)


class TestVertexAngles:
    def test_symmetric_vertex(self):
        sample = sample_vertex_angles(star_system([0.0, 2 * math.pi / 3, 4 * math.pi / 3]))
        assert len(sample) == 1
        angles = sample.angles[0]
        assert angles.alpha == pytest.approx(2 * math.pi / 3, abs=1e-12)
        assert angles.beta == pytest.approx(2 * math.pi / 3, abs=1e-12)
        assert sample.excluded_collinear == 0

    def test_collinear_vertex_excluded(self):
        sample = sample_vertex_angles(star_system([0.0, math.pi / 2, math.pi]))
        assert len(sample) == 0
        assert sample.excluded_collinear == 1

    def test_no_interior_vertex(self):
        s = star_system([0.0, 2.0, 4.0], center=(0.05, 0.5))
        with pytest.raises(DegenerateWindowError):
            sample_vertex_angles(s)

    def test_pairs_inside_domain(self):
        s = generate_pvt(20.0, Window.square(4.0, margin=0.3), 12)
        sample = sample_vertex_angles(s)
        assert len(sample) + sample.excluded_collinear == int((s.interior_mask & (s.degrees == 3)).sum())
        assert sample.excluded_collinear <= 0.001 * len(sample)
        for angles in sample:
            assert 0 < angles.alpha < math.pi
            assert math.pi - angles.alpha < angles.beta < math.pi
            assert math.pi < angles.alpha + angles.beta < 2 * math.pi

    def test_sampled_angles_follow_typical_density(self):
        s = generate_pvt(20.0, Window.square(9.0, margin=0.5), 2025)
        sample = sample_vertex_angles(s)
        assert len(sample) >= 10_000
        edges = np.linspace(0.0, math.pi, 11)
        observed, _, _ = np.histogram2d(sample.alpha[:10_000], sample.beta[:10_000], bins=[edges, edges])

        # Bin probabilities from a large rejection sample of the density itself
        alpha, beta = sample_typical_angles(1_000_000, np.random.default_rng(99))
        reference, _, _ = np.histogram2d(alpha, beta, bins=[edges, edges])
        expected = reference / reference.sum() * observed.sum()

        usable = expected >= 5
        obs, exp = observed[usable], expected[usable]
        obs_total = obs.sum()
        _, p_value = stats.chisquare(obs, exp * obs_total / exp.sum())
        assert p_value > 0.01
