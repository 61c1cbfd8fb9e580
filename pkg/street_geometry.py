"""Poisson-Voronoi street systems in a rectangular observation window.

Lengths are in kilometers throughout this module.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.spatial import Voronoi

from config import ANGLE_TOLERANCE, GERM_DILATION
from crossroad_model import CrossroadAngles
from errors import DegenerateWindowError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Window:
    """Rectangular observation window with an interior margin band"""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    margin: float = 0.0

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DegenerateWindowError(f"window has non-positive extent: {self}")
        if self.margin < 0 or 2 * self.margin >= min(self.width, self.height):
            raise DegenerateWindowError(
                f"margin {self.margin} km leaves no interior in a {self.width}x{self.height} km window")

    @classmethod
    def square(cls, side: float, margin: float = 0.0) -> "Window":
        return cls(0.0, 0.0, side, side, margin)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def inner(self) -> tuple[float, float, float, float]:
        """Bounds of the interior region used for statistics"""
        m = self.margin
        return (self.x_min + m, self.y_min + m, self.x_max - m, self.y_max - m)

    @property
    def inner_area(self) -> float:
        x0, y0, x1, y1 = self.inner()
        return (x1 - x0) * (y1 - y0)

    def with_margin(self, margin: float) -> "Window":
        return Window(self.x_min, self.y_min, self.x_max, self.y_max, margin)

    def dilated(self, amount: float) -> tuple[float, float, float, float]:
        return (self.x_min - amount, self.y_min - amount, self.x_max + amount, self.y_max + amount)


def default_margin(gamma: float, range_r: float) -> float:
    """r plus one mean PVT edge length (4 / 3 gamma)"""
    return range_r + 4.0 / (3.0 * gamma)


def _strictly_inside(xy: np.ndarray, bounds: tuple[float, float, float, float]) -> np.ndarray:
    x0, y0, x1, y1 = bounds
    return (xy[:, 0] > x0) & (xy[:, 0] < x1) & (xy[:, 1] > y0) & (xy[:, 1] < y1)


def clip_segments(p0: np.ndarray, p1: np.ndarray,
                  bounds: tuple[float, float, float, float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Liang-Barsky clipping of segments p0->p1 against a rectangle.

    Returns the entry and exit parameters along each segment and a mask of the
    segments keeping a part of positive length inside the rectangle.
    """
    x0, y0, x1, y1 = bounds
    d = p1 - p0
    t_lo = np.zeros(len(p0))
    t_hi = np.ones(len(p0))
    keep = np.ones(len(p0), dtype=bool)
    sides = (
        (-d[:, 0], p0[:, 0] - x0),
        (d[:, 0], x1 - p0[:, 0]),
        (-d[:, 1], p0[:, 1] - y0),
        (d[:, 1], y1 - p0[:, 1]),
    )
    with np.errstate(divide='ignore', invalid='ignore'):
        for p, q in sides:
            parallel = p == 0
            keep &= ~(parallel & (q < 0))
            ratio = q / np.where(parallel, 1.0, p)
            entering = p < 0
            leaving = p > 0
            t_lo = np.where(entering, np.maximum(t_lo, ratio), t_lo)
            t_hi = np.where(leaving, np.minimum(t_hi, ratio), t_hi)
    keep &= t_lo < t_hi
    return t_lo, t_hi, keep


@dataclass(frozen=True, eq=False)
class StreetSystem:
    """Street graph of a clipped Poisson-Voronoi tessellation.

    Vertex and edge ids are array indices. Boundary vertices are the cut
    endpoints of streets leaving the window; they have degree 1.
    """

    vertex_xy: np.ndarray
    vertex_boundary: np.ndarray
    edge_ends: np.ndarray
    edge_length: np.ndarray
    window: Window
    gamma_target: float
    germ_intensity: float

    def __post_init__(self) -> None:
        for array in (self.vertex_xy, self.vertex_boundary, self.edge_ends, self.edge_length):
            array.flags.writeable = False

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_xy)

    @property
    def edge_count(self) -> int:
        return len(self.edge_ends)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edge_ends.ravel(), minlength=self.vertex_count)

    @cached_property
    def crossroad_ids(self) -> np.ndarray:
        """Non-boundary degree-3 vertices: the crossroads that may carry relays"""
        return np.flatnonzero(~self.vertex_boundary & (self.degrees == 3))

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """Vertices strictly inside the margin-clipped interior"""
        return _strictly_inside(self.vertex_xy, self.window.inner()) & ~self.vertex_boundary

    @cached_property
    def total_length(self) -> float:
        return float(self.edge_length.sum())

    def edge_points(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertex_xy[self.edge_ends[:, 0]], self.vertex_xy[self.edge_ends[:, 1]]

    def incident_neighbors(self, vertex_ids: np.ndarray, degree: int) -> np.ndarray:
        """Neighbor ids of vertices that all have the given degree, one row per vertex"""
        ends = np.concatenate([self.edge_ends[:, 0], self.edge_ends[:, 1]])
        others = np.concatenate([self.edge_ends[:, 1], self.edge_ends[:, 0]])
        order = np.argsort(ends, kind='stable')
        offsets = np.concatenate([[0], np.cumsum(self.degrees)[:-1]])
        slots = offsets[vertex_ids][:, None] + np.arange(degree)[None, :]
        return others[order[slots]]

    def validate(self) -> None:
        """Check the structural invariants, raising ValueError on the first violation"""
        if self.edge_count and (self.edge_ends.min() < 0 or self.edge_ends.max() >= self.vertex_count):
            raise ValueError("edge references a missing vertex")
        if np.any(self.edge_length <= 0):
            raise ValueError("edge with non-positive length")
        a, b = self.edge_points()
        euclid = np.hypot(*(b - a).T)
        if not np.allclose(euclid, self.edge_length, rtol=1e-9, atol=0.0):
            raise ValueError("edge length differs from endpoint distance")
        if np.any(self.degrees[self.interior_mask] != 3):
            raise ValueError("interior vertex with degree other than 3")

    def to_frames(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        """Vertex and edge tables for CSV dumps"""
        vertices = pd.DataFrame({
            'id': np.arange(self.vertex_count),
            'x_km': self.vertex_xy[:, 0],
            'y_km': self.vertex_xy[:, 1],
            'degree': self.degrees,
            'boundary': self.vertex_boundary.astype(int),
        })
        edges = pd.DataFrame({
            'id': np.arange(self.edge_count),
            'vertex_a': self.edge_ends[:, 0],
            'vertex_b': self.edge_ends[:, 1],
            'length_km': self.edge_length,
        })
        return vertices, edges


@dataclass(frozen=True)
class StreetStats:
    length_intensity_hat: float  # km / km^2
    vertex_intensity_hat: float  # km^-2
    mean_edge_length: float  # km
    vertex_count: int
    edge_count: int

    @property
    def edge_intensity_hat(self) -> float:
        return self.edge_count * self.vertex_intensity_hat / self.vertex_count


def generate_pvt(gamma: float, window: Window, seed) -> StreetSystem:
    """Voronoi street system of Poisson germs with intensity gamma^2 / 4, clipped to the window"""
    if not gamma > 0:
        raise DegenerateWindowError(f"street length intensity must be positive, got {gamma}")
    germ_intensity = gamma ** 2 / 4.0
    if germ_intensity * window.area < 1.0:
        raise DegenerateWindowError(
            f"window of {window.area:.4g} km^2 expects fewer than one germ at gamma={gamma}")

    rng = np.random.default_rng(seed)
    gx0, gy0, gx1, gy1 = window.dilated(GERM_DILATION / math.sqrt(germ_intensity))
    n_germs = rng.poisson(germ_intensity * (gx1 - gx0) * (gy1 - gy0))
    if n_germs < 4:
        raise DegenerateWindowError(f"only {n_germs} germs drawn, cannot tessellate")
    germs = rng.uniform((gx0, gy0), (gx1, gy1), size=(n_germs, 2))

    vor = Voronoi(germs)
    ridges = np.asarray(vor.ridge_vertices, dtype=np.int64)
    ridges = ridges[(ridges >= 0).all(axis=1)]
    p0 = vor.vertices[ridges[:, 0]]
    p1 = vor.vertices[ridges[:, 1]]
    t_lo, t_hi, keep = clip_segments(p0, p1, window.bounds)
    ridges, p0, p1, t_lo, t_hi = ridges[keep], p0[keep], p1[keep], t_lo[keep], t_hi[keep]

    # Original tessellation vertices keep their position; cut ends become boundary vertices
    inside0 = _strictly_inside(p0, window.bounds)
    inside1 = _strictly_inside(p1, window.bounds)
    used = np.unique(np.concatenate([ridges[inside0, 0], ridges[inside1, 1]]))
    remap = np.full(len(vor.vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))

    d = p1 - p0
    cut0 = p0 + t_lo[:, None] * d
    cut1 = p0 + t_hi[:, None] * d
    n_inner = len(used)
    n_cut0 = int((~inside0).sum())
    ends = np.empty((len(ridges), 2), dtype=np.int64)
    ends[inside0, 0] = remap[ridges[inside0, 0]]
    ends[~inside0, 0] = n_inner + np.arange(n_cut0)
    ends[inside1, 1] = remap[ridges[inside1, 1]]
    ends[~inside1, 1] = n_inner + n_cut0 + np.arange(int((~inside1).sum()))

    vertex_xy = np.concatenate([vor.vertices[used], cut0[~inside0], cut1[~inside1]])
    vertex_boundary = np.zeros(len(vertex_xy), dtype=bool)
    vertex_boundary[n_inner:] = True
    edge_length = np.hypot(*(vertex_xy[ends[:, 1]] - vertex_xy[ends[:, 0]]).T)

    positive = edge_length > 0
    if not positive.all():
        ends, edge_length = ends[positive], edge_length[positive]

    system = StreetSystem(
        vertex_xy=vertex_xy,
        vertex_boundary=vertex_boundary,
        edge_ends=ends,
        edge_length=edge_length,
        window=window,
        gamma_target=gamma,
        germ_intensity=germ_intensity,
    )
    logger.debug("PVT gamma=%s: %d germs, %d vertices, %d edges",
                 gamma, n_germs, system.vertex_count, system.edge_count)
    return system


def street_stats(s: StreetSystem) -> StreetStats:
    """Empirical intensities of the street system over the interior region"""
    inner = s.window.inner()
    area = s.window.inner_area
    crossroads = s.interior_mask & (s.degrees == 3)
    vertex_count = int(crossroads.sum())
    if vertex_count == 0:
        raise DegenerateWindowError("no degree-3 vertex inside the interior region")

    a, b = s.edge_points()
    t_lo, t_hi, keep = clip_segments(a, b, inner)
    inner_length = float(((t_hi - t_lo) * s.edge_length)[keep].sum())

    midpoints = 0.5 * (a + b)
    in_interior = _strictly_inside(midpoints, inner)
    edge_count = int(in_interior.sum())
    mean_edge_length = float(s.edge_length[in_interior].mean()) if edge_count else 0.0

    return StreetStats(
        length_intensity_hat=inner_length / area,
        vertex_intensity_hat=vertex_count / area,
        mean_edge_length=mean_edge_length,
        vertex_count=vertex_count,
        edge_count=edge_count,
    )


@dataclass(frozen=True)
class VertexAngleSample:
    """Angle pairs of the interior crossroads and the exclusion diagnostics"""

    angles: list[CrossroadAngles]
    vertex_ids: np.ndarray
    excluded_collinear: int

    def __len__(self) -> int:
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([a.alpha for a in self.angles])

    @property
    def beta(self) -> np.ndarray:
        return np.array([a.beta for a in self.angles])


def _vertex_gaps(s: StreetSystem, vertex_ids: np.ndarray) -> np.ndarray:
    """Consecutive angles between the three incident street directions"""
    neighbors = s.incident_neighbors(vertex_ids, 3)
    delta = s.vertex_xy[neighbors] - s.vertex_xy[vertex_ids][:, None, :]
    directions = np.sort(np.mod(np.arctan2(delta[..., 1], delta[..., 0]), TWO_PI), axis=1)
    return np.stack([
        directions[:, 1] - directions[:, 0],
        directions[:, 2] - directions[:, 1],
        TWO_PI - (directions[:, 2] - directions[:, 0]),
    ], axis=1)


def sample_vertex_angles(s: StreetSystem) -> VertexAngleSample:
    """(alpha, beta) pairs of the interior degree-3 vertices, inside the angle-density domain"""
    vertex_ids = np.flatnonzero(s.interior_mask & (s.degrees == 3))
    if len(vertex_ids) == 0:
        raise DegenerateWindowError("no interior degree-3 vertex to sample angles from")

    gaps = _vertex_gaps(s, vertex_ids)
    collinear = np.any((np.abs(gaps - math.pi) <= ANGLE_TOLERANCE) | (gaps <= ANGLE_TOLERANCE), axis=1)

    # Each rotation (g_k, g_k+1) is a candidate pair; keep those inside the domain
    alpha = gaps
    beta = np.roll(gaps, -1, axis=1)
    valid = (alpha < math.pi) & (beta < math.pi) & (alpha + beta > math.pi) & ~collinear[:, None]
    n_valid = valid.sum(axis=1)
    usable = n_valid > 0

    # Pick among the valid rotations by vertex id so the choice ignores geometry
    choice = np.zeros(len(vertex_ids), dtype=np.int64)
    choice[usable] = vertex_ids[usable] % n_valid[usable]
    rank = np.cumsum(valid, axis=1) - 1
    column = np.argmax(valid & (rank == choice[:, None]), axis=1)

    rows = np.flatnonzero(usable)
    angles = [CrossroadAngles(float(alpha[i, column[i]]), float(beta[i, column[i]])) for i in rows]
    excluded = int((~usable).sum())
    if excluded:
        logger.warning("%d of %d interior vertices excluded as collinear", excluded, len(vertex_ids))
    return VertexAngleSample(angles=angles, vertex_ids=vertex_ids[rows], excluded_collinear=excluded)
