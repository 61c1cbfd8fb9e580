"""Window-crossing decisions and estimation of the critical occupation probability p*."""

import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
import pandas as pd
from scipy.optimize import isotonic_regression
from scipy.sparse.csgraph import connected_components
from tqdm import tqdm

from config import (BOOTSTRAP_RESAMPLES, COARSE_SWEEP_POINTS, CROSSING_LEVEL,
                    MIN_INTERIOR_VERTICES, REFINE_SWEEP_POINTS)
from enums import CrossingDirection
from errors import FiniteSizeError
from network_realization import (ConnectivityGraph, build_graph, occupation_marks,
                                 sample_users, seed_streams)
from street_geometry import Window, generate_pvt

logger = logging.getLogger(__name__)

BOOTSTRAP_STREAM = (2 ** 32 - 1,)


@dataclass(frozen=True)
class CrossingSpec:
    direction: CrossingDirection = CrossingDirection.LEFT_RIGHT
    contact_band: float = 0.2  # km

    def check(self, window: Window) -> None:
        if not 0 < self.contact_band < window.width / 4:
            raise ValueError(
                f"contact band {self.contact_band} km must lie in (0, {window.width / 4}) km")
        if self.direction is not CrossingDirection.LEFT_RIGHT and not self.contact_band < window.height / 4:
            raise ValueError(f"contact band {self.contact_band} km too wide for the window height")


def default_crossing_spec(range_r: float, gamma: float,
                          direction: CrossingDirection = CrossingDirection.LEFT_RIGHT) -> CrossingSpec:
    """Contact band r, or one mean street length when r is zero"""
    band = range_r if range_r > 0 else 4.0 / (3.0 * gamma)
    return CrossingSpec(direction=direction, contact_band=band)


@dataclass(frozen=True)
class CrossingPoint:
    p: float
    probability: float
    std_error: float
    replicates: int


@dataclass(frozen=True)
class PercolationEstimate:
    p_star_hat: float
    std_error: float
    crossing_curve: list[CrossingPoint]
    window: Window
    lam: float
    range_r: float
    gamma: float
    never_percolates: bool = False
    always_percolates: bool = False
    thresholds: np.ndarray = field(default=None, repr=False, compare=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'p': [pt.p for pt in self.crossing_curve],
            'crossing_prob': [pt.probability for pt in self.crossing_curve],
            'std_error': [pt.std_error for pt in self.crossing_curve],
            'replicates': [pt.replicates for pt in self.crossing_curve],
        })

    def summary(self) -> str:
        line = f"p_star={self.p_star_hat:.9g} se={self.std_error:.9g}"
        if self.never_percolates:
            line += " never_percolates"
        if self.always_percolates:
            line += " always_percolates"
        return line


def component_labels(g: ConnectivityGraph) -> np.ndarray:
    _, labels = connected_components(g.adjacency, directed=False)
    return labels


def largest_component(g: ConnectivityGraph) -> tuple[int, set[int]]:
    """Largest connected component; ties go to the component holding the smallest node id"""
    if g.n_nodes == 0:
        return 0, set()
    labels = component_labels(g)
    sizes = np.bincount(labels)
    # np.unique returns components ordered by label with their first (smallest) node
    unique_labels, first_node = np.unique(labels, return_index=True)
    candidates = unique_labels[sizes[unique_labels] == sizes.max()]
    best = candidates[np.argmin(first_node[np.searchsorted(unique_labels, candidates)])]
    members = np.flatnonzero(labels == best)
    return int(len(members)), set(members.tolist())


def _spans(labels: np.ndarray, low: np.ndarray, high: np.ndarray) -> bool:
    return np.intersect1d(labels[low], labels[high]).size > 0


def crossing_indicator(g: ConnectivityGraph, window: Window, spec: CrossingSpec) -> bool:
    """Whether one component touches both contact bands of the requested direction(s)"""
    if g.n_nodes == 0:
        return False
    labels = component_labels(g)
    x, y = g.node_xy[:, 0], g.node_xy[:, 1]
    band = spec.contact_band
    horizontal = _spans(labels, x <= window.x_min + band, x >= window.x_max - band)
    if spec.direction is CrossingDirection.LEFT_RIGHT:
        return horizontal
    vertical = _spans(labels, y <= window.y_min + band, y >= window.y_max - band)
    if spec.direction is CrossingDirection.TOP_BOTTOM:
        return vertical
    return horizontal and vertical


@dataclass(frozen=True)
class PercolationSetup:
    """Everything a replicate needs, picklable for worker processes"""

    gamma: float
    lam: float
    range_r: float
    window: Window
    spec: CrossingSpec
    master_seed: int
    lambda_max: float | None = None


class ReplicateWorld:
    """Street system, users and coupled occupation marks of one replicate"""

    def __init__(self, setup: PercolationSetup, replicate: int) -> None:
        seeds = seed_streams(setup.master_seed, replicate)
        self.setup = setup
        self.streets = generate_pvt(setup.gamma, setup.window, seeds.street)
        self.users = sample_users(self.streets, setup.lam, seeds.users, lambda_max=setup.lambda_max)
        self.marks = occupation_marks(self.streets, seeds.occupation)
        order = np.argsort(self.marks, kind='stable')
        self.by_mark = self.streets.crossroad_ids[order]
        self.sorted_marks = self.marks[order]

    def crosses_with(self, occupied: np.ndarray) -> bool:
        g = build_graph(self.streets, self.users, occupied, self.setup.range_r, complete=False)
        return crossing_indicator(g, self.setup.window, self.setup.spec)

    def crosses(self, p: float) -> bool:
        return self.crosses_with(self.streets.crossroad_ids[self.marks < p])

    def threshold(self) -> float:
        """Occupation level t such that the window is crossed exactly when p > t"""
        n = len(self.by_mark)
        if self.crosses_with(self.by_mark[:0]):
            return -math.inf
        if n == 0 or not self.crosses_with(self.by_mark):
            return math.inf
        lo, hi = 0, n  # lo occupied crossroads never cross, hi always do
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.crosses_with(self.by_mark[:mid]):
                hi = mid
            else:
                lo = mid
        return float(self.sorted_marks[hi - 1])


def _replicate_threshold(task: tuple[PercolationSetup, int]) -> float:
    setup, replicate = task
    return ReplicateWorld(setup, replicate).threshold()


def _replicate_crosses(task: tuple[PercolationSetup, int, float]) -> bool:
    setup, replicate, p = task
    return ReplicateWorld(setup, replicate).crosses(p)


def _map_replicates(fn, tasks: list, threads: int, progress: bool) -> list:
    """Ordered map over replicate tasks, so results do not depend on scheduling"""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tqdm(tasks, disable=not progress, desc="replicates")]
    with Pool(processes=min(threads, len(tasks))) as pool:
        return list(tqdm(pool.imap(fn, tasks), total=len(tasks), disable=not progress, desc="replicates"))


def _binomial_se(q: float, n: int) -> float:
    return math.sqrt(q * (1.0 - q) / n) if n else 0.0


def crossing_probability(gamma: float, lam: float, r: float, p: float, window: Window,
                         replicates: int, master_seed: int, spec: CrossingSpec | None = None,
                         threads: int = 1, lambda_max: float | None = None) -> tuple[float, float]:
    """Fraction of replicates whose graph crosses the window, with its binomial standard error"""
    if replicates < 1:
        raise ValueError("at least one replicate is required")
    spec = spec or default_crossing_spec(r, gamma)
    spec.check(window)
    setup = PercolationSetup(gamma, lam, r, window, spec, master_seed, lambda_max)
    hits = _map_replicates(_replicate_crosses, [(setup, i, p) for i in range(replicates)], threads, False)
    estimate = sum(hits) / replicates
    return estimate, _binomial_se(estimate, replicates)


def _level_crossing(grid: np.ndarray, probabilities: np.ndarray, weights: np.ndarray,
                    level: float = CROSSING_LEVEL) -> float:
    """Where the isotonic fit of the crossing curve reaches the level, linearly interpolated"""
    fitted = isotonic_regression(probabilities, weights=weights, increasing=True).x
    above = np.flatnonzero(fitted >= level)
    if len(above) == 0:
        return float(grid[-1])
    k = above[0]
    if fitted[k] == level:
        last = np.flatnonzero(fitted == level)[-1]
        return float(0.5 * (grid[k] + grid[last]))
    if k == 0:
        return float(grid[0])
    x0, x1, y0, y1 = grid[k - 1], grid[k], fitted[k - 1], fitted[k]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def _sweep_grid(thresholds: np.ndarray) -> np.ndarray:
    """Coarse equally spaced grid refined once inside the bracket around the crossing level"""
    coarse = np.linspace(0.0, 1.0, COARSE_SWEEP_POINTS)
    probabilities = (coarse[:, None] > thresholds[None, :]).mean(axis=1)
    k = int(np.argmax(probabilities >= CROSSING_LEVEL))
    if k == 0:
        return coarse
    refined = np.linspace(coarse[k - 1], coarse[k], REFINE_SWEEP_POINTS + 2)[1:-1]
    return np.union1d(coarse, refined)


def estimate_p_star(gamma: float, lam: float, r: float, window: Window, replicates_per_point: int,
                    master_seed: int, spec: CrossingSpec | None = None, threads: int = 1,
                    bootstrap: int = BOOTSTRAP_RESAMPLES, progress: bool = False,
                    lambda_max: float | None = None) -> PercolationEstimate:
    """Occupation probability at which the crossing probability reaches one half"""
    # Counted on the street system of replicate 0
    crossroads = len(generate_pvt(gamma, window, seed_streams(master_seed, 0).street).crossroad_ids)
    if crossroads < MIN_INTERIOR_VERTICES:
        raise FiniteSizeError(
            f"window holds {crossroads} interior crossroads, at least {MIN_INTERIOR_VERTICES} are needed")
    if replicates_per_point < 1:
        raise ValueError("at least one replicate is required")
    spec = spec or default_crossing_spec(r, gamma)
    spec.check(window)

    setup = PercolationSetup(gamma, lam, r, window, spec, master_seed, lambda_max)
    tasks = [(setup, i) for i in range(replicates_per_point)]
    thresholds = np.array(_map_replicates(_replicate_threshold, tasks, threads, progress))
    n = len(thresholds)

    grid = _sweep_grid(thresholds)
    probabilities = (grid[:, None] > thresholds[None, :]).mean(axis=1)
    curve = [CrossingPoint(float(p), float(q), _binomial_se(float(q), n), n)
             for p, q in zip(grid, probabilities)]

    common = dict(crossing_curve=curve, window=window, lam=lam, range_r=r, gamma=gamma, thresholds=thresholds)
    if probabilities[-1] < CROSSING_LEVEL:
        logger.warning("no crossing at full occupation (lambda=%s, r=%s): never percolates", lam, r)
        return PercolationEstimate(p_star_hat=1.0, std_error=0.0, never_percolates=True, **common)
    if probabilities[0] > CROSSING_LEVEL:
        logger.warning("crossing without relays (lambda=%s, r=%s): always percolates", lam, r)
        return PercolationEstimate(p_star_hat=0.0, std_error=0.0, always_percolates=True, **common)

    weights = np.full(len(grid), float(n))
    p_star_hat = _level_crossing(grid, probabilities, weights)

    rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=BOOTSTRAP_STREAM))
    resampled = []
    for _ in range(bootstrap):
        sample = thresholds[rng.integers(0, n, n)]
        resampled.append(_level_crossing(grid, (grid[:, None] > sample[None, :]).mean(axis=1), weights))
    std_error = float(np.std(resampled, ddof=1)) if bootstrap > 1 else 0.0

    logger.info("p* estimate lambda=%s r=%s: %.4f (se %.4f, %d replicates)", lam, r, p_star_hat, std_error, n)
    return PercolationEstimate(p_star_hat=p_star_hat, std_error=std_error, **common)


@dataclass(frozen=True)
class FiniteSizeReport:
    difference: float
    bound: float

    @property
    def stable(self) -> bool:
        return self.difference < self.bound


def finite_size_check(first: PercolationEstimate, second: PercolationEstimate) -> FiniteSizeReport:
    """Compare estimates on two windows against 2 (se1 + se2) + 0.02"""
    difference = abs(first.p_star_hat - second.p_star_hat)
    bound = 2.0 * (first.std_error + second.std_error) + 0.02
    report = FiniteSizeReport(difference=difference, bound=bound)
    if not report.stable:
        logger.warning("p* differs by %.4f between windows (bound %.4f)", difference, bound)
    return report
