"""Users on streets, relays on crossroads and the line-of-sight connectivity graph.

Positions and ranges are in kilometers.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import sparse

from street_geometry import StreetSystem, Window, generate_pvt

logger = logging.getLogger(__name__)

# Sub-stream indices under one master seed
STREET_STREAM = 0
USER_STREAM = 1
OCCUPATION_STREAM = 2


@dataclass(frozen=True)
class NetworkParams:
    lam: float  # users per km of street
    occupation_p: float
    range_r: float  # km

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not 0.0 <= self.occupation_p <= 1.0:
            raise ValueError(f"occupation probability must lie in [0, 1], got {self.occupation_p}")
        if self.range_r < 0:
            raise ValueError(f"range must be nonnegative, got {self.range_r}")


@dataclass(frozen=True)
class ReplicateSeeds:
    street: np.random.SeedSequence
    users: np.random.SeedSequence
    occupation: np.random.SeedSequence


def seed_streams(master_seed: int, replicate: int = 0) -> ReplicateSeeds:
    """Split a master seed into independent street, user and occupation streams"""
    def stream(kind: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(master_seed, spawn_key=(replicate, kind))
    return ReplicateSeeds(stream(STREET_STREAM), stream(USER_STREAM), stream(OCCUPATION_STREAM))


@dataclass(frozen=True, eq=False)
class UserSample:
    """Users sorted by (edge, arc position)"""

    edge_id: np.ndarray
    arc: np.ndarray  # km from the edge's first vertex
    xy: np.ndarray

    def __len__(self) -> int:
        return len(self.edge_id)

    @classmethod
    def empty(cls) -> "UserSample":
        return cls(np.empty(0, dtype=np.int64), np.empty(0), np.empty((0, 2)))


def sample_users(s: StreetSystem, lam: float, seed, lambda_max: float | None = None) -> UserSample:
    """Poisson(lambda * length) users per street, uniform along it.

    With lambda_max, users are drawn at lambda_max and thinned by an independent
    uniform mark, so samples at increasing lambda are nested for a fixed seed.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    intensity = lam if lambda_max is None else lambda_max
    if lambda_max is not None and lambda_max < lam:
        raise ValueError(f"lambda_max {lambda_max} below lambda {lam}")
    if intensity == 0 or s.edge_count == 0:
        return UserSample.empty()

    rng = np.random.default_rng(seed)
    counts = rng.poisson(intensity * s.edge_length)
    edge_id = np.repeat(np.arange(s.edge_count), counts)
    arc = rng.random(len(edge_id)) * s.edge_length[edge_id]
    if lambda_max is not None:
        keep = rng.random(len(edge_id)) < lam / lambda_max
        edge_id, arc = edge_id[keep], arc[keep]

    order = np.lexsort((arc, edge_id))
    edge_id, arc = edge_id[order], arc[order]
    a, b = s.edge_points()
    direction = (b - a)[edge_id] / s.edge_length[edge_id, None]
    xy = a[edge_id] + arc[:, None] * direction
    return UserSample(edge_id=edge_id, arc=arc, xy=xy)


def occupation_marks(s: StreetSystem, seed) -> np.ndarray:
    """One uniform per crossroad; a crossroad is occupied at level p when its mark is below p"""
    return np.random.default_rng(seed).random(len(s.crossroad_ids))


def sample_occupation(s: StreetSystem, p: float, seed) -> np.ndarray:
    """Sorted ids of the crossroads equipped with a relay"""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"occupation probability must lie in [0, 1], got {p}")
    marks = occupation_marks(s, seed)
    return s.crossroad_ids[marks < p]


@dataclass(frozen=True, eq=False)
class ConnectivityGraph:
    """Undirected LOS graph: user nodes first, then occupied vertices.

    links holds each undirected link once as (i, j) with i < j.
    """

    node_xy: np.ndarray
    n_users: int
    vertex_ids: np.ndarray  # street vertex of each occupied-vertex node
    links: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.node_xy)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        n = self.n_nodes
        rows = np.concatenate([self.links[:, 0], self.links[:, 1]])
        cols = np.concatenate([self.links[:, 1], self.links[:, 0]])
        data = np.ones(len(rows), dtype=np.int8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def neighbors(self, node: int) -> list[int]:
        matrix = self.adjacency
        return sorted(matrix.indices[matrix.indptr[node]:matrix.indptr[node + 1]].tolist())

    def adjacency_lists(self) -> list[list[int]]:
        return [self.neighbors(i) for i in range(self.n_nodes)]

    def to_frames(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        """Node and link tables for debugging dumps"""
        kind = np.where(np.arange(self.n_nodes) < self.n_users, 'user', 'relay')
        vertex = np.concatenate([np.full(self.n_users, -1), self.vertex_ids])
        nodes = pd.DataFrame({
            'node': np.arange(self.n_nodes),
            'kind': kind,
            'vertex_id': vertex,
            'x_km': self.node_xy[:, 0],
            'y_km': self.node_xy[:, 1],
        })
        links = pd.DataFrame({'node_a': self.links[:, 0], 'node_b': self.links[:, 1]})
        return nodes, links


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    users: UserSample
    occupied_vertices: np.ndarray
    params: NetworkParams
    street_system: StreetSystem

    def graph(self, complete: bool = True) -> ConnectivityGraph:
        return build_graph(self.street_system, self.users, self.occupied_vertices,
                           self.params.range_r, complete=complete)


def _pairs_within(keys: np.ndarray, reach: float, consecutive_only: bool) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs i < j of sorted keys with keys[j] - keys[i] <= reach"""
    n = len(keys)
    if n < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    if consecutive_only:
        first = np.arange(n - 1)
        close = keys[1:] - keys[:-1] <= reach
        return first[close], first[close] + 1
    last = np.searchsorted(keys, keys + reach, side='right')
    counts = last - np.arange(n) - 1
    first = np.repeat(np.arange(n), counts)
    starts = np.cumsum(counts) - counts
    second = np.arange(counts.sum()) - np.repeat(starts, counts) + first + 1
    return first, second


def build_graph(s: StreetSystem, users: UserSample, occupied: np.ndarray, r: float,
                complete: bool = True) -> ConnectivityGraph:
    """Links between nodes on a common street within distance r.

    With complete=False only consecutive users along a street are linked, which
    yields the same connected components with far fewer links.
    """
    occupied = np.asarray(occupied, dtype=np.int64)
    n_users = len(users)
    is_occupied = np.zeros(s.vertex_count, dtype=bool)
    is_occupied[occupied] = True
    node_of_vertex = np.full(s.vertex_count, -1, dtype=np.int64)
    node_of_vertex[occupied] = n_users + np.arange(len(occupied))

    link_parts = []

    # (i) users on the same street; key offsets keep distinct streets out of reach
    if n_users > 1:
        spacing = np.cumsum(s.edge_length + r + 1.0) - s.edge_length
        keys = spacing[users.edge_id] + users.arc
        first, second = _pairs_within(keys, r * (1.0 + 1e-9) + 1e-12, consecutive_only=not complete)
        exact = (users.edge_id[first] == users.edge_id[second]) & \
            (np.abs(users.arc[second] - users.arc[first]) <= r)
        link_parts.append(np.stack([first[exact], second[exact]], axis=1))

    # (ii) users and the occupied endpoints of their street
    if n_users and len(occupied):
        ends = s.edge_ends[users.edge_id]
        user_nodes = np.arange(n_users)
        near_a = is_occupied[ends[:, 0]] & (users.arc <= r)
        near_b = is_occupied[ends[:, 1]] & (s.edge_length[users.edge_id] - users.arc <= r)
        link_parts.append(np.stack([user_nodes[near_a], node_of_vertex[ends[near_a, 0]]], axis=1))
        link_parts.append(np.stack([user_nodes[near_b], node_of_vertex[ends[near_b, 1]]], axis=1))

    # (iii) occupied vertices joined by a short street
    if len(occupied) > 1:
        both = is_occupied[s.edge_ends[:, 0]] & is_occupied[s.edge_ends[:, 1]] & (s.edge_length <= r)
        pair = node_of_vertex[s.edge_ends[both]]
        link_parts.append(np.sort(pair, axis=1))

    links = np.concatenate(link_parts) if link_parts else np.empty((0, 2), dtype=np.int64)
    links = links.reshape(-1, 2).astype(np.int64)

    node_xy = np.concatenate([users.xy, s.vertex_xy[occupied]]) if n_users else s.vertex_xy[occupied]
    return ConnectivityGraph(node_xy=node_xy.reshape(-1, 2), n_users=n_users,
                             vertex_ids=occupied, links=links)


def realize_network(s: StreetSystem, params: NetworkParams, master_seed: int, replicate: int = 0,
                    lambda_max: float | None = None) -> NetworkRealization:
    """Users and relays on a given street system from one master seed"""
    seeds = seed_streams(master_seed, replicate)
    users = sample_users(s, params.lam, seeds.users, lambda_max=lambda_max)
    occupied = sample_occupation(s, params.occupation_p, seeds.occupation)
    return NetworkRealization(users=users, occupied_vertices=occupied, params=params, street_system=s)


def realize_streets(gamma: float, window: Window, master_seed: int, replicate: int = 0) -> StreetSystem:
    return generate_pvt(gamma, window, seed_streams(master_seed, replicate).street)
