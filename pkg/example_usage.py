#!/usr/bin/env python3
"""
Example usage of the relay planner components.

This script walks through the building blocks one at a time
without going through the command-line front end.
"""

import sys
import os

# Add current directory to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import math

from enums import SurfaceKind
from config import ASYMPTOTIC_P_STAR, ECONOMICS_CONFIG
from street_geometry import StreetSystem, Window, default_margin, sample_vertex_angles, street_stats
from crossroad_model import (CrossroadAngles, CrossroadGeometry, OccupationInputs, angle_density,
                             crossroad_surface, occupation_probability)
from network_realization import NetworkParams, realize_network, realize_streets
from percolation_engine import crossing_indicator, default_crossing_spec, largest_component
from relay_planner import compensation_lambda, minimal_relay_proportion, relay_curve
from econo_model import CostScenario, cumulated_revenue, deployment_schedule, user_density


def example_crossroad_usage() -> None:
    """Demonstrate the symmetric crossroad"""
    print("=== Crossroad Example ===")

    symmetric = CrossroadAngles(2 * math.pi / 3, 2 * math.pi / 3)
    for kind in SurfaceKind:
        geometry = CrossroadGeometry(20.0, kind)
        print(f"{kind.value} surface at l=20 m: {crossroad_surface(geometry, symmetric):.2f} m^2")
    print(f"Angle density at the symmetric crossroad: {angle_density(symmetric):.6f}")

    geometry = CrossroadGeometry(20.0)
    for lam in (0.0, 30.0, 60.0):
        occupied = occupation_probability(OccupationInputs(lam, 0.2, geometry))
        print(f"F(lambda={lam:g}, p=0.2) = {occupied:.4f}")


def example_street_usage() -> StreetSystem:
    """Demonstrate a street system realization"""
    print("\n=== Street System Example ===")

    window = Window.square(3.0, margin=default_margin(20.0, 0.2))
    streets = realize_streets(20.0, window, master_seed=1)
    stats = street_stats(streets)
    print(f"Vertices: {streets.vertex_count}, edges: {streets.edge_count}")
    print(f"Vertex intensity: {stats.vertex_intensity_hat:.1f} /km^2 (mean 200)")
    print(f"Length intensity: {stats.length_intensity_hat:.2f} km/km^2 (mean 20)")

    sample = sample_vertex_angles(streets)
    print(f"Crossroad angle pairs sampled: {len(sample)}")
    return streets


def example_network_usage(streets: StreetSystem) -> None:
    """Demonstrate users, relays and the line-of-sight graph"""
    print("\n=== Network Example ===")

    realization = realize_network(streets, NetworkParams(lam=45.0, occupation_p=0.5, range_r=0.2), master_seed=1)
    graph = realization.graph()
    size, _ = largest_component(graph)
    spec = default_crossing_spec(0.2, 20.0)
    print(f"Nodes: {graph.n_nodes} ({graph.n_users} users), links: {len(graph.links)}")
    print(f"Largest component: {size} nodes")
    print(f"Left-right crossing: {crossing_indicator(graph, streets.window, spec)}")


def example_relay_usage() -> None:
    """Demonstrate the relay proportion with a known threshold"""
    print("\n=== Relay Planner Example ===")

    geometry = CrossroadGeometry(20.0)
    plan = minimal_relay_proportion(45.0, 0.2, geometry, p_star=ASYMPTOTIC_P_STAR)
    print(f"p_c at lambda=45, r=200 m: {plan.p_c_hat:.3f}")

    rows = relay_curve(range(0, 101, 10), 0.2, 20.0, p_star=ASYMPTOTIC_P_STAR)
    for row in rows[::2]:
        print(f"  lambda={row.lam:5.1f}  triangle={row.p_c_triangle:.3f}  circle={row.p_c_circle:.3f}")
    print(f"Users alone suffice from lambda={compensation_lambda(rows):g}")


def example_econ_usage() -> None:
    """Demonstrate the business case"""
    print("\n=== Economics Example ===")

    scenario = CostScenario()
    schedule = deployment_schedule(scenario)
    print(f"CAPEX per relay: {ECONOMICS_CONFIG['c_capex']}")
    print(f"Relays after {scenario.t_critical} months: {schedule.stock_at(scenario.t_critical)}")
    print(f"lambda(T_CRITICAL) = {user_density(scenario.t_critical, scenario):.2f} users/km")
    print(cumulated_revenue(scenario).summary())


def main() -> None:
    """Run all examples"""
    print("📡 Relay Planner - Components Example")
    print("=" * 50)

    example_crossroad_usage()
    streets = example_street_usage()
    example_network_usage(streets)
    example_relay_usage()
    example_econ_usage()

    print("\n" + "=" * 50)
    print("Example completed successfully!")
    print("\nTo run the command-line front end, use: python main.py --help")


if __name__ == "__main__":
    main()
