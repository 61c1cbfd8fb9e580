#!/usr/bin/env python3
"""
Simple test script to verify all modules can be imported correctly.
"""

import sys
import os

# Add current directory to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))


def test_imports() -> None:
    """Test that all modules can be imported"""
    print("Testing module imports...")

    from enums import SurfaceKind, CrossingDirection
    print("✓ enums.py imported successfully")

    from config import CONFIG_SECTIONS, TOOL_VERSION
    print("✓ config.py imported successfully")

    from street_geometry import generate_pvt, Window
    print("✓ street_geometry.py imported successfully")

    from crossroad_model import mean_vacancy, CrossroadGeometry
    print("✓ crossroad_model.py imported successfully")

    from network_realization import realize_network, NetworkParams
    print("✓ network_realization.py imported successfully")

    from percolation_engine import estimate_p_star
    print("✓ percolation_engine.py imported successfully")

    from relay_planner import minimal_relay_proportion, relay_curve
    print("✓ relay_planner.py imported successfully")

    from econo_model import cumulated_revenue, CostScenario
    print("✓ econo_model.py imported successfully")

    from scenario_cli import main
    print("✓ scenario_cli.py imported successfully")


def test_basic_functionality() -> None:
    """Test basic functionality of imported modules"""
    print("\nTesting basic functionality...")

    from enums import SurfaceKind
    assert SurfaceKind("circumcircle") is SurfaceKind.CIRCUMCIRCLE
    print(f"✓ Enum values work: {[kind.value for kind in SurfaceKind]}")

    from config import CONFIG_SECTIONS
    assert set(CONFIG_SECTIONS) == {'street', 'network', 'crossroad', 'percolation', 'economics'}
    print(f"✓ Config sections: {', '.join(CONFIG_SECTIONS)}")

    from econo_model import CostScenario, deployment_schedule
    assert deployment_schedule(CostScenario()).stock_at(30) == 1000
    print("✓ Deployment schedule reaches the full fleet")


def test_example_walkthrough(capsys) -> None:
    """The example script runs end to end"""
    import example_usage
    example_usage.main()
    assert "Example completed successfully!" in capsys.readouterr().out


def test_smoke_runner(capsys) -> None:
    """The script entry point reports the planner checks"""
    main()
    printed = capsys.readouterr().out
    assert "Relay planner smoke checks" in printed
    assert "reference schedule reaches 1000 relays" in printed
    assert "pip install" not in printed


def main() -> None:
    """Import every planner module and build the reference fleet schedule"""
    print("Relay planner smoke checks")
    print("-" * 40)

    failed = []
    for check in (test_imports, test_basic_functionality):
        try:
            check()
        except Exception as e:
            print(f"✗ {check.__name__}: {e}")
            failed.append(check.__name__)

    print("-" * 40)
    if failed:
        print(f"{len(failed)} smoke check(s) failed: {', '.join(failed)}")
        sys.exit(1)
    print("Modules import and the reference schedule reaches 1000 relays")


if __name__ == "__main__":
    main()
