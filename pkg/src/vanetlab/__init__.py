"""vanetlab: a VANET connectivity laboratory on an urban grid.

Microscopic grid traffic under three intersection regimes, unit-disk
connectivity metrics over the equipped vehicles, closed-form percolation
predictions, and RSU-assisted hybrid connectivity.
"""

from .connectivity import (ClusterReport, ConnectivitySnapshot, UnionFind,
                           build_graph, cluster, critical_range,
                           snapshot_from_points, thin_by_penetration)
from .grid import LanePosition, RoadNetwork, SegmentClass, build_grid
from .harness import (AggregateRow, ScenarioConfig, compare_to_theory,
                      expand_matrix, run_scenario, scenario_from_options,
                      sweep, theory_curve)
from .percolation import (LatticePercolation, PoissonLineModel,
                          expected_isolated, lambda_from_flow, lattice_theta,
                          p_lower, p_upper, predict_transition_density)
from .rsu import RsuDeployment, RsuPolicy, hybrid_cluster, place_rsus
from .traffic import (DensitySample, DestinationPolicy, DriverParams, Regime,
                      SignalPlan, SimConfig, Simulation, SimulationError,
                      make_signal_plan, mean_speed, measure_density)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow", "ClusterReport", "ConnectivitySnapshot", "DensitySample",
    "DestinationPolicy", "DriverParams", "LanePosition", "LatticePercolation",
    "PoissonLineModel", "Regime", "RoadNetwork", "RsuDeployment", "RsuPolicy",
    "ScenarioConfig", "SegmentClass", "SignalPlan", "SimConfig", "Simulation",
    "SimulationError", "UnionFind", "build_graph", "build_grid", "cluster",
    "compare_to_theory", "critical_range", "expand_matrix", "expected_isolated",
    "hybrid_cluster", "lambda_from_flow", "lattice_theta", "make_signal_plan",
    "mean_speed", "measure_density", "p_lower", "p_upper", "place_rsus",
    "predict_transition_density", "run_scenario", "scenario_from_options",
    "snapshot_from_points", "sweep", "theory_curve", "thin_by_penetration",
]
